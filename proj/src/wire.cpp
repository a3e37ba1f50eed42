#include "mmteleop/wire.hpp"

#include <zlib.h>

#include <algorithm>

namespace mmteleop {

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large inputs
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = ::crc32(crc, data.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

Bytes encode_frame(MessageType type, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxPayloadSize) throw std::length_error("payload exceeds maximum frame size");
  Bytes out;
  out.reserve(payload.size() + kFrameOverhead);
  ByteWriter w(out);
  w.u8(kMagic0);
  w.u8(kMagic1);
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(type));
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  w.u32(crc32(payload));
  return out;
}

Bytes encode_frame(const ChannelFrame& frame) { return encode_frame(frame.type, frame.payload); }

std::variant<DecodedFrame, NeedMoreBytes> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 1 && bytes[0] != kMagic0) throw IntegrityError("bad magic");
  if (bytes.size() >= 2 && bytes[1] != kMagic1) throw IntegrityError("bad magic");
  if (bytes.size() >= 3 && bytes[2] != kWireVersion) throw IntegrityError("unsupported version");
  if (bytes.size() >= 4 && bytes[3] > static_cast<std::uint8_t>(MessageType::session_control)) {
    throw IntegrityError("unknown message type");
  }
  if (bytes.size() < kFrameHeaderSize) return NeedMoreBytes{kFrameHeaderSize - bytes.size()};

  ByteReader header(bytes.subspan(4, 4));
  const std::uint32_t len = header.u32();
  if (len > kMaxPayloadSize) throw IntegrityError("payload length exceeds maximum");
  const std::size_t total = kFrameOverhead + len;
  if (bytes.size() < total) return NeedMoreBytes{total - bytes.size()};

  const auto payload = bytes.subspan(kFrameHeaderSize, len);
  ByteReader trailer(bytes.subspan(kFrameHeaderSize + len, 4));
  if (trailer.u32() != crc32(payload)) throw IntegrityError("crc mismatch");

  DecodedFrame out;
  out.frame.type = static_cast<MessageType>(bytes[3]);
  out.frame.payload.assign(payload.begin(), payload.end());
  out.consumed = total;
  return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  compact();
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void FrameDecoder::compact() {
  if (pos_ > 0 && (pos_ >= 4096 || pos_ * 2 >= buf_.size())) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
}

std::optional<ChannelFrame> FrameDecoder::next() {
  while (pos_ < buf_.size()) {
    const std::span<const std::uint8_t> view(buf_.data() + pos_, buf_.size() - pos_);
    if (view[0] != kMagic0) {
      // skip to the next candidate magic byte
      auto it = std::find(view.begin() + 1, view.end(), kMagic0);
      const auto skip = static_cast<std::size_t>(it - view.begin());
      pos_ += skip;
      skipped_bytes_ += skip;
      continue;
    }
    try {
      auto result = decode_frame(view);
      if (std::holds_alternative<NeedMoreBytes>(result)) return std::nullopt;
      auto& decoded = std::get<DecodedFrame>(result);
      pos_ += decoded.consumed;
      compact();
      return std::move(decoded.frame);
    } catch (const IntegrityError&) {
      ++integrity_errors_;
      ++pos_;
      ++skipped_bytes_;
    }
  }
  compact();
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint8_t kMaskBits = 0x3F;

}  // namespace

Bytes encode_action_payload(const ActionCommand& cmd) {
  Bytes out;
  out.reserve(8 + 1 + 68 + 4 + 6 * 8);
  ByteWriter w(out);
  w.i64(cmd.timestamp_us);
  std::uint8_t mask = 0;
  for (BodyPart p : kAllBodyParts) {
    if (has_part(cmd, p)) mask |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(p));
  }
  w.u8(mask);
  write_action_vector(w, flatten(cmd));
  w.f32(cmd.torso ? static_cast<float>(cmd.torso->value) : 0.0f);
  for (BodyPart p : kAllBodyParts) {
    if (const std::string* src = part_source(cmd, p)) w.short_string(*src);
  }
  return out;
}

ActionCommand decode_action_payload(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const TimestampUs t = r.i64();
  const std::uint8_t mask = r.u8();
  if ((mask & ~kMaskBits) != 0) throw IntegrityError("action payload: reserved mask bits set");
  const ActionVector17 v = read_action_vector(r);
  const float torso = r.f32();

  const ActionCommand all = unflatten(v);
  ActionCommand cmd;
  cmd.timestamp_us = t;
  for (BodyPart p : kAllBodyParts) {
    if ((mask & (1u << static_cast<unsigned>(p))) == 0) continue;
    std::string src = r.short_string();
    switch (p) {
      case BodyPart::left_arm: cmd.left_arm = Sourced<DeltaPose>{all.left_arm->value, std::move(src)}; break;
      case BodyPart::right_arm: cmd.right_arm = Sourced<DeltaPose>{all.right_arm->value, std::move(src)}; break;
      case BodyPart::left_gripper:
        cmd.left_gripper = Sourced<double>{all.left_gripper->value, std::move(src)};
        break;
      case BodyPart::right_gripper:
        cmd.right_gripper = Sourced<double>{all.right_gripper->value, std::move(src)};
        break;
      case BodyPart::base: cmd.base = Sourced<BaseVelocity>{all.base->value, std::move(src)}; break;
      case BodyPart::torso: cmd.torso = Sourced<double>{torso, std::move(src)}; break;
    }
  }
  if (!r.done()) throw IntegrityError("action payload: trailing bytes");
  return cmd;
}

ActionCommand quantize(const ActionCommand& cmd) { return decode_action_payload(encode_action_payload(cmd)); }

Bytes encode_heartbeat_payload(TimestampUs t) {
  Bytes out;
  ByteWriter(out).i64(t);
  return out;
}

TimestampUs decode_heartbeat_payload(std::span<const std::uint8_t> payload) {
  if (payload.size() != 8) throw IntegrityError("heartbeat payload must be 8 bytes");
  return ByteReader(payload).i64();
}

Bytes encode_control_payload(const ControlMessage& msg) {
  Bytes out;
  out.reserve(1 + msg.body.size());
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(msg.kind));
  w.raw(msg.body);
  return out;
}

ControlMessage decode_control_payload(std::span<const std::uint8_t> payload) {
  if (payload.empty()) throw IntegrityError("empty session-control payload");
  const std::uint8_t k = payload[0];
  if (!((k >= 0x01 && k <= 0x06) || (k >= 0x10 && k <= 0x12))) {
    throw IntegrityError("unknown session-control kind " + std::to_string(k));
  }
  ControlMessage msg;
  msg.kind = static_cast<ControlKind>(k);
  msg.body.assign(payload.begin() + 1, payload.end());
  return msg;
}

}  // namespace mmteleop

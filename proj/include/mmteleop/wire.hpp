#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>

#include "mmteleop/action.hpp"
#include "mmteleop/bytes.hpp"

namespace mmteleop {

// ChannelFrame layout (all integers little-endian):
//
//   offset  size  field
//   0       2     magic 0x54 0x4D ("TM")
//   2       1     version (1)
//   3       1     msg_type: 0 action, 1 observation, 2 heartbeat, 3 session-control
//   4       4     payload_len (u32)
//   8       n     payload
//   8+n     4     crc32 of payload (IEEE 802.3 polynomial, zlib crc32)
//
// Framing overhead is 12 bytes.

enum class MessageType : std::uint8_t { action = 0, observation = 1, heartbeat = 2, session_control = 3 };

inline constexpr std::uint8_t kMagic0 = 0x54;
inline constexpr std::uint8_t kMagic1 = 0x4D;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 8;
inline constexpr std::size_t kFrameOverhead = 12;
inline constexpr std::uint32_t kMaxPayloadSize = 64u << 20;

struct ChannelFrame {
  MessageType type = MessageType::heartbeat;
  Bytes payload;

  bool operator==(const ChannelFrame&) const = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> data);

Bytes encode_frame(const ChannelFrame& frame);
Bytes encode_frame(MessageType type, std::span<const std::uint8_t> payload);

struct NeedMoreBytes {
  std::size_t needed = 0;  // lower bound on additional bytes
};

struct DecodedFrame {
  ChannelFrame frame;
  std::size_t consumed = 0;
};

/// Decodes one frame starting at the first byte of `bytes`. Returns
/// NeedMoreBytes for a truncated frame; throws IntegrityError on bad magic,
/// version, type, oversize length, or checksum mismatch.
std::variant<DecodedFrame, NeedMoreBytes> decode_frame(std::span<const std::uint8_t> bytes);

/// Streaming decoder for a byte stream that may contain garbage. After an
/// integrity failure it resumes scanning one byte past the failed magic, so it
/// resynchronizes at the next frame whose magic and checksum verify.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<ChannelFrame> next();

  std::uint64_t integrity_errors() const noexcept { return integrity_errors_; }
  std::uint64_t skipped_bytes() const noexcept { return skipped_bytes_; }
  std::size_t buffered() const noexcept { return buf_.size() - pos_; }

 private:
  void compact();

  Bytes buf_;
  std::size_t pos_ = 0;
  std::uint64_t integrity_errors_ = 0;
  std::uint64_t skipped_bytes_ = 0;
};

// ---------------------------------------------------------------------------
// Payloads

/// Action payload:
///   i64 timestamp_us | u8 presence mask | 17 x f32 action vector | f32 torso |
///   one u8-length source tag per present field, in mask bit order.
/// Mask bits: 0 left_arm, 1 right_arm, 2 left_gripper, 3 right_gripper,
/// 4 base, 5 torso. Numeric fields travel as f32.
Bytes encode_action_payload(const ActionCommand& cmd);
ActionCommand decode_action_payload(std::span<const std::uint8_t> payload);

/// Round-trips a command through the wire encoding (f32 quantization).
ActionCommand quantize(const ActionCommand& cmd);

Bytes encode_heartbeat_payload(TimestampUs t);
TimestampUs decode_heartbeat_payload(std::span<const std::uint8_t> payload);

enum class ControlKind : std::uint8_t {
  hello = 0x01,
  start = 0x02,
  quit = 0x03,
  end = 0x04,
  ping = 0x05,
  pong = 0x06,
  episode_header = 0x10,
  episode_record = 0x11,
  episode_footer = 0x12,
};

/// Session-control payload: u8 kind followed by a kind-specific body.
struct ControlMessage {
  ControlKind kind = ControlKind::hello;
  Bytes body;

  bool operator==(const ControlMessage&) const = default;
};

Bytes encode_control_payload(const ControlMessage& msg);
ControlMessage decode_control_payload(std::span<const std::uint8_t> payload);

}  // namespace mmteleop

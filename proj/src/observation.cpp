#include "mmteleop/observation.hpp"

#include <zlib.h>

#include <cstring>

#include "mmteleop/errors.hpp"

namespace mmteleop {

namespace {

constexpr std::uint8_t kObservationFormat = 1;
constexpr int kDeflateLevel = 6;

void write_pose(ByteWriter& w, const Pose& p) {
  for (int i = 0; i < 3; ++i) w.f64(p.position()[i]);
  w.f64(p.orientation().w());
  w.f64(p.orientation().x());
  w.f64(p.orientation().y());
  w.f64(p.orientation().z());
}

Pose read_pose(ByteReader& r) {
  Eigen::Vector3d pos;
  for (int i = 0; i < 3; ++i) pos[i] = r.f64();
  const double w = r.f64(), x = r.f64(), y = r.f64(), z = r.f64();
  return {pos, Eigen::Quaterniond(w, x, y, z)};
}

}  // namespace

Bytes deflate_bytes(std::span<const std::uint8_t> raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  Bytes out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), kDeflateLevel) != Z_OK) {
    throw std::runtime_error("deflate failed");
  }
  out.resize(bound);
  return out;
}

Bytes inflate_bytes(std::span<const std::uint8_t> compressed, std::size_t expected_size) {
  Bytes out(expected_size);
  uLongf len = static_cast<uLongf>(expected_size);
  // zlib refuses a null destination even for empty output
  std::uint8_t dummy = 0;
  const int rc = uncompress(expected_size ? out.data() : &dummy, &len, compressed.data(),
                            static_cast<uLong>(compressed.size()));
  if (rc != Z_OK || len != expected_size) throw IntegrityError("corrupt compressed image plane");
  return out;
}

Bytes compress_observation(const ObservationFrame& f) {
  Bytes out;
  ByteWriter w(out);
  w.u8(kObservationFormat);
  w.f64(f.sim_time);
  w.u8(static_cast<std::uint8_t>((f.left_ee ? 1u : 0u) | (f.right_ee ? 2u : 0u)));
  write_pose(w, f.left_ee.value_or(Pose{}));
  write_pose(w, f.right_ee.value_or(Pose{}));
  w.f64(f.left_gripper);
  w.f64(f.right_gripper);
  w.f64(f.base_odom_delta.dx);
  w.f64(f.base_odom_delta.dy);
  w.f64(f.base_odom_delta.dtheta);

  w.u16(static_cast<std::uint16_t>(f.rgb.size()));
  for (const RgbImage& img : f.rgb) {
    if (img.data.size() != std::size_t{img.width} * img.height * 3) {
      throw DimensionError("rgb image '" + img.camera_id + "' data size does not match header");
    }
    w.short_string(img.camera_id);
    w.u16(img.width);
    w.u16(img.height);
    w.blob(deflate_bytes(img.data));
  }
  w.u16(static_cast<std::uint16_t>(f.depth.size()));
  for (const DepthImage& img : f.depth) {
    if (img.data.size() != std::size_t{img.width} * img.height) {
      throw DimensionError("depth image '" + img.camera_id + "' data size does not match header");
    }
    w.short_string(img.camera_id);
    w.u16(img.width);
    w.u16(img.height);
    Bytes raw(img.data.size() * 2);
    std::memcpy(raw.data(), img.data.data(), raw.size());  // host is little-endian
    w.blob(deflate_bytes(raw));
  }
  return out;
}

ObservationFrame decompress_observation(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kObservationFormat) throw IntegrityError("unknown observation format");
  ObservationFrame f;
  f.sim_time = r.f64();
  const std::uint8_t flags = r.u8();
  if ((flags & ~3u) != 0) throw IntegrityError("observation: reserved flag bits set");
  const Pose left = read_pose(r);
  const Pose right = read_pose(r);
  if (flags & 1u) f.left_ee = left;
  if (flags & 2u) f.right_ee = right;
  f.left_gripper = r.f64();
  f.right_gripper = r.f64();
  f.base_odom_delta = {r.f64(), r.f64(), r.f64()};

  const std::uint16_t n_rgb = r.u16();
  f.rgb.reserve(n_rgb);
  for (std::uint16_t i = 0; i < n_rgb; ++i) {
    RgbImage img;
    img.camera_id = r.short_string();
    img.width = r.u16();
    img.height = r.u16();
    img.data = inflate_bytes(r.blob(), std::size_t{img.width} * img.height * 3);
    f.rgb.push_back(std::move(img));
  }
  const std::uint16_t n_depth = r.u16();
  f.depth.reserve(n_depth);
  for (std::uint16_t i = 0; i < n_depth; ++i) {
    DepthImage img;
    img.camera_id = r.short_string();
    img.width = r.u16();
    img.height = r.u16();
    const Bytes raw = inflate_bytes(r.blob(), std::size_t{img.width} * img.height * 2);
    img.data.resize(std::size_t{img.width} * img.height);
    std::memcpy(img.data.data(), raw.data(), raw.size());
    f.depth.push_back(std::move(img));
  }
  if (!r.done()) throw IntegrityError("observation: trailing bytes");
  return f;
}

}  // namespace mmteleop

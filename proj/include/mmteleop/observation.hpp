#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmteleop/bytes.hpp"
#include "mmteleop/pose.hpp"

namespace mmteleop {

/// 8-bit RGB, row-major, 3 bytes per pixel.
struct RgbImage {
  std::string camera_id;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const RgbImage&) const = default;
};

/// 16-bit depth in millimeters along the optical axis, row-major; 0 = invalid.
struct DepthImage {
  std::string camera_id;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint16_t> data;

  bool operator==(const DepthImage&) const = default;
};

/// Base motion since the previous observation, in the previous base frame.
struct OdometryDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;

  bool operator==(const OdometryDelta&) const = default;
};

struct ObservationFrame {
  std::vector<RgbImage> rgb;
  std::vector<DepthImage> depth;
  std::optional<Pose> left_ee;   // base frame; absent on single-arm robots
  std::optional<Pose> right_ee;
  double left_gripper = 0.0;
  double right_gripper = 0.0;
  OdometryDelta base_odom_delta;
  double sim_time = 0.0;

  bool operator==(const ObservationFrame&) const = default;
};

/// Lossless observation codec: each image plane is deflated independently,
/// proprioception is a fixed uncompressed layout (see docs/wire_format.md).
/// Throws DimensionError if an image's data does not match its header.
Bytes compress_observation(const ObservationFrame& frame);

/// Throws IntegrityError on a corrupt stream.
ObservationFrame decompress_observation(std::span<const std::uint8_t> bytes);

/// zlib-wrapped deflate at a fixed level, deterministic for equal inputs.
Bytes deflate_bytes(std::span<const std::uint8_t> raw);
/// Inflates and checks the result is exactly `expected_size` bytes.
Bytes inflate_bytes(std::span<const std::uint8_t> compressed, std::size_t expected_size);

}  // namespace mmteleop

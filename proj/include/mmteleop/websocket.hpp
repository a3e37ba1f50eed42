#pragma once

#include <optional>
#include <string>

#include "mmteleop/transport.hpp"

namespace mmteleop {

// WebSocket transport for browser clients. Every binary message carries
// exactly one encoded ChannelFrame (header, payload and crc), so a console
// shares the native byte layouts unchanged.

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(const std::string& client_key);

enum class WsOpcode : std::uint8_t { continuation = 0x0, text = 0x1, binary = 0x2, close = 0x8, ping = 0x9, pong = 0xA };

/// One frame, always FIN. Clients must mask; servers must not.
Bytes encode_ws_frame(WsOpcode op, std::span<const std::uint8_t> payload, bool mask, std::uint32_t mask_key = 0);

struct WsFrame {
  bool fin = true;
  WsOpcode opcode = WsOpcode::binary;
  Bytes payload;  // unmasked
  std::size_t consumed = 0;
};

/// Parses one frame at the start of `bytes`; nullopt if incomplete. Throws
/// IntegrityError on reserved bits or oversize frames.
std::optional<WsFrame> decode_ws_frame(std::span<const std::uint8_t> bytes);

class WsLink final : public Link {
 public:
  /// Server side: reads the HTTP upgrade request. Plain GET requests for
  /// other paths are answered from `web_root` (if set) and yield nullopt.
  static std::unique_ptr<WsLink> accept(Socket sock, const std::string& web_root, int timeout_ms = 2000);
  /// Client side: performs the upgrade handshake on "/". Throws TransportError.
  static std::unique_ptr<WsLink> connect(const Endpoint& ep, int timeout_ms = 1000);

  void send_frame(const ChannelFrame& frame) override;
  bool pump(int timeout_ms) override;
  int fd() const override { return sock_.fd(); }

  /// Sends an arbitrary binary message (used to test malformed input).
  void send_binary(std::span<const std::uint8_t> bytes);
  std::uint64_t skipped_messages() const noexcept { return skipped_; }

 private:
  WsLink(Socket sock, bool client, Bytes leftover);
  void send_ws(WsOpcode op, std::span<const std::uint8_t> payload);

  Socket sock_;
  bool client_;
  Bytes buf_;
  Bytes message_;  // fragmented message under assembly
  std::optional<WsOpcode> message_op_;
  bool open_ = true;
  std::uint64_t skipped_ = 0;
  std::uint32_t mask_state_ = 0x9e3779b9u;
};

}  // namespace mmteleop

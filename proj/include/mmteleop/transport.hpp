#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "mmteleop/wire.hpp"

namespace mmteleop {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

/// Owned socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    const int f = fd_;
    fd_ = -1;
    return f;
  }
  void close();

  /// Writes everything or throws TransportError.
  void send_all(const std::uint8_t* data, std::size_t n);
  /// Waits up to timeout_ms for readability, then reads what is available.
  /// Returns 0 bytes on timeout; throws TransportError when the peer closed.
  std::size_t receive(std::uint8_t* buf, std::size_t cap, int timeout_ms);

 private:
  int fd_ = -1;
};

/// Blocking TCP connect with a timeout; throws TransportError.
Socket connect_tcp(const Endpoint& ep, int timeout_ms = 1000);

class Listener {
 public:
  /// Port 0 picks a free port. Throws TransportError.
  explicit Listener(const Endpoint& ep);

  std::uint16_t port() const noexcept { return port_; }
  int fd() const noexcept { return sock_.fd(); }
  std::optional<Socket> accept(int timeout_ms);

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

/// A bidirectional ChannelFrame connection.
class Link {
 public:
  virtual ~Link() = default;

  /// Throws TransportError when the connection is gone.
  virtual void send_frame(const ChannelFrame& frame) = 0;
  /// Reads available bytes (waiting up to timeout_ms) and queues complete
  /// frames. Returns false once the peer has closed.
  virtual bool pump(int timeout_ms) = 0;
  virtual int fd() const = 0;

  std::optional<ChannelFrame> next() {
    if (inbox_.empty()) return std::nullopt;
    ChannelFrame f = std::move(inbox_.front());
    inbox_.pop_front();
    return f;
  }
  std::uint64_t integrity_errors() const noexcept { return integrity_errors_; }

 protected:
  std::deque<ChannelFrame> inbox_;
  std::uint64_t integrity_errors_ = 0;
};

/// Raw byte stream of concatenated ChannelFrames.
class TcpLink final : public Link {
 public:
  explicit TcpLink(Socket sock) : sock_(std::move(sock)) {}

  void send_frame(const ChannelFrame& frame) override;
  bool pump(int timeout_ms) override;
  int fd() const override { return sock_.fd(); }

 private:
  Socket sock_;
  FrameDecoder decoder_;
  bool open_ = true;
};

}  // namespace mmteleop

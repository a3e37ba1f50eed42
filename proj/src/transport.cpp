#include "mmteleop/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "mmteleop/errors.hpp"

namespace mmteleop {

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 >= text.size()) {
    throw ConfigError("endpoint must be host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.empty()) ep.host = "127.0.0.1";
  try {
    std::size_t used = 0;
    const int port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("bad port in endpoint '" + text + "'");
  }
  return ep;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::send_all(const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd_, data, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    data += k;
    n -= static_cast<std::size_t>(k);
  }
}

std::size_t Socket::receive(std::uint8_t* buf, std::size_t cap, int timeout_ms) {
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, timeout_ms);
  if (r < 0) {
    if (errno == EINTR) return 0;
    throw TransportError(std::string("poll failed: ") + std::strerror(errno));
  }
  if (r == 0) return 0;
  const ssize_t k = ::recv(fd_, buf, cap, 0);
  if (k == 0) throw TransportError("connection closed by peer");
  if (k < 0) {
    if (errno == EINTR || errno == EAGAIN) return 0;
    throw TransportError(std::string("recv failed: ") + std::strerror(errno));
  }
  return static_cast<std::size_t>(k);
}

namespace {

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + ep.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Socket connect_tcp(const Endpoint& ep, int timeout_ms) {
  const sockaddr_in addr = resolve(ep);
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw TransportError("socket() failed");
  const int flags = ::fcntl(s.fd(), F_GETFL, 0);
  ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
  if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    if (errno != EINPROGRESS) throw TransportError("connect to " + ep.to_string() + " failed: " + std::strerror(errno));
    pollfd p{s.fd(), POLLOUT, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) throw TransportError("connect to " + ep.to_string() + " timed out");
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw TransportError("connect to " + ep.to_string() + " failed: " + std::strerror(err));
  }
  ::fcntl(s.fd(), F_SETFL, flags);
  set_nodelay(s.fd());
  return s;
}

Listener::Listener(const Endpoint& ep) : sock_(::socket(AF_INET, SOCK_STREAM, 0)) {
  if (!sock_.valid()) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const sockaddr_in addr = resolve(ep);
  if (::bind(sock_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw TransportError("bind " + ep.to_string() + " failed: " + std::strerror(errno));
  }
  if (::listen(sock_.fd(), 4) != 0) throw TransportError("listen failed");
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

std::optional<Socket> Listener::accept(int timeout_ms) {
  pollfd p{sock_.fd(), POLLIN, 0};
  if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
  const int fd = ::accept(sock_.fd(), nullptr, nullptr);
  if (fd < 0) return std::nullopt;
  set_nodelay(fd);
  return Socket(fd);
}

void TcpLink::send_frame(const ChannelFrame& frame) {
  if (!open_) throw TransportError("link closed");
  const Bytes b = encode_frame(frame);
  try {
    sock_.send_all(b.data(), b.size());
  } catch (const TransportError&) {
    open_ = false;
    throw;
  }
}

bool TcpLink::pump(int timeout_ms) {
  if (!open_) return false;
  std::uint8_t buf[65536];
  try {
    std::size_t n = sock_.receive(buf, sizeof buf, timeout_ms);
    for (int reads = 0; n > 0 && reads < 64; ++reads) {
      decoder_.feed({buf, n});
      n = sock_.receive(buf, sizeof buf, 0);
    }
    if (n > 0) decoder_.feed({buf, n});
  } catch (const TransportError&) {
    open_ = false;
  }
  while (auto f = decoder_.next()) inbox_.push_back(std::move(*f));
  integrity_errors_ = decoder_.integrity_errors();
  return open_ || !inbox_.empty();
}

}  // namespace mmteleop

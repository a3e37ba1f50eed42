#include "mmteleop/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "mmteleop/errors.hpp"

namespace mmteleop {

namespace {

constexpr const char* kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxWsPayload = kMaxPayloadSize + kFrameOverhead;
constexpr std::size_t kMaxHeaderBytes = 16384;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

struct HttpHead {
  std::string method;
  std::string path;
  std::string status_line;
  std::map<std::string, std::string> headers;  // lower-case keys
};

HttpHead parse_head(const std::string& text) {
  HttpHead h;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  h.status_line = trim(line);
  std::istringstream first(h.status_line);
  first >> h.method >> h.path;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    h.headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }
  return h;
}

/// Reads until the blank line ending an HTTP head; returns the head and any
/// bytes that followed it.
std::pair<std::string, Bytes> read_head(Socket& sock, int timeout_ms) {
  Bytes buf;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  std::uint8_t tmp[4096];
  while (true) {
    const std::string_view view(reinterpret_cast<const char*>(buf.data()), buf.size());
    if (const auto end = view.find("\r\n\r\n"); end != std::string_view::npos) {
      return {std::string(view.substr(0, end + 4)), Bytes(buf.begin() + static_cast<std::ptrdiff_t>(end + 4), buf.end())};
    }
    if (buf.size() > kMaxHeaderBytes) throw TransportError("HTTP header too large");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TransportError("timed out waiting for HTTP header");
    const std::size_t n = sock.receive(tmp, sizeof tmp, static_cast<int>(left.count()));
    buf.insert(buf.end(), tmp, tmp + n);
  }
}

void send_text(Socket& sock, const std::string& s) {
  sock.send_all(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

std::string content_type(const std::filesystem::path& p) {
  const auto ext = lower(p.extension().string());
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

void serve_static(Socket& sock, const HttpHead& head, const std::string& web_root) {
  namespace fs = std::filesystem;
  std::string path = head.path.substr(0, head.path.find('?'));
  if (path.empty() || path == "/") path = "/index.html";
  const fs::path root = web_root.empty() ? fs::path() : fs::weakly_canonical(web_root);
  const fs::path file = root.empty() ? fs::path() : fs::weakly_canonical(root / path.substr(1));
  const bool inside = !root.empty() && std::mismatch(root.begin(), root.end(), file.begin(), file.end()).first == root.end();
  std::ifstream in;
  if (head.method == "GET" && inside && fs::is_regular_file(file)) in.open(file, std::ios::binary);
  if (!in) {
    send_text(sock, "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
    return;
  }
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  send_text(sock, "HTTP/1.1 200 OK\r\nContent-Type: " + content_type(file) + "\r\nContent-Length: " +
                      std::to_string(body.size()) + "\r\nConnection: close\r\n\r\n" + body);
}

std::string base64(const std::uint8_t* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(n));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

}  // namespace

std::string websocket_accept_key(const std::string& client_key) {
  const std::string s = client_key + kWsGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(s.data()), s.size(), digest);
  return base64(digest, sizeof digest);
}

Bytes encode_ws_frame(WsOpcode op, std::span<const std::uint8_t> payload, bool mask, std::uint32_t mask_key) {
  Bytes out;
  out.reserve(payload.size() + 14);
  out.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mbit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<std::uint8_t>(mbit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(mbit | 126);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
  } else {
    out.push_back(mbit | 127);
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(n) >> (8 * i)));
  }
  std::uint8_t key[4] = {static_cast<std::uint8_t>(mask_key >> 24), static_cast<std::uint8_t>(mask_key >> 16),
                         static_cast<std::uint8_t>(mask_key >> 8), static_cast<std::uint8_t>(mask_key)};
  if (mask) out.insert(out.end(), key, key + 4);
  const std::size_t start = out.size();
  out.insert(out.end(), payload.begin(), payload.end());
  if (mask) {
    for (std::size_t i = 0; i < n; ++i) out[start + i] ^= key[i % 4];
  }
  return out;
}

std::optional<WsFrame> decode_ws_frame(std::span<const std::uint8_t> b) {
  if (b.size() < 2) return std::nullopt;
  WsFrame f;
  f.fin = (b[0] & 0x80) != 0;
  if ((b[0] & 0x70) != 0) throw IntegrityError("websocket reserved bits set");
  f.opcode = static_cast<WsOpcode>(b[0] & 0x0F);
  const bool masked = (b[1] & 0x80) != 0;
  std::uint64_t n = b[1] & 0x7F;
  std::size_t pos = 2;
  if (n == 126) {
    if (b.size() < 4) return std::nullopt;
    n = (static_cast<std::uint64_t>(b[2]) << 8) | b[3];
    pos = 4;
  } else if (n == 127) {
    if (b.size() < 10) return std::nullopt;
    n = 0;
    for (int i = 0; i < 8; ++i) n = (n << 8) | b[2 + i];
    pos = 10;
  }
  if (n > kMaxWsPayload) throw IntegrityError("websocket frame too large");
  std::uint8_t key[4] = {0, 0, 0, 0};
  if (masked) {
    if (b.size() < pos + 4) return std::nullopt;
    std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(pos), 4, key);
    pos += 4;
  }
  if (b.size() < pos + n) return std::nullopt;
  f.payload.assign(b.begin() + static_cast<std::ptrdiff_t>(pos), b.begin() + static_cast<std::ptrdiff_t>(pos + n));
  if (masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] ^= key[i % 4];
  }
  f.consumed = pos + static_cast<std::size_t>(n);
  return f;
}

WsLink::WsLink(Socket sock, bool client, Bytes leftover) : sock_(std::move(sock)), client_(client), buf_(std::move(leftover)) {}

std::unique_ptr<WsLink> WsLink::accept(Socket sock, const std::string& web_root, int timeout_ms) {
  auto [text, rest] = read_head(sock, timeout_ms);
  const HttpHead head = parse_head(text);
  const auto upgrade = head.headers.find("upgrade");
  const auto key = head.headers.find("sec-websocket-key");
  if (upgrade == head.headers.end() || lower(upgrade->second) != "websocket" || key == head.headers.end()) {
    serve_static(sock, head, web_root);
    return nullptr;
  }
  send_text(sock, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                  "Sec-WebSocket-Accept: " + websocket_accept_key(key->second) + "\r\n\r\n");
  return std::unique_ptr<WsLink>(new WsLink(std::move(sock), false, std::move(rest)));
}

std::unique_ptr<WsLink> WsLink::connect(const Endpoint& ep, int timeout_ms) {
  Socket sock = connect_tcp(ep, timeout_ms);
  std::uint8_t raw[16];
  const auto seed = static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  for (int i = 0; i < 16; ++i) raw[i] = static_cast<std::uint8_t>(seed >> ((i % 8) * 8)) ^ static_cast<std::uint8_t>(i * 37);
  const std::string key = base64(raw, sizeof raw);
  send_text(sock, "GET / HTTP/1.1\r\nHost: " + ep.to_string() +
                      "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                      "\r\nSec-WebSocket-Version: 13\r\n\r\n");
  auto [text, rest] = read_head(sock, timeout_ms);
  const HttpHead head = parse_head(text);
  const auto accept = head.headers.find("sec-websocket-accept");
  if (head.status_line.find(" 101") == std::string::npos || accept == head.headers.end() ||
      accept->second != websocket_accept_key(key)) {
    throw TransportError("websocket handshake rejected: " + head.status_line);
  }
  return std::unique_ptr<WsLink>(new WsLink(std::move(sock), true, std::move(rest)));
}

void WsLink::send_ws(WsOpcode op, std::span<const std::uint8_t> payload) {
  if (!open_) throw TransportError("link closed");
  mask_state_ = mask_state_ * 1664525u + 1013904223u;
  const Bytes b = encode_ws_frame(op, payload, client_, mask_state_);
  try {
    sock_.send_all(b.data(), b.size());
  } catch (const TransportError&) {
    open_ = false;
    throw;
  }
}

void WsLink::send_frame(const ChannelFrame& frame) { send_ws(WsOpcode::binary, encode_frame(frame)); }

void WsLink::send_binary(std::span<const std::uint8_t> bytes) { send_ws(WsOpcode::binary, bytes); }

bool WsLink::pump(int timeout_ms) {
  if (!open_) return !inbox_.empty();
  std::uint8_t tmp[65536];
  try {
    std::size_t n = sock_.receive(tmp, sizeof tmp, buf_.empty() ? timeout_ms : 0);
    for (int reads = 0; n > 0; ++reads) {
      buf_.insert(buf_.end(), tmp, tmp + n);
      if (reads >= 64) break;
      n = sock_.receive(tmp, sizeof tmp, 0);
    }
  } catch (const TransportError&) {
    open_ = false;
  }

  std::size_t pos = 0;
  try {
    while (auto f = decode_ws_frame(std::span<const std::uint8_t>(buf_).subspan(pos))) {
      pos += f->consumed;
      switch (f->opcode) {
        case WsOpcode::ping:
          if (open_) send_ws(WsOpcode::pong, f->payload);
          break;
        case WsOpcode::pong:
          break;
        case WsOpcode::close:
          if (open_) {
            try {
              send_ws(WsOpcode::close, f->payload);
            } catch (const TransportError&) {
            }
          }
          open_ = false;
          break;
        case WsOpcode::text:
        case WsOpcode::binary:
        case WsOpcode::continuation: {
          if (f->opcode != WsOpcode::continuation) {
            message_.clear();
            message_op_ = f->opcode;
          }
          message_.insert(message_.end(), f->payload.begin(), f->payload.end());
          if (!f->fin) break;
          if (message_op_ == WsOpcode::binary) {
            try {
              auto res = decode_frame(message_);
              auto* df = std::get_if<DecodedFrame>(&res);
              if (df == nullptr || df->consumed != message_.size()) throw IntegrityError("message is not one frame");
              inbox_.push_back(std::move(df->frame));
            } catch (const IntegrityError&) {
              ++integrity_errors_;
              ++skipped_;
            }
          }
          message_.clear();
          message_op_.reset();
          break;
        }
        default:
          ++skipped_;
      }
      if (!open_) break;
    }
  } catch (const IntegrityError&) {
    ++integrity_errors_;
    open_ = false;
  } catch (const TransportError&) {
    open_ = false;
  }
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(std::min(pos, buf_.size())));
  return open_ || !inbox_.empty();
}

}  // namespace mmteleop

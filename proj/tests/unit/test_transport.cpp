#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "mmteleop/errors.hpp"
#include "mmteleop/transport.hpp"
#include "mmteleop/websocket.hpp"
#include "mmteleop/wire.hpp"

using namespace mmteleop;

namespace {

std::optional<ChannelFrame> wait_frame(Link& link, int timeout_ms = 2000) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (auto f = link.next()) return f;
    if (!link.pump(20)) return link.next();
  }
  return std::nullopt;
}

ChannelFrame action_frame(std::mt19937_64& rng) {
  return {MessageType::action, encode_action_payload(quantize(testutil::random_command(rng)))};
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const Endpoint e = parse_endpoint("10.0.0.2:7600");
  CHECK(e.host == "10.0.0.2");
  CHECK(e.port == 7600);
  CHECK(parse_endpoint(":80").host == "127.0.0.1");
  CHECK_THROWS_AS(parse_endpoint("nohost"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("h:12x"), ConfigError);
}

TEST_CASE("tcp loopback: frames arrive identically in both directions") {
  Listener listener({"127.0.0.1", 0});
  REQUIRE(listener.port() != 0);
  auto server_sock = std::async(std::launch::async, [&] { return listener.accept(2000); });
  auto client_ptr = std::make_unique<TcpLink>(connect_tcp({"127.0.0.1", listener.port()}));
  TcpLink& client = *client_ptr;
  auto s = server_sock.get();
  REQUIRE(s);
  TcpLink server(std::move(*s));

  std::mt19937_64 rng(31);
  std::vector<ChannelFrame> sent;
  for (int i = 0; i < 50; ++i) {
    sent.push_back(action_frame(rng));
    client.send_frame(sent.back());
  }
  for (const auto& f : sent) {
    const auto got = wait_frame(server);
    REQUIRE(got);
    CHECK(*got == f);
  }
  const ChannelFrame hb{MessageType::heartbeat, encode_heartbeat_payload(77)};
  server.send_frame(hb);
  CHECK(wait_frame(client) == hb);

  client_ptr.reset();
  CHECK_FALSE(wait_frame(server, 500));
  CHECK_FALSE(server.pump(10));
}

TEST_CASE("tcp: connecting to a closed port fails") {
  std::uint16_t port = 0;
  {
    Listener probe({"127.0.0.1", 0});
    port = probe.port();
  }
  CHECK_THROWS_AS(connect_tcp({"127.0.0.1", port}, 500), TransportError);
}

TEST_CASE("websocket: accept key from the protocol specification example") {
  CHECK(websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

TEST_CASE("websocket: frame codec lengths and masking") {
  std::mt19937_64 rng(32);
  for (std::size_t n : {0u, 1u, 125u, 126u, 127u, 65535u, 65536u, 70000u}) {
    Bytes payload(n);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
    for (bool mask : {false, true}) {
      const Bytes wire = encode_ws_frame(WsOpcode::binary, payload, mask, 0xA1B2C3D4u);
      const auto f = decode_ws_frame(wire);
      REQUIRE(f);
      CHECK(f->fin);
      CHECK(f->opcode == WsOpcode::binary);
      CHECK(f->payload == payload);
      CHECK(f->consumed == wire.size());
      CHECK_FALSE(decode_ws_frame(std::span(wire).first(wire.size() - 1)));
    }
  }
  Bytes reserved = encode_ws_frame(WsOpcode::binary, Bytes{1, 2}, false);
  reserved[0] |= 0x40;
  CHECK_THROWS_AS(decode_ws_frame(reserved), IntegrityError);
}

TEST_CASE("websocket loopback: channel frames both ways, malformed messages skipped") {
  Listener listener({"127.0.0.1", 0});
  auto server_fut = std::async(std::launch::async, [&]() -> std::unique_ptr<WsLink> {
    auto s = listener.accept(2000);
    if (!s) return nullptr;
    return WsLink::accept(std::move(*s), "");
  });
  auto client = WsLink::connect({"127.0.0.1", listener.port()});
  auto server = server_fut.get();
  REQUIRE(server);

  std::mt19937_64 rng(33);
  const ChannelFrame a = action_frame(rng);
  client->send_frame(a);
  CHECK(wait_frame(*server) == a);

  // garbage, a frame with a bad crc, and two frames in one message
  client->send_binary(Bytes{1, 2, 3, 4, 5});
  Bytes corrupt = encode_frame(a);
  corrupt.back() ^= 1;
  client->send_binary(corrupt);
  Bytes two = encode_frame(a);
  const Bytes again = encode_frame(a);
  two.insert(two.end(), again.begin(), again.end());
  client->send_binary(two);
  const ChannelFrame b = action_frame(rng);
  client->send_frame(b);
  CHECK(wait_frame(*server) == b);
  CHECK(server->skipped_messages() == 3);

  Bytes big_payload(200000, 7);
  const ChannelFrame obs{MessageType::observation, big_payload};
  server->send_frame(obs);
  CHECK(wait_frame(*client) == obs);
}

TEST_CASE("websocket: static files next to the endpoint") {
  const auto root = std::filesystem::temp_directory_path() / "mmteleop_webroot_test";
  std::filesystem::create_directories(root);
  std::ofstream(root / "index.html") << "<html>console</html>";

  Listener listener({"127.0.0.1", 0});
  auto server_fut = std::async(std::launch::async, [&]() -> bool {
    auto s = listener.accept(2000);
    return s && WsLink::accept(std::move(*s), root.string()) == nullptr;
  });
  Socket c = connect_tcp({"127.0.0.1", listener.port()});
  const std::string req = "GET / HTTP/1.1\r\nHost: x\r\n\r\n";
  c.send_all(reinterpret_cast<const std::uint8_t*>(req.data()), req.size());
  std::string resp;
  std::uint8_t buf[4096];
  try {
    for (int i = 0; i < 50; ++i) {
      const std::size_t n = c.receive(buf, sizeof buf, 100);
      resp.append(reinterpret_cast<char*>(buf), n);
    }
  } catch (const TransportError&) {
  }
  CHECK(server_fut.get());
  CHECK(resp.find("200 OK") != std::string::npos);
  CHECK(resp.find("<html>console</html>") != std::string::npos);
}

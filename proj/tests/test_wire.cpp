// Copyright 2026 The usdcert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <iostream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "usdcert/error.hpp"
#include "usdcert/wire.hpp"

namespace usdcert {
namespace {

using namespace std::chrono_literals;

StateEnsemble qubit_sic() { return wh_orbit(testing::qubit_sic_fiducial()); }

/// Runs a WireServer for a fixed number of sessions on a background thread.
class ServerThread {
 public:
  template <typename Device>
  ServerThread(std::unique_ptr<Device> device, std::size_t sessions, std::chrono::milliseconds timeout = 2000ms)
      : server_(std::move(device), Endpoint{"127.0.0.1", 0}, timeout),
        thread_([this, sessions] { server_.serve(sessions); }) {}
  ~ServerThread() {
    server_.stop();
    thread_.join();
  }
  Endpoint endpoint() const { return {"127.0.0.1", server_.port()}; }

 private:
  WireServer server_;
  std::thread thread_;
};

/// Bare listening socket for scripted misbehaving peers.
class RawListener {
 public:
  RawListener() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::listen(fd_, 1);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  ~RawListener() { ::close(fd_); }
  Connection accept(std::chrono::milliseconds timeout = 2000ms) { return Connection(accept_fd(), timeout); }
  int accept_fd() { return ::accept(fd_, nullptr, nullptr); }
  Endpoint endpoint() const { return {"127.0.0.1", port_}; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

TEST(Endpoint, Parse) {
  const auto e = Endpoint::parse("10.0.0.1:8080");
  EXPECT_EQ(e.host, "10.0.0.1");
  EXPECT_EQ(e.port, 8080);
  EXPECT_EQ(Endpoint::parse(":9").host, "127.0.0.1");
  EXPECT_EQ(e.to_string(), "10.0.0.1:8080");
  EXPECT_THROW(Endpoint::parse("nohost"), InvalidInput);
  EXPECT_THROW(Endpoint::parse("h:99999"), InvalidInput);
  EXPECT_THROW(Endpoint::parse("h:12x"), InvalidInput);
}

TEST(Amplitudes, EncodeDecodeIsExact) {
  std::mt19937_64 rng(1);
  const auto a = testing::random_state(7, rng).amplitudes();
  const auto text = encode_amplitudes(a).dump();
  EXPECT_TRUE(decode_amplitudes(nlohmann::json::parse(text)) == a);
  EXPECT_THROW(decode_amplitudes(nlohmann::json::parse("[[1]]")), ProtocolError);
  EXPECT_THROW(decode_amplitudes(nlohmann::json::parse("{}")), ProtocolError);
}

TEST(Wire, PressMatchesInProcessDevice) {
  const auto ens = qubit_sic();
  ServerThread server(std::make_unique<SimulatedPreparer>(ens, 99), 1);
  SimulatedPreparer local(ens, 99);
  auto remote = wire_connect_preparer(server.endpoint(), 2, 4);
  for (int i = 0; i < 5; ++i) {
    EXPECT_TRUE(remote->press(static_cast<std::uint64_t>(i), 3).amplitudes == local.press(static_cast<std::uint64_t>(i), 3).amplitudes);
  }
}

TEST(Wire, FullQubitRunIsByteIdentical) {
  const auto ens = qubit_sic();
  const CertificationRun run{2, 4, 2, 1000, 2026};
  const auto seeds = split_seeds(run.seed);

  SimulatedPreparer prep(ens, seeds.preparer);
  SimulatedMeasurer meas(ens, seeds.measurer);
  std::ostringstream local;
  write_transcript_csv(local, run_protocol(prep, meas, run));

  std::ostringstream remote;
  {
    ServerThread prep_server(std::make_unique<SimulatedPreparer>(ens, seeds.preparer), 1);
    ServerThread meas_server(std::make_unique<SimulatedMeasurer>(ens, seeds.measurer), 1);
    auto rp = wire_connect_preparer(prep_server.endpoint(), 2, 4);
    auto rm = wire_connect_measurer(meas_server.endpoint(), 2);
    const auto t = run_protocol(*rp, *rm, run);
    EXPECT_FALSE(t.truncated);
    EXPECT_EQ(t.rounds.size(), 12000u);
    write_transcript_csv(remote, t);
  }
  EXPECT_EQ(local.str(), remote.str());
}

TEST(Wire, DroppedConnectionTruncatesTranscript) {
  RawListener listener;
  std::thread peer([&] {
    auto conn = listener.accept();
    const auto hello = conn.receive();
    conn.send(hello);
    SimulatedPreparer device(qubit_sic(), 1);
    for (int i = 0; i < 10; ++i) {
      const auto req = conn.receive();
      conn.send({{"op", "state"}, {"amplitudes", encode_amplitudes(device.press(0, req.at("x").get<int>()).amplitudes)}});
    }
    conn.close();
  });
  {
    auto rp = wire_connect_preparer(listener.endpoint(), 2, 4, 1000ms);
    SimulatedMeasurer meas(qubit_sic(), 2);
    const auto t = run_protocol(*rp, meas, {2, 4, 2, 100, 3});
    EXPECT_TRUE(t.truncated);
    EXPECT_EQ(t.rounds.size(), 10u);
    EXPECT_FALSE(t.failure.empty());
    EXPECT_THROW(estimate_pair_stats(t), InvalidInput);
  }
  peer.join();
}

TEST(Wire, SilentPeerTimesOut) {
  RawListener listener;
  std::thread peer([&] {
    auto conn = listener.accept();
    conn.receive();
    std::this_thread::sleep_for(600ms);
  });
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(wire_connect_measurer(listener.endpoint(), 2, 200ms), DeviceUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 550ms);
  peer.join();
}

TEST(Wire, UnreachableEndpoint) {
  Endpoint closed;
  {
    RawListener listener;
    closed = listener.endpoint();
  }
  EXPECT_THROW(wire_connect_preparer(closed, 2, 4, 200ms), DeviceUnavailable);
}

TEST(Wire, MalformedMessageGetsErrorReplyAndIsLogged) {
  ServerThread server(std::make_unique<SimulatedPreparer>(qubit_sic(), 1), 1);
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  nlohmann::json reply;
  {
    auto conn = Connection::open(server.endpoint(), 2000ms);
    conn.send({{"op", "hello"}, {"role", "prep"}, {"dim", 2}});
    EXPECT_EQ(conn.receive().at("op"), "hello");
    conn.send_payload("{\"op\": \"press\", \"round\": \"soon\", \"x\": 1}");
    reply = conn.receive();
    EXPECT_THROW(conn.receive(), DeviceUnavailable);  // server closed the session
  }
  std::cerr.rdbuf(old);
  EXPECT_EQ(reply.at("op"), "error");
  EXPECT_NE(captured.str().find("\"round\": \"soon\""), std::string::npos) << captured.str();
}

TEST(Wire, NonJsonPayloadIsRejected) {
  ServerThread server(std::make_unique<SimulatedPreparer>(qubit_sic(), 1), 1);
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  auto conn = Connection::open(server.endpoint(), 2000ms);
  conn.send_payload("definitely not json");
  const auto reply = conn.receive();
  std::cerr.rdbuf(old);
  EXPECT_EQ(reply.at("op"), "error");
}

TEST(Wire, RequestsBeforeHelloAreRejected) {
  ServerThread server(std::make_unique<SimulatedPreparer>(qubit_sic(), 1), 1);
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  auto conn = Connection::open(server.endpoint(), 2000ms);
  conn.send({{"op", "press"}, {"round", 0}, {"x", 1}});
  const auto reply = conn.receive();
  std::cerr.rdbuf(old);
  EXPECT_EQ(reply.at("op"), "error");
}

TEST(Wire, RoleAndDimensionMismatchFailHandshake) {
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  {
    ServerThread server(std::make_unique<SimulatedPreparer>(qubit_sic(), 1), 1);
    EXPECT_THROW(wire_connect_measurer(server.endpoint(), 2), ProtocolError);
  }
  {
    ServerThread server(std::make_unique<SimulatedPreparer>(qubit_sic(), 1), 1);
    EXPECT_THROW(wire_connect_preparer(server.endpoint(), 3, 9), ProtocolError);
  }
  std::cerr.rdbuf(old);
}

TEST(Wire, RemoteDeviceErrorTruncatesRun) {
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  {
    // The server hosts a 2-button ensemble; the referee asks for 4 buttons.
    const StateEnsemble small({QuditState::basis(2, 0), QuditState::basis(2, 1)});
    ServerThread server(std::make_unique<SimulatedPreparer>(small, 1), 1);
    auto rp = wire_connect_preparer(server.endpoint(), 2, 4);
    SimulatedMeasurer meas(qubit_sic(), 2);
    const auto t = run_protocol(*rp, meas, {2, 4, 2, 10, 3});
    EXPECT_TRUE(t.truncated);
    EXPECT_NE(t.failure.find("remote device reported"), std::string::npos);
  }
  std::cerr.rdbuf(old);
}

TEST(Wire, OversizedFrameIsAProtocolError) {
  RawListener listener;
  std::thread peer([&] {
    const int fd = listener.accept_fd();
    char buffer[256];
    (void)::recv(fd, buffer, sizeof buffer, 0);
    const unsigned char header[4] = {0xff, 0xff, 0xff, 0xff};
    (void)::send(fd, header, sizeof header, MSG_NOSIGNAL);
    std::this_thread::sleep_for(200ms);
    ::close(fd);
  });
  EXPECT_THROW(wire_connect_preparer(listener.endpoint(), 2, 4, 1000ms), ProtocolError);
  peer.join();
}

}  // namespace
}  // namespace usdcert

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

#include "usdcert/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>

#include "usdcert/error.hpp"

namespace usdcert {

namespace {

std::string errno_message(std::string_view what) {
  return std::string(what) + ": " + std::strerror(errno);
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

// Waits until fd is ready for `events`; false on timeout.
bool wait_ready(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  while (true) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw DeviceUnavailable(errno_message("poll"));
  }
}

const nlohmann::json& field(const nlohmann::json& msg, const char* key) {
  if (!msg.is_object() || !msg.contains(key)) {
    throw ProtocolError(std::string("message lacks field '") + key + "'");
  }
  return msg.at(key);
}

std::string op_of(const nlohmann::json& msg) {
  const auto& op = field(msg, "op");
  if (!op.is_string()) throw ProtocolError("field 'op' must be a string");
  return op.get<std::string>();
}

// Raises ProtocolError for an error reply or an unexpected op.
void expect_op(const nlohmann::json& reply, std::string_view op) {
  const auto got = op_of(reply);
  if (got == "error") {
    const auto& m = reply.contains("message") ? reply.at("message") : nlohmann::json("unspecified");
    throw ProtocolError("remote device reported: " + (m.is_string() ? m.get<std::string>() : m.dump()));
  }
  if (got != op) throw ProtocolError("expected '" + std::string(op) + "' reply, got '" + got + "'");
}

template <typename T>
T integer_field(const nlohmann::json& msg, const char* key) {
  const auto& v = field(msg, key);
  if (!v.is_number_integer()) throw ProtocolError(std::string("field '") + key + "' must be an integer");
  return v.get<T>();
}

void handshake(Connection& conn, DeviceRole role, int dim) {
  conn.send({{"op", "hello"}, {"role", to_string(role)}, {"dim", dim}});
  const auto reply = conn.receive();
  expect_op(reply, "hello");
  if (field(reply, "role") != to_string(role) || integer_field<int>(reply, "dim") != dim) {
    throw ProtocolError("hello reply does not match the requested device: " + reply.dump());
  }
}

class RemotePreparer final : public PreparationDevice {
 public:
  RemotePreparer(Connection conn, int dim, int buttons) : conn_(std::move(conn)), dim_(dim), buttons_(buttons) {}
  ~RemotePreparer() override { say_bye(conn_); }

  int dim() const override { return dim_; }
  int buttons() const override { return buttons_; }

  EmittedSystem press(std::uint64_t round, int x) override {
    conn_.send({{"op", "press"}, {"round", round}, {"x", x}});
    const auto reply = conn_.receive();
    expect_op(reply, "state");
    auto amplitudes = decode_amplitudes(field(reply, "amplitudes"));
    if (amplitudes.size() != dim_) throw ProtocolError("state has the wrong dimension: " + reply.dump());
    return {std::move(amplitudes)};
  }

  static void say_bye(Connection& conn) noexcept {
    if (!conn.is_open()) return;
    try {
      conn.send({{"op", "bye"}});
      conn.receive();
    } catch (...) {
    }
    conn.close();
  }

 private:
  Connection conn_;
  int dim_;
  int buttons_;
};

class RemoteMeasurer final : public MeasurementDevice {
 public:
  RemoteMeasurer(Connection conn, int dim) : conn_(std::move(conn)), dim_(dim) {}
  ~RemoteMeasurer() override { RemotePreparer::say_bye(conn_); }

  int dim() const override { return dim_; }

  Outcome measure(std::uint64_t round, PairLabel y, const EmittedSystem& system) override {
    conn_.send({{"op", "measure"},
                {"round", round},
                {"pair", {y.first, y.second}},
                {"amplitudes", encode_amplitudes(system.amplitudes)}});
    const auto reply = conn_.receive();
    expect_op(reply, "outcome");
    const auto& b = field(reply, "b");
    if (b.is_number_integer()) {
      const int v = b.get<int>();
      if (v == -1) return Outcome::kIdentifyFirst;
      if (v == 1) return Outcome::kIdentifySecond;
    } else if (b == "inc") {
      return Outcome::kInconclusive;
    }
    throw ProtocolError("invalid outcome in reply: " + reply.dump());
  }

 private:
  Connection conn_;
  int dim_;
};

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw InvalidInput("endpoint must look like host:port");
  Endpoint e;
  if (colon > 0) e.host = std::string(text.substr(0, colon));
  const std::string port(text.substr(colon + 1));
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) {
    throw InvalidInput("invalid port in endpoint '" + std::string(text) + "'");
  }
  e.port = static_cast<std::uint16_t>(p);
  return e;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

std::string_view to_string(DeviceRole role) noexcept {
  return role == DeviceRole::kPreparer ? "prep" : "meas";
}

nlohmann::json encode_amplitudes(const Amplitudes& amplitudes) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index k = 0; k < amplitudes.size(); ++k) arr.push_back({amplitudes[k].real(), amplitudes[k].imag()});
  return arr;
}

Amplitudes decode_amplitudes(const nlohmann::json& value) {
  if (!value.is_array()) throw ProtocolError("amplitudes must be an array");
  Amplitudes a(static_cast<Eigen::Index>(value.size()));
  for (std::size_t k = 0; k < value.size(); ++k) {
    const auto& c = value[k];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
      throw ProtocolError("amplitude entries must be [re, im] pairs");
    }
    a[static_cast<Eigen::Index>(k)] = Complex(c[0].get<double>(), c[1].get<double>());
  }
  return a;
}

// --- Connection --------------------------------------------------------------

Connection::Connection(int fd, std::chrono::milliseconds timeout) : fd_(fd), timeout_(timeout) {}

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_), timeout_(other.timeout_) { other.fd_ = -1; }

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    timeout_ = other.timeout_;
    other.fd_ = -1;
  }
  return *this;
}

Connection::~Connection() { close(); }

void Connection::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Connection Connection::open(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(endpoint.port);
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw DeviceUnavailable("cannot resolve " + endpoint.to_string() + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(found);
      set_nodelay(fd);
      return Connection(fd, timeout);
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(found);
  throw DeviceUnavailable("cannot connect to " + endpoint.to_string() + ": " + last_error);
}

void Connection::write_all(const char* data, std::size_t size) {
  if (fd_ < 0) throw DeviceUnavailable("connection is closed");
  while (size > 0) {
    if (!wait_ready(fd_, POLLOUT, timeout_)) {
      throw DeviceUnavailable("timed out after " + std::to_string(timeout_.count()) + " ms sending");
    }
    const ssize_t n = ::send(fd_, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw DeviceUnavailable(errno_message("send failed"));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void Connection::read_exact(char* data, std::size_t size) {
  if (fd_ < 0) throw DeviceUnavailable("connection is closed");
  while (size > 0) {
    if (!wait_ready(fd_, POLLIN, timeout_)) {
      throw DeviceUnavailable("timed out after " + std::to_string(timeout_.count()) + " ms waiting for peer");
    }
    const ssize_t n = ::recv(fd_, data, size, 0);
    if (n == 0) throw DeviceUnavailable("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw DeviceUnavailable(errno_message("recv failed"));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void Connection::send_payload(std::string_view payload) {
  if (payload.size() > kMaxWireMessage) throw ProtocolError("outgoing message too large");
  const auto len = static_cast<std::uint32_t>(payload.size());
  const char header[4] = {static_cast<char>(len >> 24), static_cast<char>(len >> 16), static_cast<char>(len >> 8),
                          static_cast<char>(len)};
  std::string frame(header, 4);
  frame.append(payload);
  write_all(frame.data(), frame.size());
}

void Connection::send(const nlohmann::json& message) { send_payload(message.dump()); }

std::string Connection::receive_payload() {
  unsigned char header[4];
  read_exact(reinterpret_cast<char*>(header), 4);
  const std::uint32_t len = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                            (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (len > kMaxWireMessage) throw ProtocolError("incoming message of " + std::to_string(len) + " bytes is too large");
  std::string payload(len, '\0');
  read_exact(payload.data(), len);
  return payload;
}

nlohmann::json Connection::receive() {
  auto payload = receive_payload();
  auto msg = nlohmann::json::parse(payload, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) throw ProtocolError("malformed message: " + payload);
  return msg;
}

// --- Server ------------------------------------------------------------------

WireServer::WireServer(std::unique_ptr<PreparationDevice> device, const Endpoint& bind,
                       std::chrono::milliseconds timeout)
    : prep_(std::move(device)), role_(DeviceRole::kPreparer), timeout_(timeout) {
  if (!prep_) throw InvalidInput("WireServer needs a device");
  dim_ = prep_->dim();
  open_listener(bind);
}

WireServer::WireServer(std::unique_ptr<MeasurementDevice> device, const Endpoint& bind,
                       std::chrono::milliseconds timeout)
    : meas_(std::move(device)), role_(DeviceRole::kMeasurer), timeout_(timeout) {
  if (!meas_) throw InvalidInput("WireServer needs a device");
  dim_ = meas_->dim();
  open_listener(bind);
}

WireServer::~WireServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void WireServer::open_listener(const Endpoint& bind) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw DeviceUnavailable(errno_message("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(bind.port);
  if (bind.host.empty() || bind.host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (bind.host == "localhost") {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  } else if (::inet_pton(AF_INET, bind.host.c_str(), &addr.sin_addr) != 1) {
    throw InvalidInput("cannot bind to host '" + bind.host + "'; use an IPv4 address");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw DeviceUnavailable(errno_message("bind " + bind.to_string()));
  }
  if (::listen(listen_fd_, 4) != 0) throw DeviceUnavailable(errno_message("listen"));
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

void WireServer::serve(std::size_t max_sessions) {
  std::size_t sessions = 0;
  while (!stopping_ && (max_sessions == 0 || sessions < max_sessions)) {
    if (!wait_ready(listen_fd_, POLLIN, std::chrono::milliseconds(100))) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw DeviceUnavailable(errno_message("accept"));
    }
    set_nodelay(fd);
    Connection conn(fd, timeout_);
    run_session(conn);
    ++sessions;
  }
}

void WireServer::run_session(Connection& conn) {
  bool greeted = false;
  while (!stopping_) {
    std::string payload;
    try {
      payload = conn.receive_payload();
    } catch (const DeviceUnavailable&) {
      return;  // client went away or idled past the timeout
    } catch (const ProtocolError& e) {
      std::cerr << "usdcert wire: protocol error: " << e.what() << '\n';
      return;
    }
    try {
      auto request = nlohmann::json::parse(payload, nullptr, false);
      if (request.is_discarded() || !request.is_object()) throw ProtocolError("message is not a JSON object");
      const auto op = op_of(request);
      if (!greeted && op != "hello") throw ProtocolError("expected hello before '" + op + "'");
      if (op == "bye") {
        conn.send({{"op", "bye"}});
        return;
      }
      if (op == "hello") {
        if (field(request, "role") != to_string(role_)) throw ProtocolError("this server hosts a '" + std::string(to_string(role_)) + "' device");
        if (integer_field<int>(request, "dim") != dim_) throw ProtocolError("dimension mismatch in hello");
        greeted = true;
        conn.send({{"op", "hello"}, {"role", to_string(role_)}, {"dim", dim_}});
        continue;
      }
      conn.send(handle(request));
    } catch (const DeviceUnavailable&) {
      return;
    } catch (const Error& e) {
      std::cerr << "usdcert wire: protocol error: " << e.what() << "; payload: " << payload << '\n';
      try {
        conn.send({{"op", "error"}, {"message", e.what()}});
      } catch (...) {
      }
      return;
    }
  }
}

nlohmann::json WireServer::handle(const nlohmann::json& request) {
  const auto op = op_of(request);
  if (role_ == DeviceRole::kPreparer && op == "press") {
    const auto round = integer_field<std::uint64_t>(request, "round");
    const auto system = prep_->press(round, integer_field<int>(request, "x"));
    return {{"op", "state"}, {"amplitudes", encode_amplitudes(system.amplitudes)}};
  }
  if (role_ == DeviceRole::kMeasurer && op == "measure") {
    const auto round = integer_field<std::uint64_t>(request, "round");
    const auto& pair = field(request, "pair");
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
      throw ProtocolError("field 'pair' must be [y1, y2]");
    }
    auto amplitudes = decode_amplitudes(field(request, "amplitudes"));
    if (amplitudes.size() != dim_) throw ProtocolError("measured system has the wrong dimension");
    const auto outcome = meas_->measure(round, {pair[0].get<int>(), pair[1].get<int>()}, {std::move(amplitudes)});
    nlohmann::json b = outcome == Outcome::kInconclusive ? nlohmann::json("inc")
                                                         : nlohmann::json(static_cast<int>(outcome));
    return {{"op", "outcome"}, {"b", b}};
  }
  throw ProtocolError("unsupported op '" + op + "' for a '" + std::string(to_string(role_)) + "' device");
}

void wire_serve(const Endpoint& bind, std::unique_ptr<PreparationDevice> device, std::size_t max_sessions) {
  WireServer(std::move(device), bind).serve(max_sessions);
}

void wire_serve(const Endpoint& bind, std::unique_ptr<MeasurementDevice> device, std::size_t max_sessions) {
  WireServer(std::move(device), bind).serve(max_sessions);
}

std::unique_ptr<PreparationDevice> wire_connect_preparer(const Endpoint& endpoint, int dim, int buttons,
                                                         std::chrono::milliseconds timeout) {
  auto conn = Connection::open(endpoint, timeout);
  handshake(conn, DeviceRole::kPreparer, dim);
  return std::make_unique<RemotePreparer>(std::move(conn), dim, buttons);
}

std::unique_ptr<MeasurementDevice> wire_connect_measurer(const Endpoint& endpoint, int dim,
                                                         std::chrono::milliseconds timeout) {
  auto conn = Connection::open(endpoint, timeout);
  handshake(conn, DeviceRole::kMeasurer, dim);
  return std::make_unique<RemoteMeasurer>(std::move(conn), dim);
}

}  // namespace usdcert

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

#ifndef USDCERT_WIRE_HPP
#define USDCERT_WIRE_HPP

// Device separation over TCP. Every message is a 4-byte big-endian length
// followed by that many bytes of UTF-8 JSON:
//
//   {"op":"hello","role":"prep"|"meas","dim":d}       -> same, echoed back
//   {"op":"press","round":k,"x":x}                    -> {"op":"state","amplitudes":[[re,im],...]}
//   {"op":"measure","round":k,"pair":[y1,y2],"amplitudes":[[re,im],...]}
//                                                     -> {"op":"outcome","b":-1|1|"inc"}
//   {"op":"bye"}                                      -> {"op":"bye"}
//
// A server answers anything it cannot process with {"op":"error","message":...}
// and closes the session.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "usdcert/harness.hpp"

namespace usdcert {

inline constexpr std::chrono::milliseconds kDefaultWireTimeout{5000};
inline constexpr std::uint32_t kMaxWireMessage = 64u << 20;

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Parses "host:port" or ":port".
  static Endpoint parse(std::string_view text);
  std::string to_string() const;
};

enum class DeviceRole { kPreparer, kMeasurer };
std::string_view to_string(DeviceRole role) noexcept;

/// Framed JSON over one TCP socket. Reads and writes time out after the
/// configured duration with DeviceUnavailable; a closed peer raises the same.
class Connection {
 public:
  Connection(int fd, std::chrono::milliseconds timeout);
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  static Connection open(const Endpoint& endpoint, std::chrono::milliseconds timeout = kDefaultWireTimeout);

  void send(const nlohmann::json& message);
  void send_payload(std::string_view payload);
  nlohmann::json receive();
  std::string receive_payload();

  bool is_open() const noexcept { return fd_ >= 0; }
  void close() noexcept;

 private:
  void write_all(const char* data, std::size_t size);
  void read_exact(char* data, std::size_t size);

  int fd_ = -1;
  std::chrono::milliseconds timeout_;
};

/// Hosts one device behind a listening socket and answers sessions one at a time.
class WireServer {
 public:
  WireServer(std::unique_ptr<PreparationDevice> device, const Endpoint& bind,
             std::chrono::milliseconds timeout = kDefaultWireTimeout);
  WireServer(std::unique_ptr<MeasurementDevice> device, const Endpoint& bind,
             std::chrono::milliseconds timeout = kDefaultWireTimeout);
  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;
  ~WireServer();

  std::uint16_t port() const noexcept { return port_; }
  DeviceRole role() const noexcept { return role_; }

  /// Serves sessions until `max_sessions` have ended (0 = no limit) or stop().
  void serve(std::size_t max_sessions = 0);
  void stop() noexcept { stopping_ = true; }

 private:
  void open_listener(const Endpoint& bind);
  void run_session(Connection& conn);
  nlohmann::json handle(const nlohmann::json& request);

  std::unique_ptr<PreparationDevice> prep_;
  std::unique_ptr<MeasurementDevice> meas_;
  DeviceRole role_;
  int dim_ = 0;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::chrono::milliseconds timeout_;
  std::atomic<bool> stopping_{false};
};

/// Blocking convenience wrappers around WireServer::serve.
void wire_serve(const Endpoint& bind, std::unique_ptr<PreparationDevice> device, std::size_t max_sessions = 0);
void wire_serve(const Endpoint& bind, std::unique_ptr<MeasurementDevice> device, std::size_t max_sessions = 0);

/// Connects to a remote device and performs the hello handshake.
std::unique_ptr<PreparationDevice> wire_connect_preparer(const Endpoint& endpoint, int dim, int buttons,
                                                         std::chrono::milliseconds timeout = kDefaultWireTimeout);
std::unique_ptr<MeasurementDevice> wire_connect_measurer(const Endpoint& endpoint, int dim,
                                                         std::chrono::milliseconds timeout = kDefaultWireTimeout);

nlohmann::json encode_amplitudes(const Amplitudes& amplitudes);
Amplitudes decode_amplitudes(const nlohmann::json& value);

}  // namespace usdcert

#endif  // USDCERT_WIRE_HPP

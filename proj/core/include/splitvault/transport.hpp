// Copyright 2026 The Splitvault Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef SPLITVAULT_TRANSPORT_HPP_
#define SPLITVAULT_TRANSPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "splitvault/wire.hpp"

namespace splitvault {

// Reliable ordered byte stream. recv_exact throws kTruncated when the peer
// closes before n bytes arrive.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::span<const std::uint8_t> bytes) = 0;
  virtual void recv_exact(std::span<std::uint8_t> out) = 0;
  virtual void close() = 0;

  std::uint64_t bytes_sent() const noexcept { return sent_; }
  std::uint64_t bytes_received() const noexcept { return received_; }

 protected:
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
};

void SendFrame(Transport& t, const Frame& frame);
Frame RecvFrame(Transport& t);

// In-process pair; bytes written to one end are read from the other.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> MakeLoopbackPair();

class TcpListener {
 public:
  // "host:port"; port 0 picks a free port.
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  // Blocks; returns nullptr after shutdown().
  std::unique_ptr<Transport> accept();
  void shutdown();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<Transport> TcpConnect(const std::string& address);

// Splits "host:port"; throws kArgument.
std::pair<std::string, std::uint16_t> ParseAddress(const std::string& address);

}  // namespace splitvault

#endif  // SPLITVAULT_TRANSPORT_HPP_

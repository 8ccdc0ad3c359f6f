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
#include "splitvault/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <vector>

#include <fmt/format.h>

#include "splitvault/error.hpp"

namespace splitvault {

void SendFrame(Transport& t, const Frame& frame) { t.send(EncodeFrame(frame)); }

Frame RecvFrame(Transport& t) {
  std::vector<std::uint8_t> buf(kFrameHeaderSize);
  t.recv_exact(buf);
  const FrameHeader h = DecodeFrameHeader(buf);
  buf.resize(kFrameHeaderSize + h.payload_len);
  t.recv_exact(std::span(buf).subspan(kFrameHeaderSize));
  return DecodeFrame(buf);
}

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class LoopbackTransport : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~LoopbackTransport() override { close(); }

  void send(std::span<const std::uint8_t> bytes) override {
    {
      std::lock_guard lock(out_->mu);
      if (out_->closed) throw Error(ErrorKind::kIo, "loopback peer closed");
      out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.end());
    }
    out_->cv.notify_all();
    sent_ += bytes.size();
  }

  void recv_exact(std::span<std::uint8_t> out) override {
    std::unique_lock lock(in_->mu);
    std::size_t got = 0;
    while (got < out.size()) {
      in_->cv.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
      if (in_->bytes.empty()) {
        throw Error(ErrorKind::kTruncated, fmt::format("connection closed after {} of {} bytes", got, out.size()));
      }
      const std::size_t take = std::min(out.size() - got, in_->bytes.size());
      std::copy_n(in_->bytes.begin(), take, out.begin() + static_cast<std::ptrdiff_t>(got));
      in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + static_cast<std::ptrdiff_t>(take));
      got += take;
    }
    received_ += out.size();
  }

  void close() override {
    for (auto& p : {in_, out_}) {
      {
        std::lock_guard lock(p->mu);
        p->closed = true;
      }
      p->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_, out_;
};

class SocketTransport : public Transport {
 public:
  explicit SocketTransport(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~SocketTransport() override { close(); }

  void send(std::span<const std::uint8_t> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t k = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
      if (k < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::kIo, fmt::format("send failed: {}", std::strerror(errno)));
      }
      done += static_cast<std::size_t>(k);
    }
    sent_ += bytes.size();
  }

  void recv_exact(std::span<std::uint8_t> out) override {
    std::size_t got = 0;
    while (got < out.size()) {
      const ssize_t k = ::recv(fd_, out.data() + got, out.size() - got, 0);
      if (k < 0 && errno == EINTR) continue;
      if (k < 0) throw Error(ErrorKind::kIo, fmt::format("recv failed: {}", std::strerror(errno)));
      if (k == 0) {
        throw Error(ErrorKind::kTruncated, fmt::format("connection closed after {} of {} bytes", got, out.size()));
      }
      got += static_cast<std::size_t>(k);
    }
    received_ += out.size();
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

sockaddr_in Resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string h = host.empty() || host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (::getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw Error(ErrorKind::kIo, fmt::format("cannot resolve host '{}'", host));
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> MakeLoopbackPair() {
  auto a = std::make_shared<Pipe>();
  auto b = std::make_shared<Pipe>();
  return {std::make_unique<LoopbackTransport>(a, b), std::make_unique<LoopbackTransport>(b, a)};
}

std::pair<std::string, std::uint16_t> ParseAddress(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kArgument, fmt::format("address '{}' is not host:port", address));
  }
  const std::string port = address.substr(colon + 1);
  unsigned long p = 0;
  try {
    std::size_t used = 0;
    p = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kArgument, fmt::format("bad port in '{}'", address));
  }
  if (p > 65535) throw Error(ErrorKind::kArgument, fmt::format("port {} out of range", p));
  return {address.substr(0, colon), static_cast<std::uint16_t>(p)};
}

TcpListener::TcpListener(const std::string& address) {
  const auto [host, port] = ParseAddress(address);
  const sockaddr_in addr = Resolve(host, port);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorKind::kIo, fmt::format("socket: {}", std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw Error(ErrorKind::kIo, fmt::format("cannot listen on {}: {}", address, why));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
  shutdown();
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Transport> TcpListener::accept() {
  while (true) {
    const int c = ::accept(fd_, nullptr, nullptr);
    if (c >= 0) return std::make_unique<SocketTransport>(c);
    if (errno == EINTR) continue;
    return nullptr;
  }
}

void TcpListener::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

std::unique_ptr<Transport> TcpConnect(const std::string& address) {
  const auto [host, port] = ParseAddress(address);
  const sockaddr_in addr = Resolve(host, port);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorKind::kIo, fmt::format("socket: {}", std::strerror(errno)));
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw Error(ErrorKind::kIo, fmt::format("cannot connect to {}: {}", address, why));
  }
  return std::make_unique<SocketTransport>(fd);
}

}  // namespace splitvault

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
#ifndef SPLITVAULT_SPLIT_SERVER_HPP_
#define SPLITVAULT_SPLIT_SERVER_HPP_

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>

#include "splitvault/toy_stack.hpp"
#include "splitvault/transport.hpp"

namespace splitvault {

struct SessionSummary {
  std::uint64_t session = 0;
  bool tuning = false;
  std::size_t frames_in = 0;
  std::optional<ProtocolError> error;  // set when the session ended with ERROR
  Middle middle;                       // final per-session weights (tuning)
};

// Cloud side: owns the middle block. Inference sessions share the weights
// read-only; each tuning session works on its own copy.
class MiddleServer {
 public:
  explicit MiddleServer(Middle middle);

  // Serves one connection until BYE, peer close, or a protocol error (which
  // is answered with an ERROR frame before closing).
  SessionSummary serve(Transport& transport);

  const Middle& middle() const noexcept { return *base_; }

 private:
  std::shared_ptr<const Middle> base_;
  std::atomic<std::uint64_t> next_session_{1};
};

// Accepts connections until listener.shutdown(); one thread per connection.
void ServeTcp(TcpListener& listener, MiddleServer& server);

}  // namespace splitvault

#endif  // SPLITVAULT_SPLIT_SERVER_HPP_

// Copyright 2026 The sgpipe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sgp {

using NodeId = std::uint32_t;
using EdgeId = std::uint64_t;
using WorkerIndex = std::uint32_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;

  friend constexpr bool operator==(const Edge&, const Edge&) = default;
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised when a peer fails to deliver within the configured deadline.
class TimeoutError : public Error {
 public:
  TimeoutError(WorkerIndex worker, const std::string& what)
      : Error("worker " + std::to_string(worker) + ": " + what), worker_(worker) {}
  WorkerIndex worker() const noexcept { return worker_; }

 private:
  WorkerIndex worker_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class QueueClosed : public Error {
 public:
  using Error::Error;
};

}  // namespace sgp

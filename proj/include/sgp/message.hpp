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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "sgp/learn.hpp"
#include "sgp/reduction.hpp"

namespace sgp {

enum class MessageKind { shard_contribution, reduce_result, grad_chunk, subgraph_ready, shutdown };

struct ShardPayload {
  std::size_t node_slot = 0;  // index into the reduction's hot-node list
  NeighborShard shard;
  std::size_t rounds = 0;     // longest message chain folded into this shard
};

// Gather phase carries (origin worker, contribution) pairs; broadcast phase
// carries the averaged result.
struct GradPayload {
  std::vector<std::pair<WorkerIndex, std::shared_ptr<const GradientSet>>> parts;
  std::shared_ptr<const GradientSet> result;
};

struct ScalarPayload {
  std::vector<std::pair<WorkerIndex, std::array<double, 2>>> parts;  // (value, count)
  std::optional<double> result;
};

struct SubgraphReady {
  std::size_t count = 0;
  std::size_t sampled_nodes = 0;
};

struct Message {
  MessageKind kind = MessageKind::shutdown;
  WorkerIndex sender = 0;
  std::uint64_t tag = 0;
  std::variant<std::monostate, ShardPayload, GradPayload, ScalarPayload, SubgraphReady> payload;

  bool valid() const noexcept {
    switch (kind) {
      case MessageKind::shard_contribution:
      case MessageKind::reduce_result:
        return std::holds_alternative<ShardPayload>(payload);
      case MessageKind::grad_chunk:
        return std::holds_alternative<GradPayload>(payload) || std::holds_alternative<ScalarPayload>(payload);
      case MessageKind::subgraph_ready:
        return std::holds_alternative<SubgraphReady>(payload);
      case MessageKind::shutdown:
        return std::holds_alternative<std::monostate>(payload);
    }
    return false;
  }
};

}  // namespace sgp

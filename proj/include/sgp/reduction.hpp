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
#include <optional>
#include <span>
#include <vector>

#include "sgp/graph.hpp"
#include "sgp/types.hpp"

namespace sgp {

// Complete arity-ary tree over workers 0..n-1 in breadth-first order:
// parent(w) = (w - 1) / arity, children(w) = arity*w + 1 .. arity*w + arity.
class ReductionTree {
 public:
  ReductionTree(std::size_t num_workers, std::size_t arity);

  std::size_t num_workers() const noexcept { return num_workers_; }
  std::size_t arity() const noexcept { return arity_; }

  std::optional<WorkerIndex> parent(WorkerIndex w) const;
  std::vector<WorkerIndex> children(WorkerIndex w) const;
  std::size_t level(WorkerIndex w) const;

  // ceil(log_arity(num_workers)); an upper bound on height().
  std::size_t depth() const noexcept { return depth_; }
  // Edges on the longest root-to-leaf path.
  std::size_t height() const noexcept { return height_; }

  std::vector<std::vector<WorkerIndex>> levels() const;
  std::size_t subtree_size(WorkerIndex w) const;

 private:
  void check(WorkerIndex w) const;

  std::size_t num_workers_;
  std::size_t arity_;
  std::size_t depth_ = 0;
  std::size_t height_ = 0;
};

struct NeighborShard {
  NodeId hot_node = 0;
  std::vector<NodeId> neighbors;  // sorted, unique

  friend bool operator==(const NeighborShard&, const NeighborShard&) = default;
};

NeighborShard make_shard(NodeId hot_node, std::vector<NodeId> neighbors);

NeighborShard merge_shards(const NeighborShard& a, const NeighborShard& b);

struct HotNodePolicy {
  std::size_t degree_threshold = 10'000;
  void validate() const;
};

struct ReduceOutcome {
  NeighborShard result;
  std::size_t messages = 0;       // one per non-root worker
  std::size_t critical_path = 0;  // message rounds until the root completes
};

// shards[w] is worker w's contribution; a missing entry raises TimeoutError
// naming that worker.
ReduceOutcome tree_reduce(const ReductionTree& tree, std::span<const std::optional<NeighborShard>> shards);
ReduceOutcome tree_reduce(const ReductionTree& tree, std::span<const NeighborShard> shards);

// Worker w's shard of v's out-neighbors from its local partition.
NeighborShard extract_shard(const EdgePartition& part, NodeId v);

// Full neighbor list of a hot node, assembled by tree reduction over partitions.
ReduceOutcome gather_hot_neighbors(std::span<const EdgePartition> partitions, NodeId v, const HotNodePolicy& policy,
                                   const ReductionTree& tree);

}  // namespace sgp

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

#include "sgp/reduction.hpp"

#include <algorithm>
#include <iterator>
#include <string>

namespace sgp {

ReductionTree::ReductionTree(std::size_t num_workers, std::size_t arity) : num_workers_(num_workers), arity_(arity) {
  if (num_workers == 0) throw std::invalid_argument("reduction tree needs at least one worker");
  if (arity < 2) throw std::invalid_argument("tree arity must be >= 2");
  for (std::size_t reach = 1; reach < num_workers; reach *= arity) ++depth_;
  height_ = level(static_cast<WorkerIndex>(num_workers - 1));
}

void ReductionTree::check(WorkerIndex w) const {
  if (w >= num_workers_) throw std::out_of_range("worker " + std::to_string(w) + " not in reduction tree");
}

std::optional<WorkerIndex> ReductionTree::parent(WorkerIndex w) const {
  check(w);
  if (w == 0) return std::nullopt;
  return static_cast<WorkerIndex>((w - 1) / arity_);
}

std::vector<WorkerIndex> ReductionTree::children(WorkerIndex w) const {
  check(w);
  std::vector<WorkerIndex> out;
  for (std::size_t k = 1; k <= arity_; ++k) {
    const std::size_t c = arity_ * w + k;
    if (c >= num_workers_) break;
    out.push_back(static_cast<WorkerIndex>(c));
  }
  return out;
}

std::size_t ReductionTree::level(WorkerIndex w) const {
  check(w);
  std::size_t lvl = 0;
  while (w != 0) {
    w = static_cast<WorkerIndex>((w - 1) / arity_);
    ++lvl;
  }
  return lvl;
}

std::vector<std::vector<WorkerIndex>> ReductionTree::levels() const {
  std::vector<std::vector<WorkerIndex>> out(height_ + 1);
  for (std::size_t w = 0; w < num_workers_; ++w) out[level(static_cast<WorkerIndex>(w))].push_back(static_cast<WorkerIndex>(w));
  return out;
}

std::size_t ReductionTree::subtree_size(WorkerIndex w) const {
  check(w);
  std::size_t size = 1;
  for (WorkerIndex c : children(w)) size += subtree_size(c);
  return size;
}

NeighborShard make_shard(NodeId hot_node, std::vector<NodeId> neighbors) {
  std::sort(neighbors.begin(), neighbors.end());
  neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());
  return {hot_node, std::move(neighbors)};
}

NeighborShard merge_shards(const NeighborShard& a, const NeighborShard& b) {
  if (a.hot_node != b.hot_node)
    throw std::invalid_argument("cannot merge shards of nodes " + std::to_string(a.hot_node) + " and " +
                                std::to_string(b.hot_node));
  NeighborShard out{a.hot_node, {}};
  out.neighbors.reserve(a.neighbors.size() + b.neighbors.size());
  std::set_union(a.neighbors.begin(), a.neighbors.end(), b.neighbors.begin(), b.neighbors.end(),
                 std::back_inserter(out.neighbors));
  return out;
}

void HotNodePolicy::validate() const {
  if (degree_threshold == 0) throw std::invalid_argument("hot degree threshold must be >= 1");
}

ReduceOutcome tree_reduce(const ReductionTree& tree, std::span<const std::optional<NeighborShard>> shards) {
  const std::size_t n = tree.num_workers();
  if (shards.size() > n) throw std::invalid_argument("more shards than workers in the tree");
  for (std::size_t w = 0; w < n; ++w)
    if (w >= shards.size() || !shards[w])
      throw TimeoutError(static_cast<WorkerIndex>(w), "no shard contribution received");
  const NodeId hot = shards[0]->hot_node;

  std::vector<NeighborShard> acc(n);
  std::vector<std::size_t> ready(n, 0);
  for (std::size_t w = 0; w < n; ++w) {
    if (shards[w]->hot_node != hot)
      throw std::invalid_argument("worker " + std::to_string(w) + " sent a shard for another node");
    acc[w] = *shards[w];
  }

  ReduceOutcome out;
  // Children have larger indices than their parents, so a descending sweep
  // delivers every subtree's result before its parent forwards.
  for (std::size_t w = n - 1; w >= 1; --w) {
    const WorkerIndex p = *tree.parent(static_cast<WorkerIndex>(w));
    acc[p] = merge_shards(acc[p], acc[w]);
    ready[p] = std::max(ready[p], ready[w] + 1);
    ++out.messages;
  }
  out.result = std::move(acc[0]);
  out.critical_path = ready[0];
  return out;
}

ReduceOutcome tree_reduce(const ReductionTree& tree, std::span<const NeighborShard> shards) {
  std::vector<std::optional<NeighborShard>> wrapped(shards.begin(), shards.end());
  return tree_reduce(tree, wrapped);
}

NeighborShard extract_shard(const EdgePartition& part, NodeId v) {
  NeighborShard shard{v, {}};
  for (const Edge& e : part.local_edges(v)) shard.neighbors.push_back(e.dst);
  return shard;
}

ReduceOutcome gather_hot_neighbors(std::span<const EdgePartition> partitions, NodeId v, const HotNodePolicy& policy,
                                   const ReductionTree& tree) {
  policy.validate();
  if (partitions.size() != tree.num_workers())
    throw std::invalid_argument("partition count does not match reduction tree");
  std::vector<NeighborShard> shards;
  shards.reserve(partitions.size());
  std::size_t degree = 0;
  for (const auto& p : partitions) {
    shards.push_back(extract_shard(p, v));
    degree += shards.back().neighbors.size();
  }
  if (degree < policy.degree_threshold)
    throw std::invalid_argument("node " + std::to_string(v) + " is below the hot threshold; use direct adjacency");
  return tree_reduce(tree, shards);
}

}  // namespace sgp

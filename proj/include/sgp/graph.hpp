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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "sgp/types.hpp"

namespace sgp {

enum class Directedness { directed, undirected };

// Immutable CSR adjacency. Targets within each node's span are sorted and
// unique; safe to share across threads once constructed.
class Graph {
 public:
  Graph() = default;

  // Builds canonical CSR from an arbitrary edge list; duplicate edges collapse.
  // `original_ids` may be empty, in which case node v reports v.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                          std::vector<std::uint64_t> original_ids = {});

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return targets_.size(); }

  std::size_t degree(NodeId v) const;
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t max_degree() const noexcept;

  std::span<const EdgeId> offsets() const noexcept { return offsets_; }
  std::span<const NodeId> targets() const noexcept { return targets_; }

  // Dense id -> id as it appeared in the input file.
  std::uint64_t original_id(NodeId v) const;
  std::span<const std::uint64_t> original_ids() const noexcept { return original_ids_; }

  // All edges in CSR order (sorted by src, then dst).
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<EdgeId> offsets_;
  std::vector<NodeId> targets_;
  std::vector<std::uint64_t> original_ids_;
};

// Parses `src dst` lines; `#` lines and blank lines are skipped. Node ids are
// remapped to 0..|V|-1 in first-appearance order.
Graph parse_edge_list(std::string_view text, Directedness directedness);
Graph load_edge_list(const std::filesystem::path& path, Directedness directedness);

// Writes original ids. Line order is chosen so that reloading a graph that
// itself came from load_edge_list reproduces the same dense numbering.
void write_edge_list(const std::filesystem::path& path, const Graph& g);
std::string format_edge_list(const Graph& g);

enum class PartitionStrategy { src_hash, block };

struct EdgePartition {
  WorkerIndex worker_id = 0;
  std::vector<Edge> edges;  // sorted by (src, dst)

  // Out-neighbors of v held by this partition.
  std::span<const Edge> local_edges(NodeId v) const;
};

struct PartitionStats {
  std::size_t max_size = 0;
  std::size_t min_size = 0;
  double balance_ratio = 1.0;  // max/min; infinity when some partition is empty
  std::size_t cut_edges = 0;   // edges whose dst is homed on another worker
};

std::vector<EdgePartition> partition_edges(const Graph& g, std::size_t num_workers,
                                           PartitionStrategy strategy = PartitionStrategy::src_hash);
PartitionStats partition_stats(const Graph& g, std::span<const EdgePartition> parts);

}  // namespace sgp

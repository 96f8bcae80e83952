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
#include <unordered_map>
#include <vector>

#include "sgp/graph.hpp"
#include "sgp/types.hpp"

namespace sgp {

// Seed nodes plus the shuffle seed. Rejects duplicates and ids >= num_nodes.
class SeedSet {
 public:
  SeedSet(std::vector<NodeId> seeds, std::uint64_t rng_seed, std::size_t num_nodes);

  std::span<const NodeId> seeds() const noexcept { return seeds_; }
  std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  std::size_t size() const noexcept { return seeds_.size(); }

 private:
  std::vector<NodeId> seeds_;
  std::uint64_t rng_seed_;
};

// Reads one original node id per line (`#` comments allowed) and maps to dense ids.
SeedSet read_seed_file(const std::filesystem::path& path, const Graph& g, std::uint64_t rng_seed);

// Uniform sample without replacement of max(1, fraction * |V|) nodes, ascending.
SeedSet sample_seeds(const Graph& g, double fraction, std::uint64_t rng_seed);

// In-place Fisher-Yates: for i = n-1 .. 1, swap(a[i], a[Rng::below(i + 1)]).
void shuffle_nodes(std::span<NodeId> nodes, std::uint64_t rng_seed);

class BalanceTable {
 public:
  std::size_t num_workers() const noexcept { return num_workers_; }
  std::size_t per_worker() const noexcept { return per_worker_; }

  // Retained seeds in shuffled order; position i is owned by worker i mod W.
  std::span<const NodeId> assigned() const noexcept { return assigned_; }
  std::span<const NodeId> discarded() const noexcept { return discarded_; }
  std::span<const std::size_t> per_worker_counts() const noexcept { return counts_; }

  bool contains(NodeId seed) const { return owner_.contains(seed); }
  WorkerIndex worker_of(NodeId seed) const;

  friend bool operator==(const BalanceTable&, const BalanceTable&) = default;

 private:
  friend BalanceTable build_balance_table(const SeedSet& seeds, std::size_t num_workers);

  std::size_t num_workers_ = 0;
  std::size_t per_worker_ = 0;
  std::vector<NodeId> assigned_;
  std::vector<NodeId> discarded_;
  std::vector<std::size_t> counts_;
  std::unordered_map<NodeId, WorkerIndex> owner_;
};

BalanceTable build_balance_table(const SeedSet& seeds, std::size_t num_workers);

std::vector<NodeId> seeds_for_worker(const BalanceTable& table, std::size_t worker);

}  // namespace sgp

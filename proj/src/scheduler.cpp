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

#include "sgp/scheduler.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>
#include <unordered_set>

#include "sgp/rng.hpp"

namespace sgp {

SeedSet::SeedSet(std::vector<NodeId> seeds, std::uint64_t rng_seed, std::size_t num_nodes)
    : seeds_(std::move(seeds)), rng_seed_(rng_seed) {
  std::unordered_set<NodeId> seen;
  seen.reserve(seeds_.size());
  for (NodeId s : seeds_) {
    if (s >= num_nodes) throw std::out_of_range("seed " + std::to_string(s) + " is not a graph node");
    if (!seen.insert(s).second) throw std::invalid_argument("duplicate seed " + std::to_string(s));
  }
}

SeedSet read_seed_file(const std::filesystem::path& path, const Graph& g, std::uint64_t rng_seed) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open seed file " + path.string());
  std::unordered_map<std::uint64_t, NodeId> dense;
  dense.reserve(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) dense.emplace(g.original_id(v), v);

  std::vector<NodeId> seeds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::uint64_t id = 0;
    auto [p, ec] = std::from_chars(line.data() + first, line.data() + last + 1, id);
    if (ec != std::errc() || p != line.data() + last + 1) throw ParseError(line_no, "malformed seed id");
    auto it = dense.find(id);
    if (it == dense.end()) throw ParseError(line_no, "seed " + std::to_string(id) + " not in graph");
    seeds.push_back(it->second);
  }
  if (seeds.empty()) throw Error("seed file contains no seeds");
  return SeedSet(std::move(seeds), rng_seed, g.num_nodes());
}

SeedSet sample_seeds(const Graph& g, double fraction, std::uint64_t rng_seed) {
  const std::size_t n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("graph has no nodes");
  std::size_t k = static_cast<std::size_t>(fraction * static_cast<double>(n));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<NodeId> all(n);
  for (std::size_t v = 0; v < n; ++v) all[v] = static_cast<NodeId>(v);
  // Derived stream so seed selection and balance-table shuffle are independent.
  shuffle_nodes(all, hash_words({rng_seed, 0x5eed5u}));
  all.resize(k);
  std::sort(all.begin(), all.end());
  return SeedSet(std::move(all), rng_seed, n);
}

void shuffle_nodes(std::span<NodeId> nodes, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  for (std::size_t i = nodes.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(nodes[i - 1], nodes[j]);
  }
}

WorkerIndex BalanceTable::worker_of(NodeId seed) const {
  auto it = owner_.find(seed);
  if (it == owner_.end()) throw std::out_of_range("seed " + std::to_string(seed) + " is not assigned");
  return it->second;
}

BalanceTable build_balance_table(const SeedSet& seeds, std::size_t num_workers) {
  if (num_workers == 0) throw std::invalid_argument("num_workers must be >= 1");
  if (seeds.size() == 0) throw std::invalid_argument("seed set is empty");

  std::vector<NodeId> order(seeds.seeds().begin(), seeds.seeds().end());
  shuffle_nodes(order, seeds.rng_seed());

  BalanceTable t;
  t.num_workers_ = num_workers;
  t.per_worker_ = order.size() / num_workers;
  const std::size_t max_i = t.per_worker_ * num_workers;
  t.counts_.assign(num_workers, 0);
  t.assigned_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(max_i));
  t.discarded_.assign(order.begin() + static_cast<std::ptrdiff_t>(max_i), order.end());
  t.owner_.reserve(max_i);
  for (std::size_t i = 0; i < max_i; ++i) {
    const auto w = static_cast<WorkerIndex>(i % num_workers);
    t.owner_.emplace(t.assigned_[i], w);
    ++t.counts_[w];
  }
  return t;
}

std::vector<NodeId> seeds_for_worker(const BalanceTable& table, std::size_t worker) {
  if (worker >= table.num_workers())
    throw std::out_of_range("worker " + std::to_string(worker) + " out of range");
  std::vector<NodeId> out;
  out.reserve(table.per_worker());
  const auto assigned = table.assigned();
  for (std::size_t i = worker; i < assigned.size(); i += table.num_workers()) out.push_back(assigned[i]);
  return out;
}

}  // namespace sgp

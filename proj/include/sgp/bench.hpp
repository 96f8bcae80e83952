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

#include <string>
#include <vector>

#include "sgp/runtime.hpp"

namespace sgp {

struct ScalingRow {
  std::size_t workers = 0;
  std::size_t arity = 0;
  std::size_t subgraphs = 0;
  std::size_t sampled_nodes = 0;
  double wall_seconds = 0;
  double subgraphs_per_second = 0;
  double sampled_nodes_per_second = 0;
  double speedup = 1.0;     // sampled-nodes/sec relative to the 1-worker row of the same arity
  bool regression = false;  // throughput fell below the previous worker count
};

struct ReductionRow {
  std::size_t workers = 0;
  std::size_t arity = 0;
  std::size_t messages = 0;
  std::size_t critical_path = 0;
  double wall_time_us = 0;
};

// Generation-only cluster runs (no training) over each (workers, arity) pair.
// A 1-worker baseline is run per arity even when `workers` omits it.
std::vector<ScalingRow> bench_generation(const Graph& g, const SeedSet& seeds, std::vector<std::size_t> workers,
                                         const std::vector<std::size_t>& arities, const ClusterConfig& base,
                                         std::size_t repeats = 1);

// Threaded tree reduction of `hot_nodes` random shard sets of `shard_size` ids.
std::vector<ReductionRow> bench_reduction(const std::vector<std::size_t>& workers,
                                          const std::vector<std::size_t>& arities, std::size_t hot_nodes,
                                          std::size_t shard_size, std::uint64_t rng_seed);

// workers,arity,subgraphs,sampled_nodes,wall_time_us,subgraphs_per_sec,sampled_nodes_per_sec,speedup,regression
std::string format_scaling_csv(const std::vector<ScalingRow>& rows);
// workers,arity,messages,critical_path,wall_time_us
std::string format_reduction_csv(const std::vector<ReductionRow>& rows);

}  // namespace sgp

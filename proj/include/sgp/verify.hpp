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

#include <optional>
#include <string>
#include <vector>

#include "sgp/runtime.hpp"

namespace sgp {

struct VerifyConfig {
  std::size_t num_workers = 4;
  ClusterConfig cluster;         // fanouts, plan, hot policy, arity, training knobs
  std::size_t random_shard_sets = 100;
  std::size_t train_epochs = 2;  // epochs for the data-parallel check
};

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
  std::string summary() const;
};

// (a) distributed generation vs. the serial reference sampler,
// (b) tree vs. flat neighbor reduction (hot nodes and random shard sets),
// (c) W-worker data-parallel training vs. one context on W-sample batches.
VerifyReport run_verify(const Graph& g, const SeedSet& seeds, const VerifyConfig& cfg);

VerifyCheck verify_generation(const Graph& g, const SeedSet& seeds, const VerifyConfig& cfg);
VerifyCheck verify_reduction(const Graph& g, const VerifyConfig& cfg);
VerifyCheck verify_data_parallel(const Graph& g, const SeedSet& seeds, const VerifyConfig& cfg);

// First difference between two subgraphs of the same seed, if any.
std::optional<std::string> diff_subgraphs(const Subgraph& expected, const Subgraph& actual, const Graph& g);

}  // namespace sgp

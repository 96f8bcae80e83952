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

#include <vector>

#include "sgp/subgen.hpp"

// Serial reference sampler. Written independently of the optimized kernel
// (ordered containers, no scratch reuse, reads the global CSR only), sharing
// nothing with it but the per-(seed, hop, node) stream derivation.
namespace sgp::reference {

std::vector<NodeId> sample_neighbors(std::span<const NodeId> neighbors, std::size_t fanout, Rng& stream);

Subgraph generate_subgraph(const Graph& g, NodeId seed, const FanoutConfig& cfg, const SamplePlan& plan,
                           const FeatureProvider& features);

// Indexed like table.assigned().
std::vector<Subgraph> generate_all(const Graph& g, const BalanceTable& table, const FanoutConfig& cfg,
                                   const SamplePlan& plan, const FeatureProvider& features);

}  // namespace sgp::reference

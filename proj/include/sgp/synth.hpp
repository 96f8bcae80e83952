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
#include <string>
#include <vector>

#include "sgp/types.hpp"

namespace sgp {

enum class GraphModel { uniform, powerlaw };

GraphModel parse_graph_model(const std::string& s);

// Exactly `num_edges` distinct undirected pairs without self-loops. When
// num_edges >= num_nodes - 1 the first num_nodes - 1 pairs form a random
// spanning tree (node i attaches to a uniform earlier node). The rest pick
// endpoints uniformly (uniform) or with weight (i + 1)^-0.8 (powerlaw), which
// concentrates degree on low ids and produces hot nodes.
std::vector<Edge> synthesize_edges(std::size_t num_nodes, std::size_t num_edges, GraphModel model,
                                   std::uint64_t rng_seed);

void write_synthetic_graph(const std::filesystem::path& path, std::size_t num_nodes, std::size_t num_edges,
                           GraphModel model, std::uint64_t rng_seed);

}  // namespace sgp

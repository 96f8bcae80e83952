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

#include "sgp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "sgp/rng.hpp"

namespace sgp {

GraphModel parse_graph_model(const std::string& s) {
  if (s == "uniform") return GraphModel::uniform;
  if (s == "powerlaw") return GraphModel::powerlaw;
  throw std::invalid_argument("graph model must be uniform or powerlaw, got '" + s + "'");
}

std::vector<Edge> synthesize_edges(std::size_t num_nodes, std::size_t num_edges, GraphModel model,
                                   std::uint64_t rng_seed) {
  if (num_nodes < 2) throw std::invalid_argument("need at least two nodes");
  const double max_pairs = static_cast<double>(num_nodes) * static_cast<double>(num_nodes - 1) / 2.0;
  if (static_cast<double>(num_edges) > 0.5 * max_pairs)
    throw std::invalid_argument("edge count too close to the complete graph for rejection sampling");

  Rng rng(rng_seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(num_edges * 2);
  std::vector<Edge> out;
  out.reserve(num_edges);
  auto add = [&](NodeId a, NodeId b) {
    if (a == b) return false;
    const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
    if (!seen.insert(key).second) return false;
    out.push_back({a, b});
    return true;
  };

  if (num_edges >= num_nodes - 1)
    for (std::size_t i = 1; i < num_nodes; ++i) add(static_cast<NodeId>(i), static_cast<NodeId>(rng.below(i)));

  std::vector<double> cdf;
  if (model == GraphModel::powerlaw) {
    cdf.resize(num_nodes);
    double total = 0;
    for (std::size_t i = 0; i < num_nodes; ++i) cdf[i] = (total += std::pow(static_cast<double>(i + 1), -0.8));
    for (double& c : cdf) c /= total;
  }
  auto pick = [&]() -> NodeId {
    if (model == GraphModel::uniform) return static_cast<NodeId>(rng.below(num_nodes));
    const double u = rng.unit();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<NodeId>(std::min<std::size_t>(it - cdf.begin(), num_nodes - 1));
  };
  std::size_t attempts = 0;
  while (out.size() < num_edges) {
    if (++attempts > 100 * num_edges + 1000) throw Error("synthetic generator could not place enough distinct edges");
    // Powerlaw: one weighted endpoint and one uniform endpoint keeps rejection
    // rates low while still producing very high-degree hubs.
    const NodeId a = pick();
    const NodeId b = model == GraphModel::powerlaw ? static_cast<NodeId>(rng.below(num_nodes)) : pick();
    add(a, b);
  }
  return out;
}

void write_synthetic_graph(const std::filesystem::path& path, std::size_t num_nodes, std::size_t num_edges,
                           GraphModel model, std::uint64_t rng_seed) {
  const auto edges = synthesize_edges(num_nodes, num_edges, model, rng_seed);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write graph file " + path.string());
  out << "# sgpipe synthetic graph: nodes=" << num_nodes << " edges=" << num_edges << " model="
      << (model == GraphModel::uniform ? "uniform" : "powerlaw") << " rng_seed=" << rng_seed << '\n';
  for (const Edge& e : edges) out << e.src << ' ' << e.dst << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace sgp

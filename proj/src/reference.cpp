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

#include "sgp/reference.hpp"

#include <map>
#include <set>

namespace sgp::reference {

std::vector<NodeId> sample_neighbors(std::span<const NodeId> neighbors, std::size_t fanout, Rng& stream) {
  if (neighbors.size() <= fanout) return {neighbors.begin(), neighbors.end()};
  std::set<std::size_t> chosen;
  for (std::size_t j = neighbors.size() - fanout; j < neighbors.size(); ++j) {
    const std::size_t t = stream.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<NodeId> out;
  for (std::size_t idx : chosen) out.push_back(neighbors[idx]);
  return out;
}

Subgraph generate_subgraph(const Graph& g, NodeId seed, const FanoutConfig& cfg, const SamplePlan& plan,
                           const FeatureProvider& features) {
  cfg.validate();
  std::map<NodeId, std::uint32_t> hop_of{{seed, 0}};
  std::set<Edge> edges;
  std::set<NodeId> level{seed};
  for (std::uint32_t hop = 1; hop <= cfg.hops(); ++hop) {
    std::set<NodeId> next;
    for (NodeId v : level) {
      Rng stream(plan.stream_seed(seed, hop, v));
      for (NodeId u : reference::sample_neighbors(g.neighbors(v), cfg.fanouts[hop - 1], stream)) {
        edges.insert({v, u});
        if (hop_of.emplace(u, hop).second) next.insert(u);
      }
    }
    level = std::move(next);
  }

  std::set<SubgraphNode> ordered;
  for (const auto& [id, hop] : hop_of) ordered.insert({id, hop});

  Subgraph sub;
  sub.seed = seed;
  sub.nodes.assign(ordered.begin(), ordered.end());
  sub.edges.assign(edges.begin(), edges.end());
  sub.features = MatrixF(sub.nodes.size(), features.dim());
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) features.fill(sub.nodes[i].id, sub.features.row(i));
  sub.label = features.label(seed);
  return sub;
}

std::vector<Subgraph> generate_all(const Graph& g, const BalanceTable& table, const FanoutConfig& cfg,
                                   const SamplePlan& plan, const FeatureProvider& features) {
  std::vector<Subgraph> out;
  out.reserve(table.assigned().size());
  for (NodeId seed : table.assigned()) out.push_back(reference::generate_subgraph(g, seed, cfg, plan, features));
  return out;
}

}  // namespace sgp::reference

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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgp/channel.hpp"
#include "sgp/graph.hpp"
#include "sgp/matrix.hpp"
#include "sgp/rng.hpp"
#include "sgp/scheduler.hpp"

namespace sgp {

struct FanoutConfig {
  std::vector<std::size_t> fanouts{40, 20};

  std::size_t hops() const noexcept { return fanouts.size(); }
  void validate() const;
};

FanoutConfig parse_fanouts(const std::string& csv);

// Every random choice in generation is drawn from a stream keyed by
// (base seed, seed node, hop, frontier node), so results do not depend on
// which worker expands a seed or in what order.
struct SamplePlan {
  std::uint64_t base_rng_seed = 0;

  std::uint64_t stream_seed(NodeId seed, std::uint32_t hop, NodeId frontier) const noexcept {
    return hash_words({base_rng_seed, seed, hop, frontier});
  }
};

enum class FeatureMode {
  hashed,  // label = hash(node) mod classes
  linear,  // label = argmax of a fixed linear projection of the node's features
};

// Synthesizes node features in [-1, 1] and labels from hashes of the node id.
class FeatureProvider {
 public:
  FeatureProvider(std::size_t dim = 16, std::size_t num_classes = 4, std::uint64_t seed = 0,
                  FeatureMode mode = FeatureMode::hashed);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  FeatureMode mode() const noexcept { return mode_; }

  void fill(NodeId v, std::span<float> out) const;
  std::uint32_t label(NodeId v) const;

 private:
  std::size_t dim_;
  std::size_t num_classes_;
  std::uint64_t seed_;
  FeatureMode mode_;
  std::vector<float> projection_;  // num_classes x dim, linear mode only
};

struct SubgraphNode {
  NodeId id = 0;
  std::uint32_t hop = 0;

  friend constexpr bool operator==(const SubgraphNode&, const SubgraphNode&) = default;
  friend constexpr auto operator<=>(const SubgraphNode& a, const SubgraphNode& b) {
    if (a.hop != b.hop) return a.hop <=> b.hop;
    return a.id <=> b.id;
  }
};

// Canonical form: nodes sorted by (hop, id) so the seed is row 0; edges
// sorted by (src, dst); features row i belongs to nodes[i].
struct Subgraph {
  NodeId seed = 0;
  std::vector<SubgraphNode> nodes;
  std::vector<Edge> edges;
  MatrixF features;
  std::uint32_t label = 0;

  std::optional<std::size_t> local_index(NodeId v) const;

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

// Adjacency lookups used by the sampler. Nodes with degree >= threshold are
// served from neighbor lists assembled by tree reduction; everything else
// reads the global CSR directly.
class NeighborSource {
 public:
  explicit NeighborSource(const Graph& g, std::size_t hot_threshold = 10'000);

  const Graph& graph() const noexcept { return *g_; }
  std::size_t hot_threshold() const noexcept { return hot_threshold_; }
  bool is_hot(NodeId v) const { return g_->degree(v) >= hot_threshold_; }
  std::vector<NodeId> hot_nodes() const;

  void install_hot(NodeId v, std::vector<NodeId> neighbors);
  std::size_t installed_hot() const noexcept { return hot_.size(); }

  // Throws if v is hot but its gathered list was never installed.
  std::span<const NodeId> neighbors(NodeId v) const;

 private:
  const Graph* g_;
  std::size_t hot_threshold_;
  std::unordered_map<NodeId, std::vector<NodeId>> hot_;
};

// Take-all when |neighbors| <= fanout, otherwise a uniform fanout-subset
// without replacement by Floyd's algorithm. Output sorted ascending.
std::vector<NodeId> sample_neighbors(std::span<const NodeId> neighbors, std::size_t fanout, Rng& stream);
std::vector<NodeId> sample_neighbors(const Graph& g, NodeId v, std::size_t fanout, Rng& stream);

// Test hook: replaces the first sampled hop-1 neighbor of `seed` with the next
// node id, producing a subgraph that the reference sampler will not match.
struct FaultInjection {
  NodeId seed = 0;
};

// Reusable per-worker scratch for breadth-first expansion.
class SubgraphBuilder {
 public:
  SubgraphBuilder(const NeighborSource& source, const FanoutConfig& cfg, const SamplePlan& plan,
                  const FeatureProvider& features);

  Subgraph build(NodeId seed, const FaultInjection* fault = nullptr);

 private:
  const NeighborSource* source_;
  FanoutConfig cfg_;
  SamplePlan plan_;
  const FeatureProvider* features_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

Subgraph generate_subgraph(const Graph& g, NodeId seed, const FanoutConfig& cfg, const SamplePlan& plan,
                           const FeatureProvider& features = FeatureProvider());

struct SubgraphItem {
  std::uint64_t seq = 0;  // position within the worker's assignment list
  WorkerIndex worker = 0;
  Subgraph subgraph;
};

// Emits one subgraph per seed assigned to `worker`, in assignment order.
// Throws QueueClosed if the sink is closed before all items are delivered.
std::size_t generate_for_worker(const NeighborSource& source, const BalanceTable& table, std::size_t worker,
                                const FanoutConfig& cfg, const SamplePlan& plan, const FeatureProvider& features,
                                BoundedQueue<SubgraphItem>& sink, const FaultInjection* fault = nullptr);

// OpenMP kernel over every assigned seed. Result is indexed like table.assigned().
std::vector<Subgraph> generate_all(const NeighborSource& source, const BalanceTable& table, const FanoutConfig& cfg,
                                   const SamplePlan& plan, const FeatureProvider& features);

// Line-delimited JSON, one record per subgraph, records sorted by seed:
//   {"seed":S,"label":L,"nodes":[[id,hop],...],"edges":[[src,dst],...]}
// ids are the graph's original ids.
std::string format_subgraph_record(const Subgraph& sub, const Graph& g);
void write_subgraph_dump(const std::filesystem::path& path, std::vector<const Subgraph*> subs, const Graph& g);

// Structural checks shared by tests and verify: seed at hop 0, endpoint closure,
// hop bound, parent edge for every hop>=1 node, fanout bound, no duplicates.
std::optional<std::string> check_subgraph(const Subgraph& sub, const FanoutConfig& cfg);

}  // namespace sgp

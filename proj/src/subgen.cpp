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

#include "sgp/subgen.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace sgp {

void FanoutConfig::validate() const {
  if (fanouts.empty()) throw std::invalid_argument("fanout list must name at least one hop");
  for (std::size_t f : fanouts)
    if (f == 0) throw std::invalid_argument("every fanout must be >= 1");
}

FanoutConfig parse_fanouts(const std::string& csv) {
  FanoutConfig cfg;
  cfg.fanouts.clear();
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad fanout '" + item + "'");
    }
    if (used != item.size() || v <= 0) throw std::invalid_argument("bad fanout '" + item + "'");
    cfg.fanouts.push_back(static_cast<std::size_t>(v));
  }
  cfg.validate();
  return cfg;
}

namespace {

float unit_to_signed(std::uint64_t h) {
  return static_cast<float>(static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0);
}

}  // namespace

FeatureProvider::FeatureProvider(std::size_t dim, std::size_t num_classes, std::uint64_t seed, FeatureMode mode)
    : dim_(dim), num_classes_(num_classes), seed_(seed), mode_(mode) {
  if (dim == 0) throw std::invalid_argument("feature dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (mode == FeatureMode::linear) {
    projection_.resize(num_classes * dim);
    for (std::size_t c = 0; c < num_classes; ++c)
      for (std::size_t j = 0; j < dim; ++j)
        projection_[c * dim + j] = unit_to_signed(hash_words({seed_, 0x9201ec7ULL, c, j}));
  }
}

void FeatureProvider::fill(NodeId v, std::span<float> out) const {
  for (std::size_t j = 0; j < dim_; ++j) out[j] = unit_to_signed(hash_words({seed_, 0xfea7ULL, v, j}));
}

std::uint32_t FeatureProvider::label(NodeId v) const {
  if (mode_ == FeatureMode::hashed)
    return static_cast<std::uint32_t>(hash_words({seed_, 0x1abe1ULL, v}) % num_classes_);
  std::vector<float> x(dim_);
  fill(v, x);
  std::uint32_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < num_classes_; ++c) {
    double score = 0;
    for (std::size_t j = 0; j < dim_; ++j) score += static_cast<double>(projection_[c * dim_ + j]) * x[j];
    if (score > best_score) {
      best_score = score;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

std::optional<std::size_t> Subgraph::local_index(NodeId v) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == v) return i;
  return std::nullopt;
}

NeighborSource::NeighborSource(const Graph& g, std::size_t hot_threshold) : g_(&g), hot_threshold_(hot_threshold) {
  if (hot_threshold == 0) throw std::invalid_argument("hot threshold must be >= 1");
}

std::vector<NodeId> NeighborSource::hot_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < g_->num_nodes(); ++v)
    if (g_->degree(v) >= hot_threshold_) out.push_back(v);
  return out;
}

void NeighborSource::install_hot(NodeId v, std::vector<NodeId> neighbors) {
  if (!is_hot(v)) throw std::invalid_argument("node " + std::to_string(v) + " is below the hot threshold");
  hot_[v] = std::move(neighbors);
}

std::span<const NodeId> NeighborSource::neighbors(NodeId v) const {
  if (!is_hot(v)) return g_->neighbors(v);
  auto it = hot_.find(v);
  if (it == hot_.end()) throw Error("hot node " + std::to_string(v) + " has no gathered neighbor list");
  return it->second;
}

std::vector<NodeId> sample_neighbors(std::span<const NodeId> neighbors, std::size_t fanout, Rng& stream) {
  const std::size_t n = neighbors.size();
  if (n <= fanout) return {neighbors.begin(), neighbors.end()};

  // Floyd: for j in [n-k, n), draw t in [0, j]; take t unless already taken, then take j.
  std::vector<std::size_t> picked;
  picked.reserve(fanout);
  std::unordered_set<std::size_t> big;
  const bool use_set = fanout > 64;
  for (std::size_t j = n - fanout; j < n; ++j) {
    const std::size_t t = stream.below(j + 1);
    bool taken;
    if (use_set) {
      taken = big.contains(t);
    } else {
      taken = std::find(picked.begin(), picked.end(), t) != picked.end();
    }
    const std::size_t choice = taken ? j : t;
    picked.push_back(choice);
    if (use_set) big.insert(choice);
  }
  std::sort(picked.begin(), picked.end());
  std::vector<NodeId> out(fanout);
  for (std::size_t i = 0; i < fanout; ++i) out[i] = neighbors[picked[i]];
  return out;
}

std::vector<NodeId> sample_neighbors(const Graph& g, NodeId v, std::size_t fanout, Rng& stream) {
  return sample_neighbors(g.neighbors(v), fanout, stream);
}

SubgraphBuilder::SubgraphBuilder(const NeighborSource& source, const FanoutConfig& cfg, const SamplePlan& plan,
                                 const FeatureProvider& features)
    : source_(&source), cfg_(cfg), plan_(plan), features_(&features), stamp_(source.graph().num_nodes(), 0) {
  cfg_.validate();
}

Subgraph SubgraphBuilder::build(NodeId seed, const FaultInjection* fault) {
  const Graph& g = source_->graph();
  if (seed >= g.num_nodes()) throw std::out_of_range("seed " + std::to_string(seed) + " out of range");
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }

  Subgraph sub;
  sub.seed = seed;
  sub.nodes.push_back({seed, 0});
  stamp_[seed] = epoch_;

  std::vector<NodeId> frontier{seed};
  std::vector<NodeId> next;
  for (std::uint32_t hop = 1; hop <= cfg_.hops(); ++hop) {
    next.clear();
    const std::size_t fanout = cfg_.fanouts[hop - 1];
    for (NodeId v : frontier) {
      Rng stream(plan_.stream_seed(seed, hop, v));
      auto sampled = sample_neighbors(source_->neighbors(v), fanout, stream);
      if (fault && fault->seed == seed && hop == 1 && !sampled.empty())
        sampled.front() = static_cast<NodeId>((sampled.front() + 1) % g.num_nodes());
      for (NodeId u : sampled) {
        sub.edges.push_back({v, u});
        if (stamp_[u] != epoch_) {
          stamp_[u] = epoch_;
          sub.nodes.push_back({u, hop});
          next.push_back(u);
        }
      }
    }
    frontier.swap(next);
  }

  std::sort(sub.nodes.begin(), sub.nodes.end());
  std::sort(sub.edges.begin(), sub.edges.end());
  sub.features = MatrixF(sub.nodes.size(), features_->dim());
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) features_->fill(sub.nodes[i].id, sub.features.row(i));
  sub.label = features_->label(seed);
  return sub;
}

Subgraph generate_subgraph(const Graph& g, NodeId seed, const FanoutConfig& cfg, const SamplePlan& plan,
                           const FeatureProvider& features) {
  NeighborSource source(g, std::numeric_limits<std::size_t>::max());
  SubgraphBuilder builder(source, cfg, plan, features);
  return builder.build(seed);
}

std::size_t generate_for_worker(const NeighborSource& source, const BalanceTable& table, std::size_t worker,
                                const FanoutConfig& cfg, const SamplePlan& plan, const FeatureProvider& features,
                                BoundedQueue<SubgraphItem>& sink, const FaultInjection* fault) {
  const auto seeds = seeds_for_worker(table, worker);
  SubgraphBuilder builder(source, cfg, plan, features);
  std::size_t emitted = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    SubgraphItem item{i, static_cast<WorkerIndex>(worker), builder.build(seeds[i], fault)};
    if (!sink.push(std::move(item)))
      throw QueueClosed("worker " + std::to_string(worker) + ": subgraph sink closed after " +
                        std::to_string(emitted) + " of " + std::to_string(seeds.size()) + " subgraphs");
    ++emitted;
  }
  return emitted;
}

std::vector<Subgraph> generate_all(const NeighborSource& source, const BalanceTable& table, const FanoutConfig& cfg,
                                   const SamplePlan& plan, const FeatureProvider& features) {
  const auto seeds = table.assigned();
  std::vector<Subgraph> out(seeds.size());
  const auto n = static_cast<std::int64_t>(seeds.size());
#pragma omp parallel
  {
    SubgraphBuilder builder(source, cfg, plan, features);
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) out[i] = builder.build(seeds[i]);
  }
  return out;
}

std::string format_subgraph_record(const Subgraph& sub, const Graph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : sub.nodes) nodes.push_back({g.original_id(n.id), n.hop});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : sub.edges) edges.push_back({g.original_id(e.src), g.original_id(e.dst)});
  nlohmann::json rec;
  rec["seed"] = g.original_id(sub.seed);
  rec["label"] = sub.label;
  rec["nodes"] = std::move(nodes);
  rec["edges"] = std::move(edges);
  return rec.dump();
}

void write_subgraph_dump(const std::filesystem::path& path, std::vector<const Subgraph*> subs, const Graph& g) {
  std::sort(subs.begin(), subs.end(), [&](const Subgraph* a, const Subgraph* b) {
    return g.original_id(a->seed) < g.original_id(b->seed);
  });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write subgraph dump " + path.string());
  for (const Subgraph* s : subs) out << format_subgraph_record(*s, g) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

std::optional<std::string> check_subgraph(const Subgraph& sub, const FanoutConfig& cfg) {
  if (sub.nodes.empty() || sub.nodes.front().id != sub.seed || sub.nodes.front().hop != 0)
    return "seed is not the hop-0 first node";
  std::unordered_map<NodeId, std::uint32_t> hop_of;
  for (const auto& n : sub.nodes) {
    if (!hop_of.emplace(n.id, n.hop).second) return "duplicate node " + std::to_string(n.id);
    if (n.hop > cfg.hops()) return "node " + std::to_string(n.id) + " beyond hop bound";
    if (n.hop == 0 && n.id != sub.seed) return "non-seed node at hop 0";
  }
  if (!std::is_sorted(sub.nodes.begin(), sub.nodes.end())) return "nodes not in canonical order";
  if (!std::is_sorted(sub.edges.begin(), sub.edges.end())) return "edges not in canonical order";
  std::unordered_map<NodeId, std::size_t> out_count;
  std::unordered_set<NodeId> has_parent;
  for (const auto& e : sub.edges) {
    auto s = hop_of.find(e.src);
    auto d = hop_of.find(e.dst);
    if (s == hop_of.end() || d == hop_of.end()) return "edge endpoint missing from node list";
    if (s->second >= cfg.hops()) return "edge leaves a node at the final hop";
    if (++out_count[e.src] > cfg.fanouts[s->second]) return "fanout exceeded at node " + std::to_string(e.src);
    if (d->second == s->second + 1) has_parent.insert(e.dst);
  }
  for (const auto& n : sub.nodes)
    if (n.hop > 0 && !has_parent.contains(n.id)) return "node " + std::to_string(n.id) + " has no parent edge";
  if (sub.features.rows() != sub.nodes.size()) return "feature rows do not match nodes";
  return std::nullopt;
}

}  // namespace sgp

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

#include "sgp/verify.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "sgp/reference.hpp"

namespace sgp {

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::summary() const {
  std::ostringstream out;
  for (const auto& c : checks) out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  return out.str();
}

std::optional<std::string> diff_subgraphs(const Subgraph& expected, const Subgraph& actual, const Graph& g) {
  std::ostringstream out;
  out << "seed " << g.original_id(expected.seed) << ": ";
  if (expected.seed != actual.seed) return out.str() + "seed mismatch";
  for (std::size_t i = 0; i < std::max(expected.nodes.size(), actual.nodes.size()); ++i) {
    if (i >= expected.nodes.size() || i >= actual.nodes.size() || expected.nodes[i] != actual.nodes[i]) {
      out << "node list differs at position " << i << " (expected " << expected.nodes.size() << " nodes, got "
          << actual.nodes.size() << ")";
      return out.str();
    }
  }
  for (std::size_t i = 0; i < std::max(expected.edges.size(), actual.edges.size()); ++i) {
    if (i >= expected.edges.size() || i >= actual.edges.size() || expected.edges[i] != actual.edges[i]) {
      out << "edge list differs at position " << i;
      if (i < expected.edges.size())
        out << " (expected " << g.original_id(expected.edges[i].src) << "->" << g.original_id(expected.edges[i].dst);
      if (i < actual.edges.size())
        out << ", got " << g.original_id(actual.edges[i].src) << "->" << g.original_id(actual.edges[i].dst);
      out << ")";
      return out.str();
    }
  }
  if (expected.features != actual.features) return out.str() + "features differ";
  if (expected.label != actual.label) return out.str() + "label differs";
  return std::nullopt;
}

VerifyCheck verify_generation(const Graph& g, const SeedSet& seeds, const VerifyConfig& cfg) {
  VerifyCheck check{"generation-vs-reference", false, ""};
  const BalanceTable table = build_balance_table(seeds, cfg.num_workers);
  const FeatureProvider features(cfg.cluster.train.feature_dim, cfg.cluster.train.num_classes,
                                 cfg.cluster.plan.base_rng_seed, cfg.cluster.feature_mode);
  const auto expected = reference::generate_all(g, table, cfg.cluster.fanouts, cfg.cluster.plan, features);

  ClusterConfig cc = cfg.cluster;
  cc.train_model = false;
  cc.keep_subgraphs = true;
  auto cluster = spawn_cluster(cfg.num_workers, g, table, cc);
  RunReport run = cluster->run(PipelineMode::pipelined);

  std::map<NodeId, const Subgraph*> actual;
  std::size_t total = 0;
  for (const auto& per_worker : run.subgraphs)
    for (const auto& s : per_worker) {
      actual.emplace(s.seed, &s);
      ++total;
    }
  if (total != expected.size()) {
    check.detail = "generated " + std::to_string(total) + " subgraphs, expected " + std::to_string(expected.size());
    return check;
  }
  for (const auto& e : expected) {
    auto it = actual.find(e.seed);
    if (it == actual.end()) {
      check.detail = "seed " + std::to_string(g.original_id(e.seed)) + ": missing from distributed output";
      return check;
    }
    if (auto d = diff_subgraphs(e, *it->second, g)) {
      check.detail = *d;
      return check;
    }
  }
  if (!run.exactly_once) {
    check.detail = "consumption audit failed: " + run.audit_detail;
    return check;
  }
  check.passed = true;
  check.detail = std::to_string(total) + " subgraphs identical across " + std::to_string(cfg.num_workers) +
                 " workers (" + std::to_string(run.metrics.hot_nodes) + " hot nodes via tree reduction)";
  return check;
}

VerifyCheck verify_reduction(const Graph& g, const VerifyConfig& cfg) {
  VerifyCheck check{"tree-vs-flat-reduction", false, ""};
  const std::size_t n = cfg.num_workers;
  const ReductionTree tree(n, cfg.cluster.tree_arity);
  const auto parts = partition_edges(g, n, PartitionStrategy::block);

  NeighborSource source(g, cfg.cluster.hot.degree_threshold);
  std::size_t hot_checked = 0;
  for (NodeId v : source.hot_nodes()) {
    const auto out = gather_hot_neighbors(parts, v, cfg.cluster.hot, tree);
    const auto nb = g.neighbors(v);
    if (!std::equal(out.result.neighbors.begin(), out.result.neighbors.end(), nb.begin(), nb.end())) {
      check.detail = "hot node " + std::to_string(g.original_id(v)) + ": gathered list differs from CSR";
      return check;
    }
    if (out.messages != n - 1) {
      check.detail = "message count " + std::to_string(out.messages) + " != workers - 1";
      return check;
    }
    ++hot_checked;
  }

  Rng rng(hash_words({cfg.cluster.plan.base_rng_seed, 0x7265647563ULL}));
  for (std::size_t set = 0; set < cfg.random_shard_sets; ++set) {
    std::vector<NeighborShard> shards;
    std::vector<NodeId> flat;
    for (std::size_t w = 0; w < n; ++w) {
      std::vector<NodeId> nb(rng.below(20));
      for (auto& x : nb) x = static_cast<NodeId>(rng.below(100));
      flat.insert(flat.end(), nb.begin(), nb.end());
      shards.push_back(make_shard(0, std::move(nb)));
    }
    std::sort(flat.begin(), flat.end());
    flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
    const auto out = tree_reduce(tree, shards);
    if (out.result.neighbors != flat || out.messages != n - 1) {
      check.detail = "random shard set " + std::to_string(set) + " disagrees with the flat union";
      return check;
    }
  }
  check.passed = true;
  check.detail = std::to_string(hot_checked) + " hot nodes and " + std::to_string(cfg.random_shard_sets) +
                 " random shard sets match the flat union";
  return check;
}

VerifyCheck verify_data_parallel(const Graph& g, const SeedSet& seeds, const VerifyConfig& cfg) {
  VerifyCheck check{"data-parallel-training", false, ""};
  const std::size_t n = cfg.num_workers;
  const BalanceTable table = build_balance_table(seeds, n);
  if (table.per_worker() == 0) {
    check.detail = "fewer seeds than workers; nothing to train";
    return check;
  }

  ClusterConfig cc = cfg.cluster;
  cc.train_model = true;
  cc.regen_per_epoch = false;
  cc.record_weight_trace = true;
  cc.train.loss_threshold = 0;
  cc.train.max_epochs = cfg.train_epochs;
  auto cluster = spawn_cluster(n, g, table, cc);
  const RunReport run = cluster->run(PipelineMode::staged);

  // Single context: step t averages the batch {assigned[t*W + w] : w < W}.
  const FeatureProvider features(cc.train.feature_dim, cc.train.num_classes, cc.plan.base_rng_seed, cc.feature_mode);
  const auto subs = reference::generate_all(g, table, cc.fanouts, cc.plan, features);
  std::vector<TrainSample> samples;
  for (const auto& s : subs) samples.push_back(make_sample(s));
  GcnModel model = init_model(cc.train.dims(), cc.model_seed);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cc.train.max_epochs; ++epoch) {
    for (std::size_t t = 0; t < table.per_worker(); ++t, ++step) {
      std::vector<const TrainSample*> batch;
      for (std::size_t w = 0; w < n; ++w) batch.push_back(&samples[t * n + w]);
      train_step_batch(model, batch, cc.train.learning_rate);
      std::vector<float> flat;
      for (const auto& w : model.weights) flat.insert(flat.end(), w.data().begin(), w.data().end());
      if (step >= run.weight_trace.size() || run.weight_trace[step] != flat) {
        check.detail = "weight trajectory diverges from single-context batched SGD at step " + std::to_string(step);
        return check;
      }
    }
  }
  if (run.max_replica_divergence != 0) {
    check.detail = "replicas diverged by " + std::to_string(run.max_replica_divergence);
    return check;
  }
  for (std::size_t w = 0; w < n; ++w) {
    if (!(run.replicas[w] == model)) {
      check.detail = "worker " + std::to_string(w) + " final weights differ from the single-context trajectory";
      return check;
    }
  }
  check.passed = true;
  check.detail = std::to_string(step) + " steps on " + std::to_string(n) +
                 " workers match single-context batched SGD bit for bit";
  return check;
}

VerifyReport run_verify(const Graph& g, const SeedSet& seeds, const VerifyConfig& cfg) {
  VerifyReport report;
  report.checks.push_back(verify_generation(g, seeds, cfg));
  report.checks.push_back(verify_reduction(g, cfg));
  report.checks.push_back(verify_data_parallel(g, seeds, cfg));
  return report;
}

}  // namespace sgp

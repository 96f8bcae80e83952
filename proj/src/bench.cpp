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

#include "sgp/bench.hpp"

#include <algorithm>
#include <sstream>

namespace sgp {

std::vector<ScalingRow> bench_generation(const Graph& g, const SeedSet& seeds, std::vector<std::size_t> workers,
                                         const std::vector<std::size_t>& arities, const ClusterConfig& base,
                                         std::size_t repeats) {
  if (workers.empty() || arities.empty()) throw std::invalid_argument("bench needs worker counts and arities");
  if (std::find(workers.begin(), workers.end(), 1) == workers.end()) workers.insert(workers.begin(), 1);
  std::sort(workers.begin(), workers.end());
  workers.erase(std::unique(workers.begin(), workers.end()), workers.end());

  std::vector<ScalingRow> rows;
  for (std::size_t arity : arities) {
    double baseline = 0;
    double previous = 0;
    for (std::size_t w : workers) {
      const BalanceTable table = build_balance_table(seeds, w);
      ClusterConfig cc = base;
      cc.train_model = false;
      cc.keep_subgraphs = false;
      cc.tree_arity = arity;
      ScalingRow row;
      row.workers = w;
      row.arity = arity;
      // Best of `repeats` to damp scheduler noise.
      for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
        auto cluster = spawn_cluster(w, g, table, cc);
        const RunReport run = cluster->run(PipelineMode::pipelined);
        const auto& m = run.metrics;
        if (r == 0 || m.generate_seconds < row.wall_seconds) {
          row.subgraphs = m.subgraphs_generated;
          row.sampled_nodes = m.sampled_nodes;
          row.wall_seconds = m.generate_seconds;
          row.subgraphs_per_second = m.subgraphs_per_second;
          row.sampled_nodes_per_second = m.sampled_nodes_per_second;
        }
      }
      if (w == 1) baseline = row.sampled_nodes_per_second;
      row.speedup = baseline > 0 ? row.sampled_nodes_per_second / baseline : 0.0;
      row.regression = previous > 0 && row.sampled_nodes_per_second < previous;
      previous = row.sampled_nodes_per_second;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ReductionRow> bench_reduction(const std::vector<std::size_t>& workers,
                                          const std::vector<std::size_t>& arities, std::size_t hot_nodes,
                                          std::size_t shard_size, std::uint64_t rng_seed) {
  std::vector<ReductionRow> rows;
  for (std::size_t arity : arities)
    for (std::size_t w : workers) {
      const ReductionTree tree(w, arity);
      auto shard_of = [&](WorkerIndex worker, std::size_t slot) {
        Rng rng(hash_words({rng_seed, worker, slot}));
        std::vector<NodeId> nb(shard_size);
        for (auto& x : nb) x = static_cast<NodeId>(rng.below(shard_size * 8 + 1));
        return make_shard(static_cast<NodeId>(slot), std::move(nb));
      };
      const auto out = threaded_tree_reduce(tree, hot_nodes, shard_of);
      ReductionRow row;
      row.workers = w;
      row.arity = arity;
      row.messages = hot_nodes ? out.messages / hot_nodes : 0;
      row.critical_path = out.critical_path;
      row.wall_time_us = out.wall_seconds * 1e6;
      rows.push_back(row);
    }
  return rows;
}

std::string format_scaling_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream out;
  out << "workers,arity,subgraphs,sampled_nodes,wall_time_us,subgraphs_per_sec,sampled_nodes_per_sec,speedup,"
         "regression\n";
  for (const auto& r : rows)
    out << r.workers << ',' << r.arity << ',' << r.subgraphs << ',' << r.sampled_nodes << ','
        << static_cast<long long>(r.wall_seconds * 1e6) << ',' << r.subgraphs_per_second << ','
        << r.sampled_nodes_per_second << ',' << r.speedup << ',' << (r.regression ? 1 : 0) << '\n';
  return out.str();
}

std::string format_reduction_csv(const std::vector<ReductionRow>& rows) {
  std::ostringstream out;
  out << "workers,arity,messages,critical_path,wall_time_us\n";
  for (const auto& r : rows)
    out << r.workers << ',' << r.arity << ',' << r.messages << ',' << r.critical_path << ','
        << static_cast<long long>(r.wall_time_us) << '\n';
  return out.str();
}

}  // namespace sgp

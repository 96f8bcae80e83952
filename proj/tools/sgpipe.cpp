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

// sgpipe: distributed subgraph generation and in-memory GCN training on an
// in-process simulated cluster.
//
// Exit codes: 0 success, 1 verification mismatch, 2 usage error, 3 runtime fault.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgp/bench.hpp"
#include "sgp/runtime.hpp"
#include "sgp/synth.hpp"
#include "sgp/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFault = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  // gen-graph
  std::size_t nodes = 5000;
  std::size_t edges = 50000;
  std::string model = "powerlaw";
  std::string out = "graph.txt";

  // shared
  std::string graph;
  bool directed = false;
  std::string seeds;
  double seed_fraction = 0.1;
  std::uint64_t rng_seed = 42;
  std::size_t workers = 4;
  std::string fanouts = "40,20";
  std::size_t hot_threshold = 10'000;
  std::size_t tree_arity = 2;
  std::string partition = "src_hash";
  std::string metrics;
  long timeout_ms = 30'000;

  // train
  std::size_t epochs = 5;
  double lr = 0.01;
  std::size_t hidden = 32;
  std::size_t classes = 4;
  std::size_t feature_dim = 16;
  double loss_threshold = 0.0;
  std::string mode = "pipelined";
  std::size_t queue_capacity = 64;
  bool regen_per_epoch = false;
  std::string allreduce = "tree";
  std::string train_log;
  std::string features = "hashed";

  // generate
  std::string dump;

  // verify
  std::optional<std::uint64_t> inject_fault;

  // bench
  std::string bench_workers = "1,2,4,8";
  std::string arities = "2";
  std::string csv;
  std::string reduction_csv;
  std::size_t repeats = 1;
};

std::vector<std::size_t> parse_list(const std::string& csv, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string(what) + " list is empty");
  return out;
}

sgp::ClusterConfig cluster_config(const Options& o) {
  sgp::ClusterConfig cc;
  try {
    cc.fanouts = sgp::parse_fanouts(o.fanouts);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cc.plan.base_rng_seed = o.rng_seed;
  cc.model_seed = o.rng_seed;
  cc.train.max_epochs = o.epochs;
  cc.train.learning_rate = o.lr;
  cc.train.hidden = o.hidden;
  cc.train.num_classes = o.classes;
  cc.train.feature_dim = o.feature_dim;
  cc.train.loss_threshold = o.loss_threshold;
  cc.pipeline.queue_capacity = o.queue_capacity;
  cc.hot.degree_threshold = o.hot_threshold;
  cc.tree_arity = o.tree_arity;
  cc.partition = o.partition == "block" ? sgp::PartitionStrategy::block : sgp::PartitionStrategy::src_hash;
  cc.topology = o.allreduce == "ring" ? sgp::AllReduceTopology::ring : sgp::AllReduceTopology::tree;
  cc.feature_mode = o.features == "linear" ? sgp::FeatureMode::linear : sgp::FeatureMode::hashed;
  cc.regen_per_epoch = o.regen_per_epoch;
  cc.timeout = std::chrono::milliseconds(o.timeout_ms);
  try {
    cc.pipeline.mode = sgp::parse_pipeline_mode(o.mode);
    cc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cc;
}

sgp::Graph load_graph(const Options& o) {
  return sgp::load_edge_list(o.graph, o.directed ? sgp::Directedness::directed : sgp::Directedness::undirected);
}

sgp::SeedSet load_seeds(const Options& o, const sgp::Graph& g) {
  if (!o.seeds.empty()) return sgp::read_seed_file(o.seeds, g, o.rng_seed);
  return sgp::sample_seeds(g, o.seed_fraction, o.rng_seed);
}

void write_metrics(const Options& o, const sgp::MetricsReport& m) {
  if (o.metrics.empty()) return;
  std::ofstream out(o.metrics, std::ios::trunc);
  if (!out) throw sgp::Error("cannot write metrics file " + o.metrics);
  out << m.to_json().dump(2) << '\n';
}

void print_summary(const sgp::MetricsReport& m) {
  std::cout << "workers=" << m.num_workers << " subgraphs=" << m.subgraphs_generated
            << " sampled_nodes=" << m.sampled_nodes << " discarded_seeds=" << m.discarded_seeds
            << " hot_nodes=" << m.hot_nodes << "\n"
            << "generate_s=" << m.generate_seconds << " subgraphs/s=" << m.subgraphs_per_second
            << " nodes/s=" << m.sampled_nodes_per_second << "\n";
}

int cmd_gen_graph(const Options& o) {
  if (o.edges + 1 < o.nodes)
    std::cerr << "warning: edges < nodes - 1; the graph will be disconnected and isolated nodes dropped on load\n";
  sgp::GraphModel model;
  try {
    model = sgp::parse_graph_model(o.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  sgp::write_synthetic_graph(o.out, o.nodes, o.edges, model, o.rng_seed);
  std::cout << "wrote " << o.edges << " edges over " << o.nodes << " nodes to " << o.out << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o) {
  auto cc = cluster_config(o);
  const auto g = load_graph(o);
  const auto seeds = load_seeds(o, g);
  const auto table = sgp::build_balance_table(seeds, o.workers);
  cc.train_model = false;
  cc.keep_subgraphs = !o.dump.empty();
  auto cluster = sgp::spawn_cluster(o.workers, g, table, cc);
  const auto run = sgp::run_pipelined(*cluster, cc.pipeline.mode);
  if (!o.dump.empty()) {
    std::vector<const sgp::Subgraph*> all;
    for (const auto& per_worker : run.subgraphs)
      for (const auto& s : per_worker) all.push_back(&s);
    sgp::write_subgraph_dump(o.dump, all, g);
  }
  print_summary(run.metrics);
  write_metrics(o, run.metrics);
  return kExitOk;
}

int cmd_train(const Options& o) {
  const auto cc = cluster_config(o);
  const auto g = load_graph(o);
  const auto seeds = load_seeds(o, g);
  const auto table = sgp::build_balance_table(seeds, o.workers);
  auto cluster = sgp::spawn_cluster(o.workers, g, table, cc);
  const auto run = sgp::run_pipelined(*cluster, cc.pipeline.mode);
  if (!o.train_log.empty()) {
    std::ofstream log(o.train_log, std::ios::trunc);
    if (!log) throw sgp::Error("cannot write training log " + o.train_log);
    log << "epoch,step,worker,loss\n";
    log.precision(17);
    for (const auto& s : run.steps) log << s.epoch << ',' << s.step << ',' << s.worker << ',' << s.loss << '\n';
  }
  print_summary(run.metrics);
  for (std::size_t e = 0; e < run.epoch_losses.size(); ++e)
    std::cout << "epoch " << e + 1 << " mean_loss=" << run.epoch_losses[e] << "\n";
  std::cout << "replica_divergence=" << run.max_replica_divergence
            << " exactly_once=" << (run.exactly_once ? "yes" : "no") << "\n";
  write_metrics(o, run.metrics);
  return run.exactly_once && run.max_replica_divergence == 0 ? kExitOk : kExitFault;
}

int cmd_verify(const Options& o) {
  sgp::VerifyConfig vc;
  vc.cluster = cluster_config(o);
  vc.num_workers = o.workers;
  vc.train_epochs = o.epochs;
  const auto g = load_graph(o);
  const auto seeds = load_seeds(o, g);
  if (o.inject_fault) {
    std::optional<sgp::NodeId> dense;
    for (sgp::NodeId v = 0; v < g.num_nodes(); ++v)
      if (g.original_id(v) == *o.inject_fault) dense = v;
    if (!dense) throw UsageError("--inject-fault seed is not a graph node");
    const auto sv = seeds.seeds();
    if (std::find(sv.begin(), sv.end(), *dense) == sv.end()) throw UsageError("--inject-fault node is not in the seed set");
    vc.cluster.fault = sgp::FaultInjection{*dense};
  }
  const auto report = sgp::run_verify(g, seeds, vc);
  std::cout << report.summary();
  return report.passed() ? kExitOk : kExitMismatch;
}

int cmd_bench(const Options& o) {
  const auto cc = cluster_config(o);
  const auto g = load_graph(o);
  const auto seeds = load_seeds(o, g);
  const auto workers = parse_list(o.bench_workers, "--bench-workers");
  const auto arities = parse_list(o.arities, "--arities");
  for (std::size_t a : arities)
    if (a < 2) throw UsageError("--arities entries must be >= 2");
  const auto rows = sgp::bench_generation(g, seeds, workers, arities, cc, o.repeats);
  const std::string scaling = sgp::format_scaling_csv(rows);
  std::cout << scaling;
  for (const auto& r : rows)
    if (r.regression)
      std::cerr << "regression: workers=" << r.workers << " arity=" << r.arity << " throughput fell below the "
                << "previous worker count\n";
  if (!o.csv.empty()) {
    std::ofstream out(o.csv, std::ios::trunc);
    out << scaling;
  }
  const auto red = sgp::bench_reduction(workers, arities, 64, 256, o.rng_seed);
  const std::string red_csv = sgp::format_reduction_csv(red);
  if (!o.reduction_csv.empty()) {
    std::ofstream out(o.reduction_csv, std::ios::trunc);
    out << red_csv;
  } else {
    std::cout << red_csv;
  }
  return kExitOk;
}

void add_graph_opts(CLI::App* cmd, Options& o) {
  cmd->add_option("--graph", o.graph, "Edge-list file (src dst per line, # comments)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_flag("--directed", o.directed, "Treat edges as directed instead of undirected")->default_str("false");
  cmd->add_option("--seeds", o.seeds, "Seed file, one node id per line; none samples --seed-fraction of nodes")
      ->check(CLI::ExistingFile)
      ->default_str("none");
  cmd->add_option("--seed-fraction", o.seed_fraction, "Fraction of nodes sampled as seeds without --seeds")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--rng-seed", o.rng_seed, "Seed for every random choice (shuffle, sampling, init)");
  cmd->add_option("--workers", o.workers, "Number of simulated workers")->check(CLI::Range(1, 1024));
  cmd->add_option("--fanouts", o.fanouts, "Per-hop neighbor caps; hop count = list length");
  cmd->add_option("--hot-threshold", o.hot_threshold, "Degree at which nodes use tree reduction")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tree-arity", o.tree_arity, "Branching factor of the reduction tree")->check(CLI::Range(2, 64));
  cmd->add_option("--partition", o.partition, "Edge partitioning strategy")
      ->check(CLI::IsMember({"src_hash", "block"}));
  cmd->add_option("--metrics", o.metrics, "Write the metrics report (JSON) to this path")
      ->default_str("none");
  cmd->add_option("--timeout-ms", o.timeout_ms, "Per-message deadline between workers")->check(CLI::PositiveNumber);
  cmd->add_option("--features", o.features, "Synthetic feature/label mode")->check(CLI::IsMember({"hashed", "linear"}));
  cmd->add_option("--feature-dim", o.feature_dim, "Node feature dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--classes", o.classes, "Number of label classes")->check(CLI::Range(2, 1 << 20));
}

void add_train_opts(CLI::App* cmd, Options& o) {
  cmd->add_option("--epochs", o.epochs, "Maximum training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--hidden", o.hidden, "Hidden layer width")->check(CLI::PositiveNumber);
  cmd->add_option("--loss-threshold", o.loss_threshold, "Stop once mean epoch loss drops below (0 = off)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--mode", o.mode, "Run generation and training concurrently or in stages")
      ->check(CLI::IsMember({"pipelined", "staged"}));
  cmd->add_option("--queue-capacity", o.queue_capacity, "Bounded subgraph queue size per worker")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--regen-per-epoch", o.regen_per_epoch, "Regenerate subgraphs every epoch instead of replaying")->default_str("false");
  cmd->add_option("--allreduce", o.allreduce, "AllReduce topology")->check(CLI::IsMember({"ring", "tree"}));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"sgpipe: load-balanced distributed subgraph generation with concurrent in-memory GCN training"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  auto* gen_graph = app.add_subcommand("gen-graph", "Write a deterministic synthetic edge list");
  gen_graph->option_defaults()->always_capture_default();
  gen_graph->add_option("--nodes", o.nodes, "Node count")->check(CLI::Range(2, 1 << 30));
  gen_graph->add_option("--edges", o.edges, "Distinct undirected edge count")->check(CLI::PositiveNumber);
  gen_graph->add_option("--model", o.model, "Degree model")->check(CLI::IsMember({"uniform", "powerlaw"}));
  gen_graph->add_option("--rng-seed", o.rng_seed, "Generator seed");
  gen_graph->add_option("--out", o.out, "Output path");

  auto* generate = app.add_subcommand("generate", "Generate subgraphs on the simulated cluster");
  generate->option_defaults()->always_capture_default();
  add_graph_opts(generate, o);
  generate->add_option("--mode", o.mode, "pipelined or staged")->check(CLI::IsMember({"pipelined", "staged"}));
  generate->add_option("--queue-capacity", o.queue_capacity, "Bounded subgraph queue size per worker")
      ->check(CLI::PositiveNumber);
  generate->add_option("--dump", o.dump, "Write canonical subgraph records (JSON lines) to this path")
      ->default_str("none");

  auto* train = app.add_subcommand("train", "Generate and train concurrently with AllReduce");
  train->option_defaults()->always_capture_default();
  add_graph_opts(train, o);
  add_train_opts(train, o);
  train->add_option("--train-log", o.train_log, "Write epoch,step,worker,loss CSV to this path")
      ->default_str("none");

  auto* verify = app.add_subcommand("verify", "Run the oracle-equivalence checks");
  verify->option_defaults()->always_capture_default();
  add_graph_opts(verify, o);
  add_train_opts(verify, o);
  verify->add_option("--inject-fault", o.inject_fault, "Test hook: corrupt this seed's subgraph")
      ->default_str("none");

  auto* bench = app.add_subcommand("bench", "Measure generation scaling and reduction cost");
  bench->option_defaults()->always_capture_default();
  add_graph_opts(bench, o);
  bench->add_option("--bench-workers", o.bench_workers, "Worker counts to sweep");
  bench->add_option("--arities", o.arities, "Tree arities to sweep");
  bench->add_option("--csv", o.csv, "Write the scaling CSV to this path")
      ->default_str("none");
  bench->add_option("--reduction-csv", o.reduction_csv, "Write the reduction CSV to this path")
      ->default_str("none");
  bench->add_option("--repeats", o.repeats, "Runs per row (best is kept)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_graph) return cmd_gen_graph(o);
    if (*generate) return cmd_generate(o);
    if (*train) return cmd_train(o);
    if (*verify) return cmd_verify(o);
    if (*bench) return cmd_bench(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFault;
  }
  return kExitUsage;
}

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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgp/channel.hpp"
#include "sgp/graph.hpp"
#include "sgp/learn.hpp"
#include "sgp/message.hpp"
#include "sgp/reduction.hpp"
#include "sgp/scheduler.hpp"
#include "sgp/subgen.hpp"

namespace sgp {

using Inbox = Mailbox<Message>;

// Thrown inside a worker context when the coordinator broadcasts Shutdown.
class Aborted : public Error {
 public:
  using Error::Error;
};

// Live worker threads across all clusters in the process.
std::size_t live_worker_contexts() noexcept;

// One worker's view of gradient AllReduce over the cluster's inboxes.
class ChannelSync final : public GradientSync {
 public:
  ChannelSync(std::vector<Inbox>& inboxes, AllReduceTopology topology, std::size_t tree_arity,
              std::chrono::milliseconds timeout, std::atomic<std::size_t>* message_counter = nullptr);

  std::size_t num_workers() const override { return inboxes_->size(); }
  GradientSet allreduce_mean(WorkerIndex worker, GradientSet local) override;
  double allreduce_ratio(WorkerIndex worker, double value, double count) override;

 private:
  // Per-worker call counters; workers advance in lockstep so counters tag rounds.
  std::uint64_t next_tag(WorkerIndex worker);
  Message await(WorkerIndex self, WorkerIndex from, std::uint64_t tag);
  void post(WorkerIndex to, Message msg);

  std::vector<Inbox>* inboxes_;
  AllReduceTopology topology_;
  ReductionTree tree_;
  std::chrono::milliseconds timeout_;
  std::atomic<std::size_t>* messages_;
  std::vector<std::uint64_t> tags_;
};

struct HotReduceResult {
  std::vector<NeighborShard> lists;  // one per requested hot node, same order
  std::size_t messages = 0;
  std::size_t critical_path = 0;
  double wall_seconds = 0;
};

// Runs one worker thread per tree position. For every hot node, each worker
// merges its children's shards with its own and forwards the result to its
// parent; the root answers the requesting worker (node mod W) with a
// ReduceResult. `shard_of(worker, slot)` supplies each worker's contribution.
HotReduceResult threaded_tree_reduce(const ReductionTree& tree, std::size_t num_nodes,
                                     const std::function<NeighborShard(WorkerIndex, std::size_t)>& shard_of,
                                     std::chrono::milliseconds timeout = std::chrono::seconds(30),
                                     std::optional<WorkerIndex> silent_worker = std::nullopt);

enum class PipelineMode { pipelined, staged };

struct PipelineConfig {
  std::size_t queue_capacity = 64;
  PipelineMode mode = PipelineMode::pipelined;
  void validate() const;
};

struct ClusterConfig {
  FanoutConfig fanouts;
  SamplePlan plan;
  TrainConfig train;
  PipelineConfig pipeline;
  HotNodePolicy hot;
  std::size_t tree_arity = 2;
  PartitionStrategy partition = PartitionStrategy::src_hash;
  AllReduceTopology topology = AllReduceTopology::tree;
  FeatureMode feature_mode = FeatureMode::hashed;
  std::uint64_t model_seed = 0;
  bool regen_per_epoch = false;
  bool train_model = true;       // false: generation only
  bool keep_subgraphs = false;   // retain generated subgraphs in the report
  bool record_weight_trace = false;
  std::chrono::milliseconds timeout{30'000};

  // Test hooks.
  std::optional<FaultInjection> fault;
  std::chrono::microseconds generator_delay{0};
  std::chrono::microseconds trainer_delay{0};

  void validate() const;
};

struct QueueStats {
  std::vector<std::size_t> occupancy;  // summed over workers
  std::size_t producer_stalls = 0;
  std::size_t consumer_stalls = 0;
};

struct WorkerMetrics {
  WorkerIndex worker = 0;
  std::size_t seeds = 0;
  std::size_t subgraphs_generated = 0;
  std::size_t subgraphs_trained = 0;  // summed over epochs
  std::size_t sampled_nodes = 0;
  std::size_t partition_edges = 0;
  double generator_busy_seconds = 0;
  double trainer_busy_seconds = 0;
  double generator_busy_fraction = 0;
  double trainer_busy_fraction = 0;
};

struct MetricsReport {
  std::size_t num_workers = 0;
  std::size_t subgraphs_generated = 0;
  std::size_t subgraphs_trained = 0;
  std::size_t sampled_nodes = 0;
  std::size_t sampled_edges = 0;
  std::size_t discarded_seeds = 0;
  double subgraphs_per_second = 0;
  double sampled_nodes_per_second = 0;
  std::vector<WorkerMetrics> workers;
  QueueStats queues;
  std::size_t hot_nodes = 0;
  std::size_t reduction_messages = 0;
  std::size_t reduction_critical_path = 0;
  std::size_t allreduce_messages = 0;
  double partition_balance_ratio = 1.0;
  std::size_t partition_cut_edges = 0;
  double reduce_seconds = 0;
  double generate_seconds = 0;
  double train_seconds = 0;
  double total_seconds = 0;

  nlohmann::json to_json() const;
};

struct RunReport {
  std::vector<GcnModel> replicas;                 // final model per worker
  std::vector<double> epoch_losses;               // global mean per epoch
  std::vector<StepRecord> steps;                  // every training step on every worker
  std::vector<std::vector<Subgraph>> subgraphs;   // per worker, when keep_subgraphs
  bool exactly_once = true;
  std::string audit_detail;
  // max |w_a - w_b| across workers, worst over all recorded steps.
  double max_replica_divergence = 0;
  std::size_t weight_trace_steps = 0;
  std::vector<std::vector<float>> weight_trace;  // worker 0, flattened, one per step
  MetricsReport metrics;
};

class Cluster {
 public:
  Cluster(const Graph& g, const BalanceTable& table, ClusterConfig cfg);
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  std::size_t num_workers() const noexcept { return table_->num_workers(); }
  const ClusterConfig& config() const noexcept { return cfg_; }
  const BalanceTable& table() const noexcept { return *table_; }
  const Graph& graph() const noexcept { return *g_; }
  const std::vector<EdgePartition>& partitions() const noexcept { return partitions_; }
  const std::vector<std::vector<NodeId>>& worker_seeds() const noexcept { return seeds_; }
  const std::vector<GcnModel>& replicas() const noexcept { return replicas_; }
  bool finished() const noexcept { return finished_; }

  RunReport run(PipelineMode mode);

  const MetricsReport& metrics() const noexcept { return metrics_; }

 private:
  void reduce_hot_nodes(NeighborSource& source);

  const Graph* g_;
  const BalanceTable* table_;
  ClusterConfig cfg_;
  std::vector<EdgePartition> partitions_;
  PartitionStats partition_stats_;
  std::vector<std::vector<NodeId>> seeds_;
  std::vector<GcnModel> replicas_;
  MetricsReport metrics_;
  bool finished_ = false;
};

constexpr std::size_t kMaxWorkers = 1024;

std::unique_ptr<Cluster> spawn_cluster(std::size_t num_workers, const Graph& g, const BalanceTable& table,
                                       ClusterConfig cfg);
RunReport run_pipelined(Cluster& cluster, PipelineMode mode);
MetricsReport collect_metrics(const Cluster& cluster);

std::string to_string(PipelineMode mode);
PipelineMode parse_pipeline_mode(const std::string& s);

}  // namespace sgp

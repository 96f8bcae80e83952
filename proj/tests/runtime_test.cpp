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

#include <algorithm>
#include <numeric>
#include <thread>

#include <gtest/gtest.h>

#include "learn_util.hpp"
#include "sgp/reference.hpp"
#include "sgp/runtime.hpp"
#include "sgp/verify.hpp"
#include "test_util.hpp"

namespace sgp {
namespace {

using namespace std::chrono_literals;

class RuntimeTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    graph_ = new Graph(testing::random_graph(1500, 6000, 21, GraphModel::powerlaw));
    seeds_ = new SeedSet(sample_seeds(*graph_, 0.05, 21));
  }
  static void TearDownTestSuite() {
    delete graph_;
    delete seeds_;
  }

  static ClusterConfig small_config() {
    ClusterConfig cc;
    cc.fanouts = FanoutConfig{{6, 3}};
    cc.plan.base_rng_seed = 5;
    cc.model_seed = 5;
    cc.train.max_epochs = 3;
    cc.train.learning_rate = 0.05;
    cc.hot.degree_threshold = 40;
    cc.timeout = 10s;
    return cc;
  }

  static RunReport run(std::size_t workers, ClusterConfig cc, PipelineMode mode = PipelineMode::pipelined) {
    const auto table = build_balance_table(*seeds_, workers);
    auto cluster = spawn_cluster(workers, *graph_, table, std::move(cc));
    return run_pipelined(*cluster, mode);
  }

  static Graph* graph_;
  static SeedSet* seeds_;
};
Graph* RuntimeTest::graph_ = nullptr;
SeedSet* RuntimeTest::seeds_ = nullptr;

TEST(BoundedQueue, CapacityZeroRejected) { EXPECT_THROW(BoundedQueue<int>(0), std::invalid_argument); }

TEST(BoundedQueue, CloseDrainsThenEnds) {
  BoundedQueue<int> q(3);
  EXPECT_TRUE(q.push(1));
  EXPECT_TRUE(q.push(2));
  q.close();
  EXPECT_FALSE(q.push(3));
  EXPECT_EQ(q.pop(), 1);
  EXPECT_EQ(q.pop(), 2);
  EXPECT_EQ(q.pop(), std::nullopt);
  EXPECT_EQ(q.occupancy(), (std::vector<std::size_t>{0, 1, 1, 0}));
}

TEST(BoundedQueue, BackpressureWithCapacityOne) {
  BoundedQueue<int> q(1);
  std::thread producer([&] {
    for (int i = 0; i < 1000; ++i) ASSERT_TRUE(q.push(i));
    q.close();
  });
  int expect = 0;
  while (auto v = q.pop()) EXPECT_EQ(*v, expect++);
  producer.join();
  EXPECT_EQ(expect, 1000);
}

TEST(Mailbox, SelectiveReceiveAndTimeout) {
  Mailbox<int> box;
  box.send(1);
  box.send(2);
  box.send(3);
  EXPECT_EQ(box.receive([](int v) { return v == 2; }, 0ms), 2);
  EXPECT_EQ(box.pending(), 2u);
  EXPECT_EQ(box.receive([](int v) { return v == 9; }, 20ms), std::nullopt);
  std::thread late([&] {
    std::this_thread::sleep_for(20ms);
    box.send(9);
  });
  EXPECT_EQ(box.receive([](int v) { return v == 9; }, 5s), 9);
  late.join();
  EXPECT_EQ(box.receive([](int) { return true; }, 0ms), 1);
}

TEST(Message, PayloadMatchesKind) {
  EXPECT_TRUE((Message{MessageKind::shutdown, 0, 0, std::monostate{}}.valid()));
  EXPECT_TRUE((Message{MessageKind::subgraph_ready, 1, 0, SubgraphReady{2, 3}}.valid()));
  EXPECT_FALSE((Message{MessageKind::grad_chunk, 1, 0, SubgraphReady{2, 3}}.valid()));
}

TEST(ChannelSync, ThreadedAllReduceMatchesSequentialMean) {
  Rng rng(3);
  const std::size_t n = 6;
  std::vector<GradientSet> grads(n);
  for (auto& g : grads) {
    g.grads = {MatrixF(4, 3), MatrixF(3, 2)};
    for (auto& m : g.grads)
      for (float& v : m.data()) v = static_cast<float>(rng.unit() - 0.5);
  }
  const auto want = mean_gradients(grads);
  for (auto topo : {AllReduceTopology::ring, AllReduceTopology::tree}) {
    std::vector<Inbox> inboxes(n);
    std::atomic<std::size_t> msgs{0};
    ChannelSync sync(inboxes, topo, 2, 5s, &msgs);
    std::vector<GradientSet> got(n);
    std::vector<double> ratio(n);
    std::vector<std::thread> ts;
    for (std::size_t w = 0; w < n; ++w)
      ts.emplace_back([&, w] {
        for (int round = 0; round < 3; ++round) got[w] = sync.allreduce_mean(static_cast<WorkerIndex>(w), grads[w]);
        ratio[w] = sync.allreduce_ratio(static_cast<WorkerIndex>(w), static_cast<double>(w), 2.0);
      });
    for (auto& t : ts) t.join();
    for (std::size_t w = 0; w < n; ++w) {
      EXPECT_EQ(got[w], want);
      EXPECT_DOUBLE_EQ(ratio[w], 15.0 / 12.0);
    }
    for (const auto& box : inboxes) EXPECT_EQ(box.pending(), 0u);
    EXPECT_GT(msgs.load(), 0u);
  }
}

TEST(ChannelSync, MissingWorkerTimesOut) {
  std::vector<Inbox> inboxes(3);
  ChannelSync sync(inboxes, AllReduceTopology::tree, 2, 50ms);
  GradientSet g;
  g.grads = {MatrixF(1, 1)};
  // Only worker 0 shows up; it waits for child 1.
  try {
    sync.allreduce_mean(0, g);
    FAIL();
  } catch (const TimeoutError& e) {
    EXPECT_EQ(e.worker(), 1u);
  }
}

TEST(ThreadedTreeReduce, MatchesFlatUnionAndCounts) {
  Rng rng(8);
  for (std::size_t n : {1, 2, 5, 8, 13}) {
    for (std::size_t a : {2, 3}) {
      const ReductionTree tree(n, a);
      std::vector<std::vector<NeighborShard>> shards(4);
      for (std::size_t slot = 0; slot < 4; ++slot)
        for (std::size_t w = 0; w < n; ++w) {
          std::vector<NodeId> nb;
          for (int k = 0; k < 5; ++k) nb.push_back(static_cast<NodeId>(rng.below(50)));
          shards[slot].push_back(make_shard(static_cast<NodeId>(100 + slot), nb));
        }
      const auto r = threaded_tree_reduce(tree, 4, [&](WorkerIndex w, std::size_t s) { return shards[s][w]; }, 5s);
      ASSERT_EQ(r.lists.size(), 4u);
      for (std::size_t slot = 0; slot < 4; ++slot)
        EXPECT_EQ(r.lists[slot], tree_reduce(tree, shards[slot]).result);
      EXPECT_EQ(r.messages, 4 * (n - 1));
      EXPECT_EQ(r.critical_path, tree.height());
    }
  }
}

TEST(ThreadedTreeReduce, SilentWorkerIsNamed) {
  const ReductionTree tree(7, 2);
  for (WorkerIndex silent : {1u, 4u, 6u}) {
    try {
      threaded_tree_reduce(tree, 2, [](WorkerIndex w, std::size_t) { return make_shard(0, {w}); }, 60ms, silent);
      FAIL() << "expected timeout";
    } catch (const TimeoutError& e) {
      EXPECT_EQ(e.worker(), silent);
    }
  }
  EXPECT_EQ(live_worker_contexts(), 0u);
}

TEST_F(RuntimeTest, DegenerateSingleWorker) {
  const auto r = run(1, small_config());
  EXPECT_TRUE(r.exactly_once) << r.audit_detail;
  EXPECT_EQ(r.replicas.size(), 1u);
  EXPECT_EQ(r.metrics.subgraphs_generated, seeds_->size());
  EXPECT_EQ(r.metrics.reduction_messages, 0u);
}

TEST_F(RuntimeTest, EightWorkersGetEqualSeeds) {
  const auto table = build_balance_table(*seeds_, 8);
  const auto cluster = spawn_cluster(8, *graph_, table, small_config());
  for (const auto& s : cluster->worker_seeds()) EXPECT_EQ(s.size(), seeds_->size() / 8);
  EXPECT_EQ(cluster->partitions().size(), 8u);
  for (const auto& m : cluster->replicas()) EXPECT_TRUE(m == cluster->replicas()[0]);
}

TEST_F(RuntimeTest, SpawnErrors) {
  const auto table = build_balance_table(*seeds_, 4);
  EXPECT_THROW(spawn_cluster(3, *graph_, table, small_config()), std::invalid_argument);
  auto bad = small_config();
  bad.pipeline.queue_capacity = 0;
  EXPECT_THROW(spawn_cluster(4, *graph_, table, bad), std::invalid_argument);
  bad = small_config();
  bad.train.max_epochs = 0;
  EXPECT_THROW(spawn_cluster(4, *graph_, table, bad), std::invalid_argument);
  const auto huge = build_balance_table(sample_seeds(*graph_, 1.0, 1), kMaxWorkers + 1);
  EXPECT_THROW(spawn_cluster(kMaxWorkers + 1, *graph_, huge, small_config()), std::invalid_argument);
  EXPECT_EQ(live_worker_contexts(), 0u);
}

TEST_F(RuntimeTest, ClusterRunsOnce) {
  const auto table = build_balance_table(*seeds_, 2);
  auto cluster = spawn_cluster(2, *graph_, table, small_config());
  cluster->run(PipelineMode::pipelined);
  EXPECT_TRUE(cluster->finished());
  EXPECT_THROW(cluster->run(PipelineMode::pipelined), Error);
}

TEST_F(RuntimeTest, ModesAndCapacitiesAgree) {
  for (bool regen : {false, true}) {
    auto cc = small_config();
    cc.regen_per_epoch = regen;
    const auto staged = run(4, cc, PipelineMode::staged);
    ASSERT_TRUE(staged.exactly_once) << staged.audit_detail;
    for (std::size_t cap : {1, 2, 64}) {
      cc.pipeline.queue_capacity = cap;
      const auto piped = run(4, cc, PipelineMode::pipelined);
      EXPECT_TRUE(piped.exactly_once) << piped.audit_detail;
      EXPECT_EQ(piped.replicas, staged.replicas) << "capacity " << cap << " regen " << regen;
      EXPECT_EQ(piped.epoch_losses, staged.epoch_losses);
      EXPECT_EQ(piped.max_replica_divergence, 0.0);
    }
  }
  EXPECT_EQ(live_worker_contexts(), 0u);
}

TEST_F(RuntimeTest, SlowGeneratorStallsTrainerButLosesNothing) {
  auto cc = small_config();
  cc.train.max_epochs = 1;
  cc.generator_delay = 500us;
  cc.pipeline.queue_capacity = 2;
  const auto r = run(2, cc);
  EXPECT_TRUE(r.exactly_once) << r.audit_detail;
  EXPECT_GT(r.metrics.queues.consumer_stalls, 0u);
  EXPECT_EQ(r.metrics.subgraphs_trained, r.metrics.subgraphs_generated);
}

TEST_F(RuntimeTest, SlowTrainerFillsQueue) {
  auto cc = small_config();
  cc.train.max_epochs = 1;
  cc.trainer_delay = 300us;
  cc.pipeline.queue_capacity = 2;
  const auto r = run(2, cc);
  EXPECT_TRUE(r.exactly_once);
  EXPECT_GT(r.metrics.queues.producer_stalls, 0u);
}

TEST_F(RuntimeTest, RandomizedDelaysNeverDeadlock) {
  Rng rng(99);
  RunReport first;
  for (int trial = 0; trial < 6; ++trial) {
    auto cc = small_config();
    cc.train.max_epochs = 2;
    cc.regen_per_epoch = rng.below(2) == 1;
    cc.pipeline.queue_capacity = 1 + rng.below(4);
    cc.generator_delay = std::chrono::microseconds(rng.below(300));
    cc.trainer_delay = std::chrono::microseconds(rng.below(300));
    cc.topology = rng.below(2) ? AllReduceTopology::ring : AllReduceTopology::tree;
    const auto r = run(3, cc);
    ASSERT_TRUE(r.exactly_once) << r.audit_detail;
    if (trial == 0) first = r;
    else EXPECT_EQ(r.replicas, first.replicas);
  }
}

TEST_F(RuntimeTest, TrainerFaultAbortsWithDiagnostics) {
  auto cc = small_config();
  cc.train.learning_rate = 1e36;
  try {
    run(3, cc);
    FAIL() << "expected abort";
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("run aborted"), std::string::npos) << what;
    EXPECT_NE(what.find("trainer"), std::string::npos) << what;
  }
  EXPECT_EQ(live_worker_contexts(), 0u);
}

TEST_F(RuntimeTest, LossThresholdStopsEveryWorkerTogether) {
  auto cc = small_config();
  cc.train.max_epochs = 10;
  cc.train.loss_threshold = 5.0;  // above ln 4, stops after epoch 1
  cc.regen_per_epoch = true;
  const auto r = run(3, cc);
  EXPECT_EQ(r.epoch_losses.size(), 1u);
  EXPECT_EQ(r.max_replica_divergence, 0.0);
}

TEST_F(RuntimeTest, HotNodesReducedThroughTree) {
  auto cc = small_config();
  cc.train_model = false;
  cc.keep_subgraphs = true;
  const auto table = build_balance_table(*seeds_, 4);
  auto cluster = spawn_cluster(4, *graph_, table, cc);
  const auto r = cluster->run(PipelineMode::pipelined);
  ASSERT_GT(r.metrics.hot_nodes, 0u);
  EXPECT_EQ(r.metrics.reduction_messages, r.metrics.hot_nodes * 3);
  EXPECT_EQ(r.metrics.reduction_critical_path, 2u);
  const FeatureProvider fp(cc.train.feature_dim, cc.train.num_classes, cc.plan.base_rng_seed, cc.feature_mode);
  std::size_t compared = 0;
  for (const auto& per_worker : r.subgraphs)
    for (const auto& s : per_worker) {
      ASSERT_EQ(s, reference::generate_subgraph(*graph_, s.seed, cc.fanouts, cc.plan, fp));
      ++compared;
    }
  EXPECT_EQ(compared, table.assigned().size());
}

TEST_F(RuntimeTest, MetricsAreAdditiveAndSerialized) {
  auto cc = small_config();
  cc.train.max_epochs = 2;
  const auto table = build_balance_table(*seeds_, 4);
  auto cluster = spawn_cluster(4, *graph_, table, cc);
  const auto r = cluster->run(PipelineMode::pipelined);
  const auto m = collect_metrics(*cluster);
  std::size_t nodes = 0, gen = 0, trained = 0;
  for (const auto& w : m.workers) {
    nodes += w.sampled_nodes;
    gen += w.subgraphs_generated;
    trained += w.subgraphs_trained;
    EXPECT_GE(w.generator_busy_fraction, 0.0);
  }
  EXPECT_EQ(nodes, m.sampled_nodes);
  EXPECT_EQ(gen, m.subgraphs_generated);
  EXPECT_EQ(trained, m.subgraphs_trained);
  EXPECT_EQ(m.subgraphs_trained, 2 * m.subgraphs_generated);
  EXPECT_EQ(m.discarded_seeds, seeds_->size() % 4);
  std::size_t pushes = 0;
  for (auto c : m.queues.occupancy) pushes += c;
  EXPECT_EQ(pushes, m.subgraphs_generated);
  const auto j = m.to_json();
  EXPECT_EQ(j.at("schema"), "sgpipe.metrics/1");
  for (const char* key : {"subgraphs_per_second", "sampled_nodes_per_second", "workers", "queues", "reduction",
                          "phase_seconds", "allreduce_messages", "partition", "hot_nodes", "discarded_seeds"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j.at("workers").size(), 4u);
  EXPECT_EQ(r.steps.size(), m.subgraphs_trained);
}

TEST_F(RuntimeTest, ZeroWorkRunHasZeroCounters) {
  // Fewer seeds than workers: everything is discarded.
  const SeedSet few({1, 2}, 1, graph_->num_nodes());
  const auto table = build_balance_table(few, 3);
  auto cluster = spawn_cluster(3, *graph_, table, small_config());
  const auto r = cluster->run(PipelineMode::pipelined);
  EXPECT_TRUE(r.exactly_once);
  EXPECT_EQ(r.metrics.subgraphs_generated, 0u);
  EXPECT_EQ(r.metrics.subgraphs_trained, 0u);
  EXPECT_EQ(r.metrics.sampled_nodes, 0u);
  EXPECT_EQ(r.metrics.subgraphs_per_second, 0.0);
  EXPECT_EQ(r.metrics.discarded_seeds, 2u);
}

TEST_F(RuntimeTest, VerifyPassesAndFaultIsCaught) {
  VerifyConfig vc;
  vc.num_workers = 3;
  vc.cluster = small_config();
  vc.random_shard_sets = 20;
  const auto ok = run_verify(*graph_, *seeds_, vc);
  EXPECT_TRUE(ok.passed()) << ok.summary();
  ASSERT_EQ(ok.checks.size(), 3u);

  const NodeId target = seeds_->seeds()[7];
  vc.cluster.fault = FaultInjection{target};
  const auto bad = verify_generation(*graph_, *seeds_, vc);
  EXPECT_FALSE(bad.passed);
  EXPECT_NE(bad.detail.find("seed " + std::to_string(graph_->original_id(target))), std::string::npos) << bad.detail;
}

TEST_F(RuntimeTest, DataParallelMatchesBatchedSingleContext) {
  VerifyConfig vc;
  vc.num_workers = 4;
  vc.cluster = small_config();
  vc.train_epochs = 2;
  const auto c = verify_data_parallel(*graph_, *seeds_, vc);
  EXPECT_TRUE(c.passed) << c.detail;
}

TEST(PipelineMode, ParseRoundTrip) {
  EXPECT_EQ(parse_pipeline_mode("staged"), PipelineMode::staged);
  EXPECT_EQ(to_string(PipelineMode::pipelined), "pipelined");
  EXPECT_THROW(parse_pipeline_mode("eager"), std::invalid_argument);
}

}  // namespace
}  // namespace sgp

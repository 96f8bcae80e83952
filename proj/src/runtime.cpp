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

#include "sgp/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <limits>
#include <sstream>
#include <thread>
#include <tuple>

namespace sgp {

namespace {

std::atomic<std::size_t> g_live_contexts{0};

struct ContextGuard {
  ContextGuard() { g_live_contexts.fetch_add(1, std::memory_order_relaxed); }
  ~ContextGuard() { g_live_contexts.fetch_sub(1, std::memory_order_relaxed); }
  ContextGuard(const ContextGuard&) = delete;
  ContextGuard& operator=(const ContextGuard&) = delete;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// First-error-wins abort shared by all threads of one run.
class AbortSignal {
 public:
  explicit AbortSignal(std::vector<Inbox>& inboxes) : inboxes_(&inboxes) {}

  void add_queue(BoundedQueue<SubgraphItem>* q) { queues_.push_back(q); }

  void fail(const std::string& what) {
    {
      std::lock_guard lock(mu_);
      errors_.push_back(what);
    }
    trigger();
  }

  void trigger() {
    if (aborted_.exchange(true)) return;
    for (auto& inbox : *inboxes_) inbox.send(Message{MessageKind::shutdown, 0, 0, std::monostate{}});
    for (auto* q : queues_) q->close();
  }

  bool aborted() const noexcept { return aborted_.load(); }

  std::vector<std::string> errors() const {
    std::lock_guard lock(mu_);
    return errors_;
  }

 private:
  std::vector<Inbox>* inboxes_;
  std::vector<BoundedQueue<SubgraphItem>*> queues_;
  std::atomic<bool> aborted_{false};
  mutable std::mutex mu_;
  std::vector<std::string> errors_;
};

template <typename Fn>
void guarded(AbortSignal& abort, const std::string& who, Fn&& fn) {
  ContextGuard guard;
  try {
    fn();
  } catch (const Aborted&) {
  } catch (const QueueClosed& e) {
    if (!abort.aborted()) abort.fail(who + ": " + e.what());
  } catch (const std::exception& e) {
    abort.fail(who + ": " + e.what());
  }
}

std::optional<Message> receive_from(Inbox& inbox, MessageKind kind, WorkerIndex from, std::uint64_t tag,
                                    std::chrono::milliseconds timeout) {
  return inbox.receive(
      [&](const Message& m) {
        return m.kind == MessageKind::shutdown || (m.kind == kind && m.sender == from && m.tag == tag);
      },
      timeout);
}

}  // namespace

std::size_t live_worker_contexts() noexcept { return g_live_contexts.load(); }

// ---------------------------------------------------------------------------
// ChannelSync

ChannelSync::ChannelSync(std::vector<Inbox>& inboxes, AllReduceTopology topology, std::size_t tree_arity,
                         std::chrono::milliseconds timeout, std::atomic<std::size_t>* message_counter)
    : inboxes_(&inboxes),
      topology_(topology),
      tree_(std::max<std::size_t>(inboxes.size(), 1), tree_arity),
      timeout_(timeout),
      messages_(message_counter),
      tags_(inboxes.size(), 0) {
  if (inboxes.empty()) throw std::invalid_argument("ChannelSync needs at least one worker");
}

std::uint64_t ChannelSync::next_tag(WorkerIndex worker) { return ++tags_.at(worker); }

Message ChannelSync::await(WorkerIndex self, WorkerIndex from, std::uint64_t tag) {
  auto m = receive_from((*inboxes_)[self], MessageKind::grad_chunk, from, tag, timeout_);
  if (!m) throw TimeoutError(from, "no allreduce contribution for round " + std::to_string(tag));
  if (m->kind == MessageKind::shutdown) throw Aborted("shutdown during allreduce");
  return std::move(*m);
}

void ChannelSync::post(WorkerIndex to, Message msg) {
  (*inboxes_)[to].send(std::move(msg));
  if (messages_) messages_->fetch_add(1, std::memory_order_relaxed);
}

namespace {

template <typename Part>
void sort_parts(std::vector<std::pair<WorkerIndex, Part>>& parts) {
  std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

GradientSet mean_of_parts(std::vector<std::pair<WorkerIndex, std::shared_ptr<const GradientSet>>> parts) {
  sort_parts(parts);
  std::vector<GradientSet> ordered;
  ordered.reserve(parts.size());
  for (auto& [w, g] : parts) ordered.push_back(*g);
  return mean_gradients(ordered);
}

double ratio_of_parts(std::vector<std::pair<WorkerIndex, std::array<double, 2>>> parts) {
  sort_parts(parts);
  double value = 0, count = 0;
  for (const auto& [w, vc] : parts) {
    value += vc[0];
    count += vc[1];
  }
  return count == 0 ? 0.0 : value / count;
}

}  // namespace

GradientSet ChannelSync::allreduce_mean(WorkerIndex worker, GradientSet local) {
  const std::size_t n = num_workers();
  const std::uint64_t tag = next_tag(worker);
  if (n == 1) return local;
  auto mine = std::make_shared<const GradientSet>(std::move(local));

  if (topology_ == AllReduceTopology::ring) {
    const auto next = static_cast<WorkerIndex>((worker + 1) % n);
    const auto prev = static_cast<WorkerIndex>((worker + n - 1) % n);
    std::vector<std::pair<WorkerIndex, std::shared_ptr<const GradientSet>>> held{{worker, mine}};
    post(next, Message{MessageKind::grad_chunk, worker, tag, GradPayload{{{worker, mine}}, nullptr}});
    for (std::size_t round = 0; round + 1 < n; ++round) {
      Message m = await(worker, prev, tag);
      auto& part = std::get<GradPayload>(m.payload).parts.front();
      held.push_back(part);
      if (round + 2 < n) post(next, Message{MessageKind::grad_chunk, worker, tag, GradPayload{{part}, nullptr}});
    }
    return mean_of_parts(std::move(held));
  }

  GradPayload gathered;
  gathered.parts.emplace_back(worker, mine);
  const auto children = tree_.children(worker);
  for (WorkerIndex c : children) {
    Message m = await(worker, c, tag);
    auto& parts = std::get<GradPayload>(m.payload).parts;
    gathered.parts.insert(gathered.parts.end(), parts.begin(), parts.end());
  }
  std::shared_ptr<const GradientSet> result;
  if (auto parent = tree_.parent(worker)) {
    post(*parent, Message{MessageKind::grad_chunk, worker, tag, std::move(gathered)});
    Message m = await(worker, *parent, tag);
    result = std::get<GradPayload>(m.payload).result;
  } else {
    result = std::make_shared<const GradientSet>(mean_of_parts(std::move(gathered.parts)));
  }
  for (WorkerIndex c : children) post(c, Message{MessageKind::grad_chunk, worker, tag, GradPayload{{}, result}});
  return *result;
}

double ChannelSync::allreduce_ratio(WorkerIndex worker, double value, double count) {
  const std::size_t n = num_workers();
  const std::uint64_t tag = next_tag(worker);
  if (n == 1) return count == 0 ? 0.0 : value / count;
  ScalarPayload gathered;
  gathered.parts.push_back({worker, {value, count}});
  const auto children = tree_.children(worker);
  for (WorkerIndex c : children) {
    Message m = await(worker, c, tag);
    auto& parts = std::get<ScalarPayload>(m.payload).parts;
    gathered.parts.insert(gathered.parts.end(), parts.begin(), parts.end());
  }
  double result = 0;
  if (auto parent = tree_.parent(worker)) {
    post(*parent, Message{MessageKind::grad_chunk, worker, tag, std::move(gathered)});
    Message m = await(worker, *parent, tag);
    result = *std::get<ScalarPayload>(m.payload).result;
  } else {
    result = ratio_of_parts(std::move(gathered.parts));
  }
  for (WorkerIndex c : children)
    post(c, Message{MessageKind::grad_chunk, worker, tag, ScalarPayload{{}, result}});
  return result;
}

// ---------------------------------------------------------------------------
// Threaded tree reduction

HotReduceResult threaded_tree_reduce(const ReductionTree& tree, std::size_t num_nodes,
                                     const std::function<NeighborShard(WorkerIndex, std::size_t)>& shard_of,
                                     std::chrono::milliseconds timeout, std::optional<WorkerIndex> silent_worker) {
  const std::size_t n = tree.num_workers();
  HotReduceResult out;
  out.lists.resize(num_nodes);
  if (num_nodes == 0) return out;

  std::vector<Inbox> inboxes(n);
  AbortSignal abort(inboxes);
  std::atomic<std::size_t> messages{0};
  std::vector<std::size_t> rounds(num_nodes, 0);
  const auto t0 = Clock::now();

  // Waits grow toward the root so the worker adjacent to a silent peer is the
  // one that times out and names it.
  auto wait_for = [&](WorkerIndex w) { return timeout * static_cast<long>(1 + tree.height() - tree.level(w)); };

  auto worker_main = [&](WorkerIndex w) {
    const auto children = tree.children(w);
    const auto parent = tree.parent(w);
    std::vector<std::size_t> requested;
    for (std::size_t slot = 0; slot < num_nodes; ++slot) {
      NeighborShard acc = shard_of(w, slot);
      const auto requester = static_cast<WorkerIndex>(acc.hot_node % n);
      if (requester == w) requested.push_back(slot);
      if (silent_worker && *silent_worker == w) continue;
      std::size_t depth = 0;
      for (WorkerIndex c : children) {
        auto m = receive_from(inboxes[w], MessageKind::shard_contribution, c, slot, wait_for(w));
        if (!m) throw TimeoutError(c, "no shard contribution for hot node " + std::to_string(acc.hot_node));
        if (m->kind == MessageKind::shutdown) throw Aborted("shutdown during reduction");
        auto& payload = std::get<ShardPayload>(m->payload);
        acc = merge_shards(acc, payload.shard);
        depth = std::max(depth, payload.rounds + 1);
      }
      ShardPayload payload{slot, std::move(acc), depth};
      if (parent) {
        inboxes[*parent].send(Message{MessageKind::shard_contribution, w, slot, std::move(payload)});
        messages.fetch_add(1, std::memory_order_relaxed);
      } else {
        rounds[slot] = depth;
        inboxes[requester].send(Message{MessageKind::reduce_result, w, slot, std::move(payload)});
      }
    }
    for (std::size_t slot : requested) {
      auto m = receive_from(inboxes[w], MessageKind::reduce_result, 0, slot, timeout * static_cast<long>(tree.height() + 2));
      if (!m) throw TimeoutError(0, "root never returned hot node slot " + std::to_string(slot));
      if (m->kind == MessageKind::shutdown) throw Aborted("shutdown during reduction");
      out.lists[slot] = std::move(std::get<ShardPayload>(m->payload).shard);
    }
  };

  std::mutex timeout_mu;
  std::optional<TimeoutError> first_timeout;
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::size_t w = 0; w < n; ++w)
    threads.emplace_back([&, w] {
      guarded(abort, "worker " + std::to_string(w), [&] {
        try {
          worker_main(static_cast<WorkerIndex>(w));
        } catch (const TimeoutError& e) {
          std::lock_guard lock(timeout_mu);
          if (!first_timeout) first_timeout = e;
          throw;
        }
      });
    });
  for (auto& t : threads) t.join();
  out.wall_seconds = seconds_since(t0);

  if (first_timeout) throw *first_timeout;
  if (auto errors = abort.errors(); !errors.empty()) throw Error("tree reduction failed: " + errors.front());
  out.messages = messages.load();
  out.critical_path = *std::max_element(rounds.begin(), rounds.end());
  return out;
}

// ---------------------------------------------------------------------------
// Cluster

void PipelineConfig::validate() const {
  if (queue_capacity == 0) throw std::invalid_argument("queue capacity must be >= 1");
}

void ClusterConfig::validate() const {
  fanouts.validate();
  train.validate();
  pipeline.validate();
  hot.validate();
  if (tree_arity < 2) throw std::invalid_argument("tree arity must be >= 2");
  if (timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
}

Cluster::Cluster(const Graph& g, const BalanceTable& table, ClusterConfig cfg)
    : g_(&g), table_(&table), cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t n = table.num_workers();
  if (n == 0 || n > kMaxWorkers)
    throw std::invalid_argument("worker count must be in [1, " + std::to_string(kMaxWorkers) + "]");
  partitions_ = partition_edges(g, n, cfg_.partition);
  partition_stats_ = partition_stats(g, partitions_);
  for (std::size_t w = 0; w < n; ++w) seeds_.push_back(seeds_for_worker(table, w));
  const auto dims = cfg_.train.dims();
  const GcnModel init = init_model(dims, cfg_.model_seed);
  replicas_.assign(n, init);
  metrics_.num_workers = n;
  metrics_.workers.resize(n);
  for (std::size_t w = 0; w < n; ++w) metrics_.workers[w].worker = static_cast<WorkerIndex>(w);
}

std::unique_ptr<Cluster> spawn_cluster(std::size_t num_workers, const Graph& g, const BalanceTable& table,
                                       ClusterConfig cfg) {
  if (num_workers != table.num_workers())
    throw std::invalid_argument("balance table was built for " + std::to_string(table.num_workers()) +
                                " workers, cluster asked for " + std::to_string(num_workers));
  return std::make_unique<Cluster>(g, table, std::move(cfg));
}

void Cluster::reduce_hot_nodes(NeighborSource& source) {
  const auto hot = source.hot_nodes();
  metrics_.hot_nodes = hot.size();
  if (hot.empty()) return;
  const ReductionTree tree(num_workers(), cfg_.tree_arity);
  auto result = threaded_tree_reduce(
      tree, hot.size(), [&](WorkerIndex w, std::size_t slot) { return extract_shard(partitions_[w], hot[slot]); },
      cfg_.timeout);
  for (std::size_t i = 0; i < hot.size(); ++i) source.install_hot(hot[i], std::move(result.lists[i].neighbors));
  metrics_.reduction_messages = result.messages;
  metrics_.reduction_critical_path = result.critical_path;
  metrics_.reduce_seconds = result.wall_seconds;
}

namespace {

struct WorkerRunState {
  std::vector<StepRecord> steps;
  std::vector<std::vector<float>> trace;
  std::vector<EpochStats> epochs;
  std::vector<Subgraph> kept;
  std::vector<std::vector<std::uint64_t>> consumed;  // per epoch
  std::size_t generated = 0;
  std::size_t sampled_nodes = 0;
  std::size_t sampled_edges = 0;
  double gen_busy = 0;
  double train_busy = 0;
  double gen_done_at = 0;
  double train_done_at = 0;
  std::atomic<bool> trainer_stopped{false};
};

std::vector<float> flatten(const GcnModel& m) {
  std::vector<float> out;
  for (const auto& w : m.weights) out.insert(out.end(), w.data().begin(), w.data().end());
  return out;
}

// Pops subgraphs from a queue, converting them to training samples. Time
// spent blocked in pop() is excluded from busy time.
class QueueSource final : public SampleSource {
 public:
  QueueSource(BoundedQueue<SubgraphItem>& q, std::vector<TrainSample>* keep, std::vector<Subgraph>* keep_sub,
              std::chrono::microseconds delay)
      : q_(&q), keep_(keep), keep_sub_(keep_sub), delay_(delay) {}

  const TrainSample* next() override {
    const auto t0 = Clock::now();
    auto item = q_->pop();
    wait_ += seconds_since(t0);
    if (!item) return nullptr;
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    TrainSample s = make_sample(item->subgraph, item->seq);
    if (keep_sub_) keep_sub_->push_back(std::move(item->subgraph));
    if (keep_) {
      keep_->push_back(std::move(s));
      return &keep_->back();
    }
    current_ = std::move(s);
    return &current_;
  }

  double wait_seconds() const noexcept { return wait_; }

 private:
  BoundedQueue<SubgraphItem>* q_;
  std::vector<TrainSample>* keep_;
  std::vector<Subgraph>* keep_sub_;
  std::chrono::microseconds delay_;
  TrainSample current_;
  double wait_ = 0;
};

}  // namespace

RunReport Cluster::run(PipelineMode mode) {
  if (finished_) throw Error("cluster already ran; spawn a new one");
  finished_ = true;
  const std::size_t n = num_workers();
  const auto run_start = Clock::now();

  NeighborSource source(*g_, cfg_.hot.degree_threshold);
  reduce_hot_nodes(source);

  const FeatureProvider features(cfg_.train.feature_dim, cfg_.train.num_classes, cfg_.plan.base_rng_seed,
                                 cfg_.feature_mode);
  const bool train = cfg_.train_model;
  const bool regen = train && cfg_.regen_per_epoch;
  const std::size_t gen_rounds = regen ? cfg_.train.max_epochs : 1;
  const std::size_t capacity =
      mode == PipelineMode::staged ? std::max<std::size_t>(1, table_->per_worker()) : cfg_.pipeline.queue_capacity;

  // queues[w][round]
  std::vector<std::vector<std::unique_ptr<BoundedQueue<SubgraphItem>>>> queues(n);
  std::vector<Inbox> inboxes(n);
  Inbox coordinator;
  AbortSignal abort(inboxes);
  for (auto& per_worker : queues)
    for (std::size_t r = 0; r < gen_rounds; ++r) {
      per_worker.push_back(std::make_unique<BoundedQueue<SubgraphItem>>(capacity));
      abort.add_queue(per_worker.back().get());
    }

  std::atomic<std::size_t> allreduce_messages{0};
  ChannelSync sync(inboxes, cfg_.topology, cfg_.tree_arity, cfg_.timeout, &allreduce_messages);
  std::vector<WorkerRunState> state(n);
  const auto phase_start = Clock::now();

  auto generator = [&](WorkerIndex w) {
    SubgraphBuilder builder(source, cfg_.fanouts, cfg_.plan, features);
    const FaultInjection* fault = cfg_.fault ? &*cfg_.fault : nullptr;
    auto& st = state[w];
    auto report_done = [&] {
      st.gen_done_at = seconds_since(phase_start);
      coordinator.send(Message{MessageKind::subgraph_ready, w, 0, SubgraphReady{st.generated, st.sampled_nodes}});
    };
    for (std::size_t r = 0; r < gen_rounds; ++r) {
      auto& q = *queues[w][r];
      for (std::size_t i = 0; i < seeds_[w].size(); ++i) {
        const auto t0 = Clock::now();
        if (cfg_.generator_delay.count() > 0) std::this_thread::sleep_for(cfg_.generator_delay);
        Subgraph sub = builder.build(seeds_[w][i], fault);
        st.gen_busy += seconds_since(t0);
        const std::size_t nodes = sub.nodes.size();
        const std::size_t edges = sub.edges.size();
        if (!q.push(SubgraphItem{i, w, std::move(sub)})) {
          // Training hit its loss threshold and no longer wants later rounds.
          if (st.trainer_stopped.load()) return report_done();
          throw QueueClosed("subgraph sink closed after " + std::to_string(i) + " of " +
                            std::to_string(seeds_[w].size()) + " subgraphs");
        }
        ++st.generated;
        st.sampled_nodes += nodes;
        st.sampled_edges += edges;
      }
      q.close();
    }
    report_done();
  };

  auto trainer = [&](WorkerIndex w) {
    auto& st = state[w];
    GcnModel& model = replicas_[w];
    TrainContext ctx;
    ctx.worker = w;
    ctx.sync = &sync;
    ctx.on_step = [&](const StepRecord& rec) {
      st.steps.push_back(rec);
      st.consumed.back().push_back(rec.seq);
      if (cfg_.record_weight_trace) st.trace.push_back(flatten(model));
    };
    std::vector<TrainSample> memory;
    for (std::size_t epoch = 1; epoch <= cfg_.train.max_epochs; ++epoch) {
      st.consumed.emplace_back();
      const auto t0 = Clock::now();
      EpochStats stats;
      double waited = 0;
      if (epoch == 1 || regen) {
        auto& q = *queues[w][regen ? epoch - 1 : 0];
        QueueSource src(q, regen ? nullptr : &memory, cfg_.keep_subgraphs && epoch == 1 ? &st.kept : nullptr,
                        cfg_.trainer_delay);
        stats = train_epoch(ctx, model, src, cfg_.train, epoch);
        waited = src.wait_seconds();
      } else {
        VectorSource src(memory);
        stats = train_epoch(ctx, model, src, cfg_.train, epoch);
      }
      st.train_busy += seconds_since(t0) - waited;
      st.epochs.push_back(stats);
      if (cfg_.train.loss_threshold > 0 && stats.global_mean_loss < cfg_.train.loss_threshold) break;
    }
    st.trainer_stopped.store(true);
    for (auto& q : queues[w]) q->close();
    st.train_done_at = seconds_since(phase_start);
  };

  auto collector = [&](WorkerIndex w) {
    auto& st = state[w];
    st.consumed.emplace_back();
    while (auto item = queues[w][0]->pop()) {
      if (cfg_.trainer_delay.count() > 0) std::this_thread::sleep_for(cfg_.trainer_delay);
      st.consumed.back().push_back(item->seq);
      if (cfg_.keep_subgraphs) st.kept.push_back(std::move(item->subgraph));
    }
    st.train_done_at = seconds_since(phase_start);
  };

  auto launch = [&](auto& fn, const char* role, std::vector<std::thread>& into) {
    for (std::size_t w = 0; w < n; ++w)
      into.emplace_back([&, w, role] {
        guarded(abort, std::string(role) + " " + std::to_string(w), [&] { fn(static_cast<WorkerIndex>(w)); });
      });
  };

  std::vector<std::thread> gen_threads, consumer_threads;
  gen_threads.reserve(n);
  consumer_threads.reserve(n);
  launch(generator, "generator", gen_threads);
  if (mode == PipelineMode::staged)
    for (auto& t : gen_threads) t.join();
  const auto consume_start = Clock::now();
  if (train)
    launch(trainer, "trainer", consumer_threads);
  else
    launch(collector, "collector", consumer_threads);
  if (mode == PipelineMode::pipelined)
    for (auto& t : gen_threads) t.join();
  for (auto& t : consumer_threads) t.join();

  if (auto errors = abort.errors(); !errors.empty()) {
    std::ostringstream msg;
    msg << "run aborted:";
    for (const auto& e : errors) msg << "\n  " << e;
    throw Error(msg.str());
  }

  // Coordinator tally from SubgraphReady notifications.
  std::size_t reported = 0;
  while (auto m = coordinator.receive([](const Message&) { return true; }, std::chrono::milliseconds(0)))
    reported += std::get<SubgraphReady>(m->payload).count;

  RunReport report;
  report.replicas = replicas_;

  // Exactly-once audit: each epoch consumes every assigned sequence number once.
  std::ostringstream audit;
  const std::size_t expected = table_->per_worker();
  for (std::size_t w = 0; w < n; ++w) {
    for (std::size_t e = 0; e < state[w].consumed.size(); ++e) {
      auto seqs = state[w].consumed[e];
      std::sort(seqs.begin(), seqs.end());
      bool ok = seqs.size() == expected;
      for (std::size_t i = 0; ok && i < seqs.size(); ++i) ok = seqs[i] == i;
      if (!ok) {
        report.exactly_once = false;
        audit << "worker " << w << " epoch " << e + 1 << " consumed " << seqs.size() << " of " << expected << "; ";
      }
    }
  }
  std::size_t generated_total = 0;
  for (const auto& st : state) generated_total += st.generated;
  if (reported != generated_total) {
    report.exactly_once = false;
    audit << "coordinator saw " << reported << " of " << generated_total << " generated; ";
  }
  report.audit_detail = audit.str();

  if (train && !state.empty()) {
    for (const auto& e : state[0].epochs) report.epoch_losses.push_back(e.global_mean_loss);
    for (const auto& st : state) report.steps.insert(report.steps.end(), st.steps.begin(), st.steps.end());
    std::sort(report.steps.begin(), report.steps.end(), [](const StepRecord& a, const StepRecord& b) {
      return std::tie(a.epoch, a.step, a.worker) < std::tie(b.epoch, b.step, b.worker);
    });
    double worst = 0;
    if (cfg_.record_weight_trace) {
      report.weight_trace_steps = state[0].trace.size();
      report.weight_trace = state[0].trace;
      for (std::size_t w = 1; w < n; ++w) {
        if (state[w].trace.size() != state[0].trace.size()) worst = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < std::min(state[w].trace.size(), state[0].trace.size()); ++s)
          for (std::size_t i = 0; i < state[0].trace[s].size(); ++i)
            worst = std::max(worst, std::fabs(static_cast<double>(state[w].trace[s][i]) - state[0].trace[s][i]));
      }
    }
    const auto final0 = flatten(replicas_[0]);
    for (std::size_t w = 1; w < n; ++w) {
      const auto fw = flatten(replicas_[w]);
      for (std::size_t i = 0; i < fw.size(); ++i)
        worst = std::max(worst, std::fabs(static_cast<double>(fw[i]) - final0[i]));
    }
    report.max_replica_divergence = worst;
  }
  if (cfg_.keep_subgraphs)
    for (auto& st : state) report.subgraphs.push_back(std::move(st.kept));

  // Metrics
  MetricsReport& m = metrics_;
  m.discarded_seeds = table_->discarded().size();
  m.partition_balance_ratio = partition_stats_.balance_ratio;
  m.partition_cut_edges = partition_stats_.cut_edges;
  double gen_done = 0, train_done = 0;
  for (std::size_t w = 0; w < n; ++w) {
    const auto& st = state[w];
    auto& wm = m.workers[w];
    wm.seeds = seeds_[w].size();
    wm.subgraphs_generated = st.generated;
    for (const auto& c : st.consumed) wm.subgraphs_trained += train ? c.size() : 0;
    wm.sampled_nodes = st.sampled_nodes;
    wm.partition_edges = partitions_[w].edges.size();
    wm.generator_busy_seconds = st.gen_busy;
    wm.trainer_busy_seconds = st.train_busy;
    m.subgraphs_generated += st.generated;
    m.subgraphs_trained += wm.subgraphs_trained;
    m.sampled_nodes += st.sampled_nodes;
    m.sampled_edges += st.sampled_edges;
    gen_done = std::max(gen_done, st.gen_done_at);
    train_done = std::max(train_done, st.train_done_at);
  }
  m.generate_seconds = gen_done;
  m.train_seconds = train ? train_done - std::chrono::duration<double>(consume_start - phase_start).count() : 0.0;
  for (auto& wm : m.workers) {
    wm.generator_busy_fraction = gen_done > 0 ? wm.generator_busy_seconds / gen_done : 0.0;
    wm.trainer_busy_fraction = m.train_seconds > 0 ? wm.trainer_busy_seconds / m.train_seconds : 0.0;
  }
  if (gen_done > 0) {
    m.subgraphs_per_second = static_cast<double>(m.subgraphs_generated) / gen_done;
    m.sampled_nodes_per_second = static_cast<double>(m.sampled_nodes) / gen_done;
  }
  m.queues.occupancy.assign(capacity + 1, 0);
  for (const auto& per_worker : queues)
    for (const auto& q : per_worker) {
      const auto occ = q->occupancy();
      for (std::size_t k = 0; k < occ.size(); ++k) m.queues.occupancy[k] += occ[k];
      m.queues.producer_stalls += q->full_waits();
      m.queues.consumer_stalls += q->empty_waits();
    }
  m.allreduce_messages = allreduce_messages.load();
  m.total_seconds = seconds_since(run_start);
  report.metrics = m;
  return report;
}

RunReport run_pipelined(Cluster& cluster, PipelineMode mode) { return cluster.run(mode); }

MetricsReport collect_metrics(const Cluster& cluster) { return cluster.metrics(); }

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "sgpipe.metrics/1";
  j["num_workers"] = num_workers;
  j["subgraphs_generated"] = subgraphs_generated;
  j["subgraphs_trained"] = subgraphs_trained;
  j["sampled_nodes"] = sampled_nodes;
  j["sampled_edges"] = sampled_edges;
  j["discarded_seeds"] = discarded_seeds;
  j["subgraphs_per_second"] = subgraphs_per_second;
  j["sampled_nodes_per_second"] = sampled_nodes_per_second;
  j["hot_nodes"] = hot_nodes;
  j["reduction"] = {{"messages", reduction_messages}, {"critical_path", reduction_critical_path}};
  j["allreduce_messages"] = allreduce_messages;
  j["partition"] = {{"balance_ratio", std::isfinite(partition_balance_ratio) ? partition_balance_ratio : -1.0},
                    {"cut_edges", partition_cut_edges}};
  j["queues"] = {{"occupancy_histogram", queues.occupancy},
                 {"producer_stalls", queues.producer_stalls},
                 {"consumer_stalls", queues.consumer_stalls}};
  j["phase_seconds"] = {{"reduce", reduce_seconds},
                        {"generate", generate_seconds},
                        {"train", train_seconds},
                        {"total", total_seconds}};
  nlohmann::json workers_json = nlohmann::json::array();
  for (const auto& w : workers)
    workers_json.push_back({{"worker", w.worker},
                            {"seeds", w.seeds},
                            {"partition_edges", w.partition_edges},
                            {"subgraphs_generated", w.subgraphs_generated},
                            {"subgraphs_trained", w.subgraphs_trained},
                            {"sampled_nodes", w.sampled_nodes},
                            {"generator_busy_fraction", w.generator_busy_fraction},
                            {"trainer_busy_fraction", w.trainer_busy_fraction}});
  j["workers"] = std::move(workers_json);
  return j;
}

std::string to_string(PipelineMode mode) { return mode == PipelineMode::pipelined ? "pipelined" : "staged"; }

PipelineMode parse_pipeline_mode(const std::string& s) {
  if (s == "pipelined") return PipelineMode::pipelined;
  if (s == "staged") return PipelineMode::staged;
  throw std::invalid_argument("mode must be pipelined or staged, got '" + s + "'");
}

}  // namespace sgp

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
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sgp/matrix.hpp"
#include "sgp/subgen.hpp"

namespace sgp {

// D^-1/2 (A + I) D^-1/2 over a subgraph's local indexing, A symmetrized.
// Rows hold column indices in ascending order.
struct NormalizedAdjacency {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;

  MatrixD dense() const;
  static NormalizedAdjacency from_dense(const MatrixD& a);
};

NormalizedAdjacency normalized_adjacency(const Subgraph& sub);
MatrixD normalize_adjacency(const Subgraph& sub);

struct GcnModel {
  std::vector<MatrixF> weights;  // weights[l] is d_l x d_{l+1}
  std::uint64_t version = 0;     // bumped by every update

  std::size_t num_layers() const noexcept { return weights.size(); }
  std::size_t input_dim() const { return weights.front().rows(); }
  std::size_t num_classes() const { return weights.back().cols(); }
  void validate() const;

  friend bool operator==(const GcnModel& a, const GcnModel& b) { return a.weights == b.weights; }
};

// dims = {feature_dim, hidden..., num_classes}. Hidden layers use Glorot-uniform
// draws from the seed; the output layer is zero when `zero_output` is set.
GcnModel init_model(std::span<const std::size_t> dims, std::uint64_t seed, bool zero_output = true);

struct GradientSet {
  std::vector<MatrixF> grads;

  bool compatible(const GcnModel& m) const;
  bool compatible(const GradientSet& o) const;
  double l2_norm() const;

  friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

struct ForwardCache {
  std::uint64_t model_version = 0;
  std::shared_ptr<const NormalizedAdjacency> adjacency;
  std::vector<MatrixD> inputs;  // H_l entering layer l
  std::vector<MatrixD> pre;     // A H_l W_l for hidden layers
  std::vector<double> logits;   // seed row of the output layer
};

ForwardCache forward(const GcnModel& model, std::shared_ptr<const NormalizedAdjacency> adj, const MatrixF& x);
ForwardCache forward(const GcnModel& model, const MatrixD& adj, const MatrixF& x);

// Softmax cross-entropy of one logit row.
double cross_entropy(std::span<const double> logits, std::uint32_t label);

GradientSet backward(const GcnModel& model, const ForwardCache& cache, std::uint32_t label);

// Elementwise mean accumulated in float64 in index order, stored as float32.
GradientSet mean_gradients(std::span<const GradientSet> parts);

// W <- W - lr * g, computed in float64 and rounded once.
void sgd_step(GcnModel& model, const GradientSet& g, double lr);

enum class AllReduceTopology { ring, tree };

struct AllReduceOutcome {
  std::vector<GradientSet> per_worker;
  std::size_t messages = 0;
};

// In-process simulation of the collective: ring forwards each contribution
// W-1 hops; tree gathers to worker 0 and broadcasts back. Either way every
// worker averages the same contributions in worker order, so all copies are
// bit-identical and ring == tree.
AllReduceOutcome allreduce_mean(std::span<const GradientSet> worker_grads, AllReduceTopology topology,
                                std::size_t tree_arity = 2);

// Gradient synchronization as seen by one worker inside a training step.
class GradientSync {
 public:
  virtual ~GradientSync() = default;
  virtual std::size_t num_workers() const = 0;
  virtual GradientSet allreduce_mean(WorkerIndex worker, GradientSet local) = 0;
  // Returns (sum of values) / (sum of counts) over all workers.
  virtual double allreduce_ratio(WorkerIndex worker, double value, double count) = 0;
};

class LocalSync final : public GradientSync {
 public:
  std::size_t num_workers() const override { return 1; }
  GradientSet allreduce_mean(WorkerIndex, GradientSet local) override { return local; }
  double allreduce_ratio(WorkerIndex, double value, double count) override { return count == 0 ? 0 : value / count; }
};

struct TrainConfig {
  std::size_t max_epochs = 5;
  double learning_rate = 0.01;
  double loss_threshold = 0.0;  // stop once the epoch's global mean loss drops below; 0 disables
  std::size_t num_classes = 4;
  std::size_t feature_dim = 16;
  std::size_t hidden = 32;
  std::size_t hidden_layers = 1;

  void validate() const;
  std::vector<std::size_t> dims() const;
};

struct TrainSample {
  std::uint64_t seq = 0;
  NodeId seed = 0;
  std::shared_ptr<const NormalizedAdjacency> adjacency;
  MatrixF features;
  std::uint32_t label = 0;
};

TrainSample make_sample(const Subgraph& sub, std::uint64_t seq = 0);

class SampleSource {
 public:
  virtual ~SampleSource() = default;
  // nullptr when the epoch's data is exhausted.
  virtual const TrainSample* next() = 0;
};

class VectorSource final : public SampleSource {
 public:
  explicit VectorSource(std::span<const TrainSample> samples) : samples_(samples) {}
  const TrainSample* next() override { return pos_ < samples_.size() ? &samples_[pos_++] : nullptr; }

 private:
  std::span<const TrainSample> samples_;
  std::size_t pos_ = 0;
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  WorkerIndex worker = 0;
  double loss = 0;
  std::uint64_t seq = 0;
};

struct TrainContext {
  WorkerIndex worker = 0;
  GradientSync* sync = nullptr;
  std::function<void(const StepRecord&)> on_step;  // optional
};

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double local_mean_loss = 0;
  double global_mean_loss = 0;
};

// One pass over `source`: forward, backward, allreduce, SGD per sample.
EpochStats train_epoch(TrainContext& ctx, GcnModel& model, SampleSource& source, const TrainConfig& cfg,
                       std::size_t epoch);

// Single-context equivalent of one data-parallel step over `batch`:
// per-sample gradients averaged in batch order. Returns mean batch loss.
double train_step_batch(GcnModel& model, std::span<const TrainSample* const> batch, double lr);

}  // namespace sgp

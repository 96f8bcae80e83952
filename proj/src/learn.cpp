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

#include "sgp/learn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace sgp {

MatrixD NormalizedAdjacency::dense() const {
  MatrixD out(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) out(i, cols[k]) = vals[k];
  return out;
}

NormalizedAdjacency NormalizedAdjacency::from_dense(const MatrixD& a) {
  if (a.rows() != a.cols()) throw ShapeError("adjacency must be square");
  NormalizedAdjacency out;
  out.n = a.rows();
  out.row_ptr.push_back(0);
  for (std::size_t i = 0; i < out.n; ++i) {
    for (std::size_t j = 0; j < out.n; ++j)
      if (a(i, j) != 0.0) {
        out.cols.push_back(static_cast<std::uint32_t>(j));
        out.vals.push_back(a(i, j));
      }
    out.row_ptr.push_back(out.cols.size());
  }
  return out;
}

NormalizedAdjacency normalized_adjacency(const Subgraph& sub) {
  const std::size_t n = sub.nodes.size();
  std::unordered_map<NodeId, std::uint32_t> local;
  local.reserve(n);
  for (std::size_t i = 0; i < n; ++i) local.emplace(sub.nodes[i].id, static_cast<std::uint32_t>(i));

  // Symmetrized 0/1 adjacency; self-loop edges are folded into the +I term.
  std::vector<std::vector<std::uint32_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i].push_back(static_cast<std::uint32_t>(i));
  for (const Edge& e : sub.edges) {
    auto s = local.find(e.src);
    auto d = local.find(e.dst);
    if (s == local.end() || d == local.end()) throw Error("subgraph edge endpoint missing from node list");
    if (s->second == d->second) continue;
    rows[s->second].push_back(d->second);
    rows[d->second].push_back(s->second);
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(rows[i].begin(), rows[i].end());
    rows[i].erase(std::unique(rows[i].begin(), rows[i].end()), rows[i].end());
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(rows[i].size()));
  }

  NormalizedAdjacency out;
  out.n = n;
  out.row_ptr.reserve(n + 1);
  out.row_ptr.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : rows[i]) {
      out.cols.push_back(j);
      out.vals.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    out.row_ptr.push_back(out.cols.size());
  }
  return out;
}

MatrixD normalize_adjacency(const Subgraph& sub) { return normalized_adjacency(sub).dense(); }

void GcnModel::validate() const {
  if (weights.empty()) throw ShapeError("model has no layers");
  for (std::size_t l = 0; l + 1 < weights.size(); ++l)
    if (weights[l].cols() != weights[l + 1].rows()) throw ShapeError("layer dimensions do not chain");
  for (const auto& w : weights)
    for (float v : w.data())
      if (!std::isfinite(v)) throw DivergenceError("non-finite weight");
}

GcnModel init_model(std::span<const std::size_t> dims, std::uint64_t seed, bool zero_output) {
  if (dims.size() < 2) throw std::invalid_argument("model needs at least input and output dims");
  GcnModel m;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) throw std::invalid_argument("layer dims must be >= 1");
    MatrixF w(dims[l], dims[l + 1], 0.0f);
    const bool is_output = l + 2 == dims.size();
    if (!(is_output && zero_output)) {
      const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
      Rng rng(hash_words({seed, 0x6c617965ULL, l}));
      for (float& v : w.data()) v = static_cast<float>((rng.unit() * 2.0 - 1.0) * limit);
    }
    m.weights.push_back(std::move(w));
  }
  return m;
}

bool GradientSet::compatible(const GcnModel& m) const {
  if (grads.size() != m.weights.size()) return false;
  for (std::size_t l = 0; l < grads.size(); ++l)
    if (!grads[l].same_shape(m.weights[l])) return false;
  return true;
}

bool GradientSet::compatible(const GradientSet& o) const {
  if (grads.size() != o.grads.size()) return false;
  for (std::size_t l = 0; l < grads.size(); ++l)
    if (!grads[l].same_shape(o.grads[l])) return false;
  return true;
}

double GradientSet::l2_norm() const {
  double s = 0;
  for (const auto& g : grads)
    for (float v : g.data()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

namespace {

// out = h * w, float64 accumulation.
MatrixD times_weights(const MatrixD& h, const MatrixF& w) {
  MatrixD out(h.rows(), w.cols(), 0.0);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < h.cols(); ++k) {
      const double a = h(i, k);
      if (a == 0.0) continue;
      const auto wr = w.row(k);
      for (std::size_t j = 0; j < w.cols(); ++j) o[j] += a * wr[j];
    }
  }
  return out;
}

// out = A * p.
MatrixD propagate(const NormalizedAdjacency& a, const MatrixD& p) {
  MatrixD out(a.n, p.cols(), 0.0);
  for (std::size_t i = 0; i < a.n; ++i) {
    auto o = out.row(i);
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const double v = a.vals[k];
      const auto pr = p.row(a.cols[k]);
      for (std::size_t j = 0; j < p.cols(); ++j) o[j] += v * pr[j];
    }
  }
  return out;
}

// out = A^T * d.
MatrixD propagate_transposed(const NormalizedAdjacency& a, const MatrixD& d) {
  MatrixD out(a.n, d.cols(), 0.0);
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto dr = d.row(i);
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      auto o = out.row(a.cols[k]);
      const double v = a.vals[k];
      for (std::size_t j = 0; j < d.cols(); ++j) o[j] += v * dr[j];
    }
  }
  return out;
}

// h^T * d, rounded to float.
MatrixF weight_gradient(const MatrixD& h, const MatrixD& d) {
  MatrixD acc(h.cols(), d.cols(), 0.0);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const auto dr = d.row(i);
    for (std::size_t k = 0; k < h.cols(); ++k) {
      const double a = h(i, k);
      if (a == 0.0) continue;
      auto o = acc.row(k);
      for (std::size_t j = 0; j < d.cols(); ++j) o[j] += a * dr[j];
    }
  }
  return acc.cast<float>();
}

// d * w^T.
MatrixD times_weights_transposed(const MatrixD& d, const MatrixF& w) {
  MatrixD out(d.rows(), w.rows(), 0.0);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto dr = d.row(i);
    auto o = out.row(i);
    for (std::size_t k = 0; k < w.rows(); ++k) {
      const auto wr = w.row(k);
      double s = 0;
      for (std::size_t j = 0; j < w.cols(); ++j) s += dr[j] * wr[j];
      o[k] = s;
    }
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0;
  for (std::size_t c = 0; c < logits.size(); ++c) z += (p[c] = std::exp(logits[c] - mx));
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

ForwardCache forward(const GcnModel& model, std::shared_ptr<const NormalizedAdjacency> adj, const MatrixF& x) {
  if (model.weights.empty()) throw ShapeError("model has no layers");
  if (!adj) throw std::invalid_argument("null adjacency");
  if (x.rows() != adj->n) throw ShapeError("feature rows do not match adjacency size");
  if (x.cols() != model.input_dim()) throw ShapeError("feature dim does not match first layer");
  if (adj->n == 0) throw ShapeError("empty subgraph");

  ForwardCache cache;
  cache.model_version = model.version;
  cache.inputs.push_back(x.cast<double>());
  const std::size_t layers = model.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const MatrixD p = times_weights(cache.inputs.back(), model.weights[l]);
    if (l + 1 < layers) {
      MatrixD z = propagate(*adj, p);
      MatrixD h = z;
      for (double& v : h.data()) v = v < 0.0 ? 0.0 : v;  // NaN passes through to the loss check
      cache.pre.push_back(std::move(z));
      cache.inputs.push_back(std::move(h));
    } else {
      cache.logits.assign(p.cols(), 0.0);
      for (std::size_t k = adj->row_ptr[0]; k < adj->row_ptr[1]; ++k) {
        const auto pr = p.row(adj->cols[k]);
        for (std::size_t j = 0; j < p.cols(); ++j) cache.logits[j] += adj->vals[k] * pr[j];
      }
    }
  }
  cache.adjacency = std::move(adj);
  return cache;
}

ForwardCache forward(const GcnModel& model, const MatrixD& adj, const MatrixF& x) {
  return forward(model, std::make_shared<const NormalizedAdjacency>(NormalizedAdjacency::from_dense(adj)), x);
}

double cross_entropy(std::span<const double> logits, std::uint32_t label) {
  if (label >= logits.size()) throw std::out_of_range("label outside class range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (double v : logits) z += std::exp(v - mx);
  return std::log(z) + mx - logits[label];
}

GradientSet backward(const GcnModel& model, const ForwardCache& cache, std::uint32_t label) {
  if (cache.model_version != model.version || !cache.adjacency ||
      cache.inputs.size() != model.num_layers() || cache.logits.size() != model.num_classes())
    throw Error("stale forward cache: model changed since forward()");
  if (label >= model.num_classes()) throw std::out_of_range("label outside class range");
  const NormalizedAdjacency& a = *cache.adjacency;
  const std::size_t layers = model.num_layers();

  GradientSet g;
  g.grads.resize(layers);

  std::vector<double> dlogits = softmax(cache.logits);
  dlogits[label] -= 1.0;

  // Only the seed row feeds the loss: dP_L[j] = A[0, j] * dlogits.
  MatrixD dp(a.n, dlogits.size(), 0.0);
  for (std::size_t k = a.row_ptr[0]; k < a.row_ptr[1]; ++k) {
    auto o = dp.row(a.cols[k]);
    for (std::size_t j = 0; j < dlogits.size(); ++j) o[j] = a.vals[k] * dlogits[j];
  }
  for (std::size_t l = layers; l-- > 0;) {
    g.grads[l] = weight_gradient(cache.inputs[l], dp);
    if (l == 0) break;
    MatrixD dz = times_weights_transposed(dp, model.weights[l]);
    const MatrixD& z = cache.pre[l - 1];
    for (std::size_t i = 0; i < dz.size(); ++i)
      if (!(z.data()[i] > 0.0)) dz.data()[i] = 0.0;
    dp = propagate_transposed(a, dz);
  }
  return g;
}

GradientSet mean_gradients(std::span<const GradientSet> parts) {
  if (parts.empty()) throw std::invalid_argument("no gradients to average");
  for (const auto& p : parts)
    if (!p.compatible(parts.front())) throw ShapeError("gradient shapes differ across workers");
  const double count = static_cast<double>(parts.size());
  GradientSet out;
  for (std::size_t l = 0; l < parts.front().grads.size(); ++l) {
    const auto& shape = parts.front().grads[l];
    MatrixF m(shape.rows(), shape.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
      double s = 0;
      for (const auto& p : parts) s += static_cast<double>(p.grads[l].data()[i]);
      m.data()[i] = static_cast<float>(s / count);
    }
    out.grads.push_back(std::move(m));
  }
  return out;
}

void sgd_step(GcnModel& model, const GradientSet& g, double lr) {
  if (!g.compatible(model)) throw ShapeError("gradient shapes do not match model");
  bool finite = true;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    auto w = model.weights[l].data();
    const auto d = g.grads[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = static_cast<float>(static_cast<double>(w[i]) - lr * static_cast<double>(d[i]));
      finite = finite && std::isfinite(w[i]);
    }
  }
  ++model.version;
  if (!finite) throw DivergenceError("non-finite weight after SGD step (lr " + std::to_string(lr) + ")");
}

AllReduceOutcome allreduce_mean(std::span<const GradientSet> worker_grads, AllReduceTopology topology,
                                std::size_t tree_arity) {
  const std::size_t n = worker_grads.size();
  if (n == 0) throw std::invalid_argument("allreduce needs at least one worker");
  for (const auto& g : worker_grads)
    if (!g.compatible(worker_grads.front())) throw ShapeError("gradient shapes differ across workers");

  AllReduceOutcome out;
  // held[w][k] = worker k's contribution as known to worker w.
  std::vector<std::vector<const GradientSet*>> held(n, std::vector<const GradientSet*>(n, nullptr));
  for (std::size_t w = 0; w < n; ++w) held[w][w] = &worker_grads[w];

  if (topology == AllReduceTopology::ring) {
    for (std::size_t round = 0; round + 1 < n; ++round) {
      for (std::size_t w = 0; w < n; ++w) {
        const std::size_t from = (w + n - 1) % n;
        const std::size_t origin = (from + n - round) % n;
        held[w][origin] = held[from][origin];
        ++out.messages;
      }
    }
    for (std::size_t w = 0; w < n; ++w) {
      std::vector<GradientSet> ordered;
      for (std::size_t k = 0; k < n; ++k) ordered.push_back(*held[w][k]);
      out.per_worker.push_back(mean_gradients(ordered));
    }
  } else {
    if (tree_arity < 2) throw std::invalid_argument("tree arity must be >= 2");
    for (std::size_t w = n; w-- > 1;) {
      const std::size_t p = (w - 1) / tree_arity;
      for (std::size_t k = 0; k < n; ++k)
        if (held[w][k]) held[p][k] = held[w][k];
      ++out.messages;
    }
    const GradientSet mean = mean_gradients(worker_grads);
    out.per_worker.assign(n, mean);
    out.messages += n - 1;
  }
  return out;
}

void TrainConfig::validate() const {
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be finite and >= 0");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (feature_dim == 0 || hidden == 0) throw std::invalid_argument("layer widths must be >= 1");
}

std::vector<std::size_t> TrainConfig::dims() const {
  std::vector<std::size_t> d{feature_dim};
  for (std::size_t i = 0; i < hidden_layers; ++i) d.push_back(hidden);
  d.push_back(num_classes);
  return d;
}

TrainSample make_sample(const Subgraph& sub, std::uint64_t seq) {
  TrainSample s;
  s.seq = seq;
  s.seed = sub.seed;
  s.adjacency = std::make_shared<const NormalizedAdjacency>(normalized_adjacency(sub));
  s.features = sub.features;
  s.label = sub.label;
  return s;
}

EpochStats train_epoch(TrainContext& ctx, GcnModel& model, SampleSource& source, const TrainConfig& cfg,
                       std::size_t epoch) {
  if (!ctx.sync) throw std::invalid_argument("training context has no gradient sync");
  EpochStats stats;
  stats.epoch = epoch;
  double loss_sum = 0;
  while (const TrainSample* sample = source.next()) {
    const ForwardCache cache = forward(model, sample->adjacency, sample->features);
    const double loss = cross_entropy(cache.logits, sample->label);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "non-finite loss on worker " << ctx.worker << " epoch " << epoch << " step " << stats.steps
          << " seed " << sample->seed << " (weight version " << model.version << ")";
      throw DivergenceError(msg.str());
    }
    GradientSet local = backward(model, cache, sample->label);
    const GradientSet mean = ctx.sync->allreduce_mean(ctx.worker, std::move(local));
    sgd_step(model, mean, cfg.learning_rate);
    loss_sum += loss;
    if (ctx.on_step) ctx.on_step({epoch, stats.steps, ctx.worker, loss, sample->seq});
    ++stats.steps;
  }
  stats.local_mean_loss = stats.steps ? loss_sum / static_cast<double>(stats.steps) : 0.0;
  stats.global_mean_loss = ctx.sync->allreduce_ratio(ctx.worker, loss_sum, static_cast<double>(stats.steps));
  return stats;
}

double train_step_batch(GcnModel& model, std::span<const TrainSample* const> batch, double lr) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<GradientSet> grads;
  double loss_sum = 0;
  for (const TrainSample* s : batch) {
    const ForwardCache cache = forward(model, s->adjacency, s->features);
    loss_sum += cross_entropy(cache.logits, s->label);
    grads.push_back(backward(model, cache, s->label));
  }
  sgd_step(model, mean_gradients(grads), lr);
  return loss_sum / static_cast<double>(batch.size());
}

}  // namespace sgp

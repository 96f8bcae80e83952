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

#include <cmath>
#include <vector>

#include "sgp/learn.hpp"

namespace sgp::testing {

// Connected random subgraph on local ids 0..n-1 (seed 0) with features in [-1, 1].
inline Subgraph random_subgraph(std::size_t n, std::size_t dim, std::size_t classes, Rng& rng,
                                std::size_t extra_edges = 0) {
  Subgraph s;
  s.seed = 0;
  s.nodes.push_back({0, 0});
  for (NodeId i = 1; i < n; ++i) {
    const auto p = static_cast<NodeId>(rng.below(i));
    s.edges.push_back({p, i});
    s.nodes.push_back({i, 1});
  }
  for (std::size_t k = 0; k < extra_edges; ++k) {
    const auto a = static_cast<NodeId>(rng.below(n));
    const auto b = static_cast<NodeId>(rng.below(n));
    s.edges.push_back({a, b});
  }
  std::sort(s.edges.begin(), s.edges.end());
  s.edges.erase(std::unique(s.edges.begin(), s.edges.end()), s.edges.end());
  s.features = MatrixF(n, dim);
  for (float& v : s.features.data()) v = static_cast<float>(rng.unit() * 2 - 1);
  s.label = static_cast<std::uint32_t>(rng.below(classes));
  return s;
}

// Loss from scratch with plain loops: H_{l+1} = relu(A H_l W_l), logits = (A H_L W_L)[0].
inline double naive_loss(const GcnModel& m, const MatrixD& a, const MatrixF& x, std::uint32_t label) {
  const std::size_t n = a.rows();
  std::vector<std::vector<double>> h(n, std::vector<double>(x.cols()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) h[i][j] = x(i, j);
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const auto& w = m.weights[l];
    std::vector<std::vector<double>> ah(n, std::vector<double>(w.rows(), 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < w.rows(); ++j) ah[i][j] += a(i, k) * h[k][j];
    std::vector<std::vector<double>> next(n, std::vector<double>(w.cols(), 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) {
        for (std::size_t k = 0; k < w.rows(); ++k) next[i][j] += ah[i][k] * w(k, j);
        if (l + 1 < m.num_layers() && next[i][j] < 0) next[i][j] = 0;
      }
    h = std::move(next);
  }
  double mx = h[0][0];
  for (double v : h[0]) mx = std::max(mx, v);
  double z = 0;
  for (double v : h[0]) z += std::exp(v - mx);
  return std::log(z) + mx - h[0][label];
}

struct FdResult {
  double worst_relative = 0;  // max over layers of ||g - fd|| / max(||g||, ||fd||)
  std::size_t layer = 0;
};

// Central differences on every weight, step eps in float storage.
inline FdResult finite_difference_check(GcnModel model, const TrainSample& s, double eps) {
  const auto analytic = backward(model, forward(model, s.adjacency, s.features), s.label);
  FdResult out;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    double diff2 = 0, g2 = 0, f2 = 0;
    auto& w = model.weights[l];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const float orig = w.data()[i];
      const float up = static_cast<float>(orig + eps);
      const float down = static_cast<float>(orig - eps);
      w.data()[i] = up;
      const double lp = cross_entropy(forward(model, s.adjacency, s.features).logits, s.label);
      w.data()[i] = down;
      const double lm = cross_entropy(forward(model, s.adjacency, s.features).logits, s.label);
      w.data()[i] = orig;
      const double fd = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
      const double g = analytic.grads[l].data()[i];
      diff2 += (g - fd) * (g - fd);
      g2 += g * g;
      f2 += fd * fd;
    }
    const double denom = std::max(std::sqrt(g2), std::sqrt(f2));
    const double rel = denom == 0 ? 0 : std::sqrt(diff2) / denom;
    if (rel >= out.worst_relative) out = {rel, l};
  }
  return out;
}

}  // namespace sgp::testing

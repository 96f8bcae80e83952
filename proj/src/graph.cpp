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

#include "sgp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace sgp {

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                        std::vector<std::uint64_t> original_ids) {
  if (num_nodes > std::numeric_limits<NodeId>::max()) throw std::invalid_argument("too many nodes");
  if (!original_ids.empty() && original_ids.size() != num_nodes)
    throw std::invalid_argument("original id table size does not match node count");

  std::vector<EdgeId> counts(num_nodes + 1, 0);
  for (const Edge& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) throw std::out_of_range("edge endpoint out of range");
    ++counts[e.src + 1];
  }
  for (std::size_t v = 0; v < num_nodes; ++v) counts[v + 1] += counts[v];

  std::vector<NodeId> scattered(edges.size());
  {
    std::vector<EdgeId> cursor(counts.begin(), counts.end() - 1);
    for (const Edge& e : edges) scattered[cursor[e.src]++] = e.dst;
  }

  const auto n = static_cast<std::int64_t>(num_nodes);
#pragma omp parallel for schedule(dynamic, 1024)
  for (std::int64_t v = 0; v < n; ++v)
    std::sort(scattered.begin() + static_cast<std::ptrdiff_t>(counts[v]),
              scattered.begin() + static_cast<std::ptrdiff_t>(counts[v + 1]));

  Graph g;
  g.offsets_.assign(num_nodes + 1, 0);
  g.targets_.reserve(scattered.size());
  for (std::size_t v = 0; v < num_nodes; ++v) {
    const auto first = scattered.begin() + static_cast<std::ptrdiff_t>(counts[v]);
    const auto last = scattered.begin() + static_cast<std::ptrdiff_t>(counts[v + 1]);
    for (auto it = first; it != last; ++it)
      if (it == first || *it != *(it - 1)) g.targets_.push_back(*it);
    g.offsets_[v + 1] = g.targets_.size();
  }
  g.targets_.shrink_to_fit();

  if (original_ids.empty()) {
    original_ids.resize(num_nodes);
    for (std::size_t v = 0; v < num_nodes; ++v) original_ids[v] = v;
  }
  g.original_ids_ = std::move(original_ids);
  return g;
}

std::size_t Graph::degree(NodeId v) const {
  if (v >= num_nodes()) throw std::out_of_range("node " + std::to_string(v) + " out of range");
  return offsets_[v + 1] - offsets_[v];
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  if (v >= num_nodes()) throw std::out_of_range("node " + std::to_string(v) + " out of range");
  return std::span<const NodeId>(targets_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::size_t Graph::max_degree() const noexcept {
  std::size_t best = 0;
  for (std::size_t v = 0; v + 1 < offsets_.size(); ++v) best = std::max<std::size_t>(best, offsets_[v + 1] - offsets_[v]);
  return best;
}

std::uint64_t Graph::original_id(NodeId v) const {
  if (v >= num_nodes()) throw std::out_of_range("node " + std::to_string(v) + " out of range");
  return original_ids_[v];
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId v = 0; v < num_nodes(); ++v)
    for (EdgeId e = offsets_[v]; e < offsets_[v + 1]; ++e) out.push_back({v, targets_[e]});
  return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

const char* skip_space(const char* p, const char* end) {
  while (p != end && is_space(*p)) ++p;
  return p;
}

std::uint64_t parse_id(const char*& p, const char* end, std::size_t line_no) {
  p = skip_space(p, end);
  if (p == end) throw ParseError(line_no, "expected two node ids");
  std::uint64_t value = 0;
  auto [next, ec] = std::from_chars(p, end, value);
  if (ec == std::errc::result_out_of_range) throw ParseError(line_no, "node id overflows 64 bits");
  if (ec != std::errc() || (next != end && !is_space(*next)))
    throw ParseError(line_no, "malformed node id");
  p = next;
  return value;
}

}  // namespace

Graph parse_edge_list(std::string_view text, Directedness directedness) {
  std::unordered_map<std::uint64_t, NodeId> dense;
  std::vector<std::uint64_t> original;
  std::vector<Edge> edges;

  auto intern = [&](std::uint64_t id, std::size_t line_no) -> NodeId {
    auto [it, inserted] = dense.try_emplace(id, static_cast<NodeId>(original.size()));
    if (inserted) {
      if (original.size() >= std::numeric_limits<NodeId>::max())
        throw ParseError(line_no, "node count exceeds 32-bit id space");
      original.push_back(id);
    }
    return it->second;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    const char* p = text.data() + pos;
    const char* end = text.data() + eol;
    pos = eol + 1;

    p = skip_space(p, end);
    if (p == end || *p == '#') continue;
    const std::uint64_t a = parse_id(p, end, line_no);
    const std::uint64_t b = parse_id(p, end, line_no);
    if (skip_space(p, end) != end) throw ParseError(line_no, "trailing characters after edge");

    const NodeId u = intern(a, line_no);
    const NodeId v = intern(b, line_no);
    edges.push_back({u, v});
    if (directedness == Directedness::undirected && u != v) edges.push_back({v, u});
  }
  if (edges.empty()) throw Error("edge list contains no edges");
  const std::size_t n = original.size();
  return Graph::from_edges(n, edges, std::move(original));
}

Graph load_edge_list(const std::filesystem::path& path, Directedness directedness) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open edge list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str(), directedness);
}

std::string format_edge_list(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<bool> introduced(n, false);
  std::ostringstream out;
  auto emit = [&](NodeId a, NodeId b) {
    out << g.original_id(a) << ' ' << g.original_id(b) << '\n';
    introduced[a] = true;
    introduced[b] = true;
  };

  // Incoming adjacency restricted to lower ids lets us find, for every node k,
  // a line that introduces k after all of 0..k-1.
  std::vector<NodeId> lower_in(n, std::numeric_limits<NodeId>::max());
  for (NodeId u = 0; u < n; ++u)
    for (NodeId w : g.neighbors(u))
      if (u < w && lower_in[w] == std::numeric_limits<NodeId>::max()) lower_in[w] = u;

  for (NodeId k = 0; k < n; ++k) {
    if (introduced[k]) continue;
    const auto nbrs = g.neighbors(k);
    if (!nbrs.empty() && nbrs.front() < k) {
      emit(k, nbrs.front());
    } else if (lower_in[k] != std::numeric_limits<NodeId>::max()) {
      emit(lower_in[k], k);
    } else if (std::binary_search(nbrs.begin(), nbrs.end(), k)) {
      emit(k, k);
    } else if (std::binary_search(nbrs.begin(), nbrs.end(), k + 1)) {
      emit(k, k + 1);
    } else if (!nbrs.empty()) {
      emit(k, nbrs.front());
    }
  }
  for (const Edge& e : g.edges()) out << g.original_id(e.src) << ' ' << g.original_id(e.dst) << '\n';
  return out.str();
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write edge list " + path.string());
  out << format_edge_list(g);
  if (!out) throw Error("write failed for " + path.string());
}

std::span<const Edge> EdgePartition::local_edges(NodeId v) const {
  auto lo = std::lower_bound(edges.begin(), edges.end(), Edge{v, 0});
  auto hi = std::lower_bound(lo, edges.end(), Edge{v + 1, 0},
                             [](const Edge& a, const Edge& b) { return a.src < b.src; });
  return {lo, hi};
}

std::vector<EdgePartition> partition_edges(const Graph& g, std::size_t num_workers,
                                           PartitionStrategy strategy) {
  if (num_workers == 0) throw std::invalid_argument("num_workers must be >= 1");
  std::vector<EdgePartition> parts(num_workers);
  for (std::size_t w = 0; w < num_workers; ++w) parts[w].worker_id = static_cast<WorkerIndex>(w);

  const auto offsets = g.offsets();
  const auto targets = g.targets();
  if (strategy == PartitionStrategy::src_hash) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      auto& dst = parts[v % num_workers].edges;
      for (EdgeId e = offsets[v]; e < offsets[v + 1]; ++e) dst.push_back({v, targets[e]});
    }
  } else {
    const std::size_t m = g.num_edges();
    const std::size_t base = m / num_workers;
    const std::size_t extra = m % num_workers;
    NodeId v = 0;
    EdgeId e = 0;
    for (std::size_t w = 0; w < num_workers; ++w) {
      const std::size_t size = base + (w < extra ? 1 : 0);
      auto& dst = parts[w].edges;
      dst.reserve(size);
      for (std::size_t i = 0; i < size; ++i, ++e) {
        while (offsets[v + 1] <= e) ++v;
        dst.push_back({v, targets[e]});
      }
    }
  }
  return parts;
}

PartitionStats partition_stats(const Graph& g, std::span<const EdgePartition> parts) {
  PartitionStats stats;
  if (parts.empty()) return stats;
  stats.max_size = 0;
  stats.min_size = std::numeric_limits<std::size_t>::max();
  for (const auto& p : parts) {
    stats.max_size = std::max(stats.max_size, p.edges.size());
    stats.min_size = std::min(stats.min_size, p.edges.size());
  }
  stats.balance_ratio = stats.min_size == 0
                            ? (stats.max_size == 0 ? 1.0 : std::numeric_limits<double>::infinity())
                            : static_cast<double>(stats.max_size) / static_cast<double>(stats.min_size);

  // A node's home is the worker holding its first out-edge, else v mod W.
  const std::size_t n = g.num_nodes();
  std::vector<WorkerIndex> home(n);
  for (std::size_t v = 0; v < n; ++v) home[v] = static_cast<WorkerIndex>(v % parts.size());
  std::vector<bool> seen(n, false);
  for (const auto& p : parts)
    for (const Edge& e : p.edges)
      if (!seen[e.src]) {
        seen[e.src] = true;
        home[e.src] = p.worker_id;
      }
  for (const auto& p : parts)
    for (const Edge& e : p.edges)
      if (home[e.dst] != p.worker_id) ++stats.cut_edges;
  return stats;
}

}  // namespace sgp

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
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <gtest/gtest.h>

#include "sgp/graph.hpp"
#include "test_util.hpp"

namespace sgp {
namespace {

using testing::graph_from;
using testing::temp_path;
using testing::write_file;

TEST(GraphLoad, UndirectedPath) {
  const auto g = parse_edge_list("0 1\n1 2\n", Directedness::undirected);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 4u);
  EXPECT_EQ(g.degree(1), 2u);
  const auto n1 = g.neighbors(1);
  EXPECT_EQ(std::vector<NodeId>(n1.begin(), n1.end()), (std::vector<NodeId>{0, 2}));
}

TEST(GraphLoad, DirectedSelfLoop) {
  const auto g = parse_edge_list("0 0\n", Directedness::directed);
  EXPECT_EQ(g.num_nodes(), 1u);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.degree(0), 1u);
}

TEST(GraphLoad, UndirectedSelfLoopIsNotDoubled) {
  const auto g = parse_edge_list("3 3\n3 4\n", Directedness::undirected);
  EXPECT_EQ(g.num_edges(), 3u);  // (3,3), (3,4), (4,3)
}

TEST(GraphLoad, CommentsBlankLinesAndMissingTrailingNewline) {
  const auto g = parse_edge_list("# header\n\n  10\t20\n# x\n20 30", Directedness::directed);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
}

TEST(GraphLoad, RemapPreservesFirstAppearance) {
  const auto g = parse_edge_list("900 5\n5 77\n77 900\n", Directedness::directed);
  ASSERT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.original_id(0), 900u);
  EXPECT_EQ(g.original_id(1), 5u);
  EXPECT_EQ(g.original_id(2), 77u);
  EXPECT_EQ(g.neighbors(0)[0], 1u);
}

TEST(GraphLoad, DuplicatesCollapse) {
  const auto g = parse_edge_list("1 2\n1 2\n2 1\n", Directedness::undirected);
  EXPECT_EQ(g.num_edges(), 2u);
}

TEST(GraphLoad, ErrorsReportLineNumbers) {
  try {
    parse_edge_list("0 1\n# ok\n1 x\n", Directedness::directed);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_edge_list("0 1\n99999999999999999999999 1\n", Directedness::directed);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_edge_list("0 1 2\n", Directedness::directed), ParseError);
  EXPECT_THROW(parse_edge_list("0\n", Directedness::directed), ParseError);
  EXPECT_THROW(parse_edge_list("-1 2\n", Directedness::directed), ParseError);
}

TEST(GraphLoad, EmptyInputIsError) {
  EXPECT_THROW(parse_edge_list("", Directedness::directed), Error);
  EXPECT_THROW(parse_edge_list("# only comments\n\n", Directedness::undirected), Error);
  const auto p = temp_path("empty.txt");
  write_file(p, "");
  EXPECT_THROW(load_edge_list(p, Directedness::undirected), Error);
  EXPECT_THROW(load_edge_list(temp_path("missing.txt"), Directedness::undirected), Error);
}

TEST(GraphQuery, NeighborsRangeAndIsolated) {
  const auto g = Graph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 0}});
  EXPECT_TRUE(g.neighbors(3).empty());
  EXPECT_THROW(g.neighbors(4), std::out_of_range);
  EXPECT_THROW(g.degree(4), std::out_of_range);
}

// Brute-force oracle: an adjacency built with hash maps straight from the text.
TEST(GraphOracle, MatchesHashMapAdjacency) {
  for (auto d : {Directedness::directed, Directedness::undirected}) {
    const auto edges = synthesize_edges(1000, 6000, GraphModel::powerlaw, 11);
    std::string text = "# random\n";
    Rng rng(5);
    for (const auto& e : edges) {
      // Sparse ids and a few duplicates.
      text += std::to_string(e.src * 7 + 3) + " " + std::to_string(e.dst * 7 + 3) + "\n";
      if (rng.below(10) == 0) text += std::to_string(e.src * 7 + 3) + " " + std::to_string(e.dst * 7 + 3) + "\n";
    }
    const auto p = temp_path("oracle.txt");
    write_file(p, text);
    const auto g = load_edge_list(p, d);

    std::unordered_map<std::uint64_t, std::unordered_set<std::uint64_t>> adj;
    std::unordered_set<std::uint64_t> ids;
    for (const auto& e : edges) {
      const std::uint64_t u = e.src * 7 + 3, v = e.dst * 7 + 3;
      ids.insert(u);
      ids.insert(v);
      adj[u].insert(v);
      if (d == Directedness::undirected) adj[v].insert(u);
    }
    ASSERT_EQ(g.num_nodes(), ids.size());
    std::size_t total = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      std::set<std::uint64_t> got;
      for (NodeId u : g.neighbors(v)) got.insert(g.original_id(u));
      const auto& want = adj[g.original_id(v)];
      ASSERT_EQ(got, std::set<std::uint64_t>(want.begin(), want.end())) << "node " << g.original_id(v);
      EXPECT_TRUE(std::is_sorted(g.neighbors(v).begin(), g.neighbors(v).end()));
      total += g.degree(v);
    }
    EXPECT_EQ(total, g.num_edges());
  }
}

TEST(GraphRoundTrip, ReloadIsIdentical) {
  for (auto d : {Directedness::directed, Directedness::undirected}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto edges = synthesize_edges(300, 900, GraphModel::powerlaw, seed);
      std::string text;
      Rng rng(seed);
      for (const auto& e : edges) {
        if (rng.below(2)) text += std::to_string(e.src + 1000) + " " + std::to_string(e.dst + 1000) + "\n";
        else text += std::to_string(e.dst + 1000) + " " + std::to_string(e.src + 1000) + "\n";
        if (rng.below(40) == 0) text += std::to_string(e.src + 1000) + " " + std::to_string(e.src + 1000) + "\n";
      }
      const auto g = parse_edge_list(text, d);
      const auto p = temp_path("roundtrip.txt");
      write_edge_list(p, g);
      const auto h = load_edge_list(p, d);
      ASSERT_TRUE(g == h) << "seed " << seed;
    }
  }
}

TEST(Partition, SingleWorkerGetsEverything) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < 10; ++i) e.push_back({i, (i + 1) % 10});
  const auto g = Graph::from_edges(10, e);
  const auto parts = partition_edges(g, 1);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].edges.size(), 10u);
}

TEST(Partition, SrcHashModTwo) {
  const auto g = Graph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto parts = partition_edges(g, 2, PartitionStrategy::src_hash);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].edges, (std::vector<Edge>{{0, 1}, {2, 3}}));
  EXPECT_EQ(parts[1].edges, (std::vector<Edge>{{1, 2}, {3, 0}}));
  EXPECT_EQ(parts[1].worker_id, 1u);
}

TEST(Partition, ZeroWorkersIsError) {
  const auto g = Graph::from_edges(2, std::vector<Edge>{{0, 1}});
  EXPECT_THROW(partition_edges(g, 0), std::invalid_argument);
}

TEST(Partition, BlockEqualSizes) {
  const auto g = testing::random_graph(20000, 50000, 3);
  ASSERT_EQ(g.num_edges(), 100000u);
  const auto parts = partition_edges(g, 8, PartitionStrategy::block);
  std::vector<Edge> all;
  for (const auto& p : parts) {
    EXPECT_EQ(p.edges.size(), 12500u);
    all.insert(all.end(), p.edges.begin(), p.edges.end());
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, g.edges());
  const auto stats = partition_stats(g, parts);
  EXPECT_EQ(stats.balance_ratio, 1.0);
}

TEST(Partition, DisjointCoverAllStrategies) {
  const auto g = testing::random_graph(500, 3000, 8, GraphModel::powerlaw);
  for (auto s : {PartitionStrategy::src_hash, PartitionStrategy::block}) {
    for (std::size_t w = 1; w <= 13; ++w) {
      const auto parts = partition_edges(g, w, s);
      ASSERT_EQ(parts.size(), w);
      std::vector<Edge> all;
      for (const auto& p : parts) {
        EXPECT_TRUE(std::is_sorted(p.edges.begin(), p.edges.end()));
        if (s == PartitionStrategy::src_hash)
          for (const auto& e : p.edges) EXPECT_EQ(e.src % w, p.worker_id);
        all.insert(all.end(), p.edges.begin(), p.edges.end());
      }
      std::sort(all.begin(), all.end());
      ASSERT_EQ(all, g.edges()) << "workers " << w;
      const auto stats = partition_stats(g, parts);
      EXPECT_GE(stats.balance_ratio, 1.0);
      EXPECT_LE(stats.cut_edges, g.num_edges());
    }
  }
}

TEST(Partition, LocalEdges) {
  const auto g = graph_from({{0, 1}, {0, 2}, {1, 2}}, Directedness::undirected);
  const auto parts = partition_edges(g, 2, PartitionStrategy::block);
  std::size_t deg0 = 0;
  for (const auto& p : parts) {
    for (const auto& e : p.local_edges(0)) EXPECT_EQ(e.src, 0u);
    deg0 += p.local_edges(0).size();
  }
  EXPECT_EQ(deg0, 2u);
}

}  // namespace
}  // namespace sgp

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
#include <set>

#include <gtest/gtest.h>

#include "sgp/reduction.hpp"
#include "test_util.hpp"

namespace sgp {
namespace {

std::vector<NeighborShard> random_shards(std::size_t n, NodeId hot, Rng& rng) {
  std::vector<NeighborShard> out;
  for (std::size_t w = 0; w < n; ++w) {
    std::vector<NodeId> nb;
    const std::size_t k = rng.below(12);
    for (std::size_t i = 0; i < k; ++i) nb.push_back(static_cast<NodeId>(rng.below(200)));
    out.push_back(make_shard(hot, nb));
  }
  return out;
}

std::vector<NodeId> flat_union(const std::vector<NeighborShard>& shards) {
  std::set<NodeId> u;
  for (const auto& s : shards) u.insert(s.neighbors.begin(), s.neighbors.end());
  return {u.begin(), u.end()};
}

TEST(ReductionTree, SingleWorker) {
  const ReductionTree t(1, 2);
  EXPECT_EQ(t.depth(), 0u);
  EXPECT_EQ(t.height(), 0u);
  EXPECT_FALSE(t.parent(0));
  EXPECT_TRUE(t.children(0).empty());
}

TEST(ReductionTree, SevenBinary) {
  const ReductionTree t(7, 2);
  EXPECT_EQ(t.depth(), 3u);
  EXPECT_EQ(t.height(), 2u);
  EXPECT_EQ(t.children(0), (std::vector<WorkerIndex>{1, 2}));
  EXPECT_EQ(t.children(2), (std::vector<WorkerIndex>{5, 6}));
  EXPECT_EQ(*t.parent(6), 2u);
  EXPECT_EQ(t.level(6), 2u);
}

TEST(ReductionTree, Errors) {
  EXPECT_THROW(ReductionTree(4, 1), std::invalid_argument);
  EXPECT_THROW(ReductionTree(0, 2), std::invalid_argument);
  EXPECT_THROW(ReductionTree(4, 2).children(4), std::out_of_range);
}

TEST(ReductionTree, StructuralProperties) {
  for (std::size_t n = 1; n <= 70; ++n) {
    for (std::size_t a = 2; a <= 5; ++a) {
      const ReductionTree t(n, a);
      std::size_t d = 0, cap = 1;
      while (cap < n) cap *= a, ++d;
      ASSERT_EQ(t.depth(), d);
      ASSERT_LE(t.height(), t.depth());
      ASSERT_EQ(t.subtree_size(0), n);
      std::size_t seen = 0;
      for (const auto& level : t.levels()) seen += level.size();
      ASSERT_EQ(seen, n);
      std::vector<int> hits(n, 0);
      ++hits[0];
      for (WorkerIndex w = 0; w < n; ++w) {
        std::size_t sub = 1;
        for (WorkerIndex c : t.children(w)) {
          ASSERT_EQ(*t.parent(c), w);
          ASSERT_EQ(t.level(c), t.level(w) + 1);
          sub += t.subtree_size(c);
          ++hits[c];
        }
        ASSERT_EQ(t.subtree_size(w), sub);
        ASSERT_LE(t.children(w).size(), a);
      }
      for (int h : hits) ASSERT_EQ(h, 1);
    }
  }
}

TEST(MergeShards, Examples) {
  EXPECT_EQ(merge_shards(make_shard(9, {1, 3}), make_shard(9, {2, 3})).neighbors, (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(merge_shards(make_shard(9, {}), make_shard(9, {5})).neighbors, (std::vector<NodeId>{5}));
  EXPECT_THROW(merge_shards(make_shard(1, {}), make_shard(2, {})), std::invalid_argument);
  EXPECT_EQ(make_shard(0, {5, 1, 5, 3}).neighbors, (std::vector<NodeId>{1, 3, 5}));
}

TEST(MergeShards, OrderDoesNotMatter) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    auto shards = random_shards(9, 4, rng);
    const auto want = flat_union(shards);
    NeighborShard acc = make_shard(4, {});
    for (const auto& s : shards) acc = merge_shards(acc, s);
    EXPECT_EQ(acc.neighbors, want);
    std::reverse(shards.begin(), shards.end());
    NeighborShard rev = make_shard(4, {});
    for (const auto& s : shards) rev = merge_shards(s, rev);
    EXPECT_EQ(rev, acc);
  }
}

TEST(TreeReduce, Examples) {
  const std::vector<NeighborShard> one{make_shard(2, {7, 8})};
  EXPECT_EQ(tree_reduce(ReductionTree(1, 2), one).result, one[0]);
  const std::vector<NeighborShard> four{make_shard(0, {1}), make_shard(0, {2}), make_shard(0, {3}), make_shard(0, {4})};
  const auto r = tree_reduce(ReductionTree(4, 2), four);
  EXPECT_EQ(r.result.neighbors, (std::vector<NodeId>{1, 2, 3, 4}));
  EXPECT_EQ(r.messages, 3u);
}

TEST(TreeReduce, SixteenWorkersCounters) {
  Rng rng(16);
  const auto shards = random_shards(16, 1, rng);
  const auto r = tree_reduce(ReductionTree(16, 2), shards);
  EXPECT_EQ(r.result.neighbors, flat_union(shards));
  EXPECT_EQ(r.messages, 15u);
  EXPECT_EQ(r.critical_path, 4u);
}

TEST(TreeReduce, ExhaustiveSmallInstances) {
  Rng rng(77);
  for (std::size_t n = 1; n <= 32; ++n) {
    for (std::size_t a = 2; a <= 4; ++a) {
      const ReductionTree tree(n, a);
      for (int t = 0; t < 20; ++t) {
        auto shards = random_shards(n, 5, rng);
        const auto r = tree_reduce(tree, shards);
        ASSERT_EQ(r.result.neighbors, flat_union(shards));
        ASSERT_EQ(r.messages, n - 1);
        ASSERT_EQ(r.critical_path, tree.height());
        // Permuting which worker holds which shard leaves the result unchanged.
        std::reverse(shards.begin(), shards.end());
        ASSERT_EQ(tree_reduce(tree, shards).result, r.result);
      }
    }
  }
}

TEST(TreeReduce, MissingShardNamesWorker) {
  std::vector<std::optional<NeighborShard>> shards(6, make_shard(0, {1}));
  shards[4].reset();
  try {
    tree_reduce(ReductionTree(6, 2), shards);
    FAIL();
  } catch (const TimeoutError& e) {
    EXPECT_EQ(e.worker(), 4u);
  }
  std::vector<NeighborShard> mixed{make_shard(0, {}), make_shard(1, {})};
  EXPECT_THROW(tree_reduce(ReductionTree(2, 2), mixed), std::invalid_argument);
  EXPECT_THROW(tree_reduce(ReductionTree(3, 2), std::vector<NeighborShard>{make_shard(0, {})}), TimeoutError);
}

TEST(GatherHot, SinglePartition) {
  const auto g = testing::graph_from({{0, 1}, {0, 2}, {0, 3}, {4, 0}}, Directedness::directed);
  // src_hash over 4 workers: node 0's edges all live on worker 0.
  const auto parts = partition_edges(g, 4, PartitionStrategy::src_hash);
  const auto r = gather_hot_neighbors(parts, 0, HotNodePolicy{3}, ReductionTree(4, 2));
  EXPECT_EQ(r.result, extract_shard(parts[0], 0));
  EXPECT_EQ(r.result.neighbors, (std::vector<NodeId>{1, 2, 3}));
}

TEST(GatherHot, SplitAcrossEightPartitions) {
  const auto g = testing::random_graph(3000, 20000, 6, GraphModel::powerlaw);
  const auto parts = partition_edges(g, 8, PartitionStrategy::block);
  const HotNodePolicy policy{50};
  std::size_t checked = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.degree(v) < policy.degree_threshold) continue;
    std::size_t holders = 0;
    for (const auto& p : parts) holders += !p.local_edges(v).empty();
    const auto r = gather_hot_neighbors(parts, v, policy, ReductionTree(8, 3));
    const auto nb = g.neighbors(v);
    ASSERT_EQ(r.result.neighbors, std::vector<NodeId>(nb.begin(), nb.end()));
    checked += holders > 1;
  }
  EXPECT_GT(checked, 0u);
}

TEST(GatherHot, ColdNodeIsRejected) {
  const auto g = testing::random_graph(100, 300, 6);
  const auto parts = partition_edges(g, 2);
  EXPECT_THROW(gather_hot_neighbors(parts, 0, HotNodePolicy{g.max_degree() + 1}, ReductionTree(2, 2)),
               std::invalid_argument);
  EXPECT_THROW(HotNodePolicy{0}.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace sgp

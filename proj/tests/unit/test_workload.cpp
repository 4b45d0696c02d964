#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "allreduce/topology.hpp"
#include "allreduce/workload.hpp"

using namespace allreduce;

namespace {

std::vector<int> bfs_distances(const TopologyGraph& g, int dst) {
  std::vector<int> dist(g.num_nodes(), -1);
  std::deque<int> q{dst};
  dist[dst] = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (const Link& l : g.links()) {
      const int v = l.a == u ? l.b : (l.b == u ? l.a : -1);
      if (v >= 0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

// Hosts A..D (all servers): A-B, B-C, B-D, C-D. Toward A, the branches of
// B, C and D all cross B-A; C-D carries nothing.
TopologyGraph four_hosts() {
  TopologyParams p;
  return TopologyGraph("four-hosts", p, 4, 0, {{0, 0, 1}, {1, 1, 2}, {2, 1, 3}, {3, 2, 3}});
}

bool is_subset(const std::vector<int>& small, const std::vector<int>& big) {
  std::multiset<int> b(big.begin(), big.end());
  for (int x : small) {
    auto it = b.find(x);
    if (it == b.end()) return false;
    b.erase(it);
  }
  return true;
}

}  // namespace

TEST(NodeTree, SmallestBCube) {
  auto g = build_bcube(2, 0);
  const NodeTree t = build_node_tree(g, 0);
  EXPECT_EQ(t.parent[1], 2);
  EXPECT_EQ(t.parent[2], 0);
  EXPECT_EQ(t.parent[0], -1);
  EXPECT_EQ(t.depth(1), 2);
}

TEST(NodeTree, RejectsSwitchRoot) {
  auto g = build_bcube(2, 0);
  EXPECT_THROW(build_node_tree(g, 2), WorkloadError);
}

TEST(NodeTree, DepthsAreBfsDistances) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    for (int root = 0; root < g.num_servers(); root += 2) {
      const NodeTree t = build_node_tree(g, root);
      const auto dist = bfs_distances(g, root);
      for (int s = 0; s < g.num_servers(); ++s) {
        ASSERT_TRUE(t.contains(s));
        // Walk parents by hand rather than trusting depth().
        int hops = 0;
        for (int at = s; at != root; at = t.parent[at]) ++hops;
        EXPECT_EQ(hops, dist[s]) << p.label << " root " << root << " server " << s;
      }
    }
  }
}

TEST(WorkloadTree, SmallestBCube) {
  auto g = build_bcube(2, 0);
  const WorkloadTree wt = build_workload_tree(g, build_node_tree(g, 0));
  ASSERT_EQ(wt.size(), 2u);
  EXPECT_EQ(wt.workloads[0].tail, 1);
  EXPECT_EQ(wt.workloads[0].head, 2);
  EXPECT_TRUE(wt.workloads[0].prefixes.empty());
  EXPECT_EQ(wt.workloads[1].tail, 2);
  EXPECT_EQ(wt.workloads[1].head, 0);
  EXPECT_EQ(wt.workloads[1].prefixes, std::vector<int>{0});
  EXPECT_EQ(build_all_trees(g).total(), 4);
  EXPECT_EQ(build_all_trees(g).trees.size(), 2u);
}

TEST(WorkloadTree, PreMergeCountIsSumOfDistances) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    for (int root = 0; root < g.num_servers(); root += 3) {
      const auto dist = bfs_distances(g, root);
      int expected = 0;
      for (int s = 0; s < g.num_servers(); ++s) expected += dist[s];
      EXPECT_EQ(static_cast<int>(build_workload_tree(g, build_node_tree(g, root)).size()), expected)
          << p.label;
    }
  }
}

TEST(Merge, FourHostExample) {
  const auto g = four_hosts();
  const WorkloadTree pre = build_workload_tree(g, build_node_tree(g, 0));
  // Branches of B, C and D each cross B->A separately before merging.
  int on_shared = 0;
  for (const Workload& w : pre.workloads) on_shared += (w.hop.link == 0) ? 1 : 0;
  EXPECT_EQ(pre.size(), 5u);
  EXPECT_EQ(on_shared, 3);

  const WorkloadTree merged = merge_workloads(g, pre);
  EXPECT_EQ(merged.size(), 3u);
  const Workload* into_root = nullptr;
  for (const Workload& w : merged.workloads) {
    EXPECT_NE(w.hop.link, 3) << "C-D carries no data toward A";
    if (w.head == 0) into_root = &w;
  }
  ASSERT_NE(into_root, nullptr);
  EXPECT_EQ(into_root->merged_from, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(into_root->prefixes.size(), 2u);
}

TEST(Merge, NothingSharedIsIdentity) {
  // Servers wired straight to the root: one hop per branch, nothing shared.
  TopologyParams p;
  const TopologyGraph g("star", p, 4, 0, {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}});
  const WorkloadTree pre = build_workload_tree(g, build_node_tree(g, 0));
  EXPECT_EQ(merge_workloads(g, pre), pre);
}

TEST(Merge, IdempotentAndMonotone) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    const WorkloadSet pre = build_all_trees_unmerged(g);
    const WorkloadSet post = build_all_trees(g);
    ASSERT_EQ(pre.trees.size(), post.trees.size());
    for (std::size_t i = 0; i < pre.trees.size(); ++i) {
      const WorkloadTree once = merge_workloads(g, pre.trees[i]);
      EXPECT_EQ(merge_workloads(g, once), once) << p.label;
      EXPECT_LE(once.size(), pre.trees[i].size());
    }
    if (p.params.family != Family::kJellyfish) {
      EXPECT_LT(post.total(), pre.total()) << p.label;
    }
  }
}

TEST(Merge, ServerHeadedSlotsAreUnique) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    for (const WorkloadTree& t : build_all_trees(g).trees) {
      std::set<int> slots;
      for (const Workload& w : t.workloads) {
        if (g.node(w.head).is_server()) {
          EXPECT_TRUE(slots.insert(slot_index(w.hop)).second) << p.label << " root " << t.root;
        } else {
          EXPECT_LE(w.prefixes.size(), 1u) << "a switch never combines streams";
        }
      }
    }
  }
}

TEST(WorkloadSet, IdsPartitionAndHopsMatchLinks) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    const WorkloadSet set = build_all_trees(g);
    int next = 0;
    for (const WorkloadTree& t : set.trees) {
      EXPECT_EQ(t.first_id, next);
      for (const Workload& w : t.workloads) {
        EXPECT_EQ(w.id, next++);
        EXPECT_EQ(w.root, t.root);
        EXPECT_EQ(g.tail_of(w.hop), w.tail);
        EXPECT_EQ(g.head_of(w.hop), w.head);
        for (int pre : w.prefixes) {
          EXPECT_EQ(t.at(pre).head, w.tail);
        }
      }
    }
    EXPECT_EQ(next, set.total());
  }
}

TEST(WorkloadSet, PrefixGraphsAreAcyclic) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    for (const WorkloadTree& t : build_all_trees(g).trees) {
      const auto order = topological_order(t);
      ASSERT_EQ(order.size(), t.size()) << p.label;
      std::set<int> seen;
      for (int id : order) {
        for (int pre : t.at(id).prefixes) EXPECT_TRUE(seen.count(pre));
        seen.insert(id);
      }
    }
  }
}

TEST(WorkloadSet, TopologicalOrderDetectsCycle) {
  auto g = build_bcube(2, 0);
  WorkloadTree t = build_workload_tree(g, build_node_tree(g, 0));
  t.workloads[0].prefixes = {1};
  EXPECT_TRUE(topological_order(t).empty());
}

TEST(WorkloadSet, RootReceivesEveryServerOnce) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    for (const WorkloadTree& t : build_all_trees(g).trees) {
      // Data each hop carries must be what its prefixes delivered, plus at
      // most its own sender's contribution.
      for (const Workload& w : t.workloads) {
        std::vector<int> in;
        for (int pre : w.prefixes) {
          const auto& m = t.at(pre).merged_from;
          in.insert(in.end(), m.begin(), m.end());
        }
        ASSERT_TRUE(is_subset(in, w.merged_from)) << p.label;
        const std::size_t extra = w.merged_from.size() - in.size();
        ASSERT_LE(extra, 1u);
        if (extra == 1) {
          ASSERT_TRUE(g.node(w.tail).is_server());
        }
      }
      std::multiset<int> arrived;
      for (const Workload& w : t.workloads) {
        if (w.head == t.root) arrived.insert(w.merged_from.begin(), w.merged_from.end());
      }
      std::multiset<int> expected;
      for (int s = 0; s < g.num_servers(); ++s) {
        if (s != t.root) expected.insert(s);
      }
      EXPECT_EQ(arrived, expected) << p.label << " root " << t.root;
    }
  }
}

TEST(WorkloadSet, Deterministic) {
  for (const char* label : {"B2", "D1", "J2"}) {
    const auto& p = find_preset(label).params;
    const WorkloadSet a = build_all_trees(build_topology(p));
    const WorkloadSet b = build_all_trees(build_topology(p));
    ASSERT_EQ(a.trees.size(), b.trees.size());
    for (std::size_t i = 0; i < a.trees.size(); ++i) EXPECT_EQ(a.trees[i], b.trees[i]);
  }
}

TEST(WorkloadSet, DCellTreesNeedEveryServerAndCellSwitch) {
  // One hop leaves every non-root server and every cell switch, so a merged
  // tree has at least (N - 1) + (n + 1) workloads. With n = 2 a cell can be
  // bypassed through cross links, hence n >= 3.
  for (int n = 3; n <= 6; ++n) {
    auto g = build_dcell(n);
    const int servers = g.num_servers();
    for (const WorkloadTree& t : build_all_trees(g).trees) {
      std::set<int> senders;
      for (const Workload& w : t.workloads) senders.insert(w.tail);
      EXPECT_EQ(static_cast<int>(senders.size()), servers - 1 + n + 1);
      EXPECT_GE(static_cast<int>(t.size()), servers - 1 + n + 1);
    }
  }
}

TEST(WorkloadSet, PresetCounts) {
  // Merged totals of the current construction.
  const std::map<std::string, int> expected = {{"D1", 600}, {"D2", 1290}, {"D3", 2436}};
  for (const auto& [label, count] : expected) {
    EXPECT_EQ(build_all_trees(build_topology(find_preset(label).params)).total(), count) << label;
  }
}

TEST(WorkloadSet, PsChainsAreUnmerged) {
  auto g = build_bcube(3, 1);
  const WorkloadSet ps = build_ps_workloads(g);
  int expected = 0;
  for (int root = 0; root < g.num_servers(); ++root) {
    const auto dist = bfs_distances(g, root);
    for (int s = 0; s < g.num_servers(); ++s) expected += dist[s];
  }
  EXPECT_EQ(ps.total(), expected);
  for (const WorkloadTree& t : ps.trees) {
    for (const Workload& w : t.workloads) {
      EXPECT_EQ(w.merged_from.size(), 1u);
      EXPECT_LE(w.prefixes.size(), 1u);
    }
  }
}

#include "allreduce/workload.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <string>
#include <utility>

namespace allreduce {

int NodeTree::depth(int node) const {
  if (!contains(node)) throw WorkloadError("node " + std::to_string(node) + " not in tree");
  int d = 0;
  for (int cur = node; cur != root; cur = parent[cur]) ++d;
  return d;
}

std::vector<int> WorkloadTree::leaves() const {
  std::vector<int> out;
  for (const auto& w : workloads) {
    if (w.prefixes.empty()) out.push_back(w.id);
  }
  return out;
}

int WorkloadSet::total() const {
  int n = 0;
  for (const auto& t : trees) n += static_cast<int>(t.size());
  return n;
}

int WorkloadSet::max_chain_length() const {
  int best = 0;
  for (const auto& t : trees) best = std::max(best, longest_chain(t));
  return best;
}

NodeTree build_node_tree(const TopologyGraph& g, int root) {
  if (root < 0 || root >= g.num_nodes() || !g.node(root).is_server()) {
    throw WorkloadError("tree root must be a server");
  }
  const int n = g.num_nodes();
  NodeTree tree{root, std::vector<int>(n, -1), std::vector<int>(n, -1),
                std::vector<bool>(n, false)};
  tree.member[root] = true;
  for (int s = 0; s < g.num_servers(); ++s) {
    if (s == root) continue;
    const Route route = shortest_route(g, s, root);
    int cur = s;
    for (const Hop& hop : route.hops) {
      if (tree.member[cur]) break;
      tree.member[cur] = true;
      tree.parent[cur] = g.head_of(hop);
      tree.parent_link[cur] = hop.link;
      cur = g.head_of(hop);
    }
  }
  return tree;
}

WorkloadTree build_workload_tree(const TopologyGraph& g, const NodeTree& tree,
                                 int first_id) {
  WorkloadTree out{tree.root, first_id, {}};
  for (int s = 0; s < g.num_servers(); ++s) {
    if (s == tree.root) continue;
    if (!tree.contains(s)) throw WorkloadError("server missing from node tree");
    int prev = -1;
    for (int cur = s; cur != tree.root; cur = tree.parent[cur]) {
      Workload w;
      w.id = first_id + static_cast<int>(out.workloads.size());
      w.root = tree.root;
      w.tail = cur;
      w.head = tree.parent[cur];
      w.hop = g.hop_from(tree.parent_link[cur], cur);
      if (prev >= 0) w.prefixes.push_back(prev);
      w.merged_from.push_back(s);
      prev = w.id;
      out.workloads.push_back(std::move(w));
    }
  }
  return out;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  // Smallest element stays the representative.
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

WorkloadTree merge_workloads(const TopologyGraph& g, const WorkloadTree& tree) {
  const auto& ws = tree.workloads;
  const int n = static_cast<int>(ws.size());
  auto local = [&](int id) {
    const int i = id - tree.first_id;
    if (i < 0 || i >= n) throw WorkloadError("prefix id outside tree");
    return i;
  };

  DisjointSets sets(n);
  {
    std::map<int, int> by_slot;
    for (int i = 0; i < n; ++i) {
      if (!g.node(ws[i].head).is_server()) continue;
      auto [it, inserted] = by_slot.try_emplace(slot_index(ws[i].hop), i);
      if (!inserted) sets.unite(it->second, i);
    }
  }
  // Continuations of merged branches become identical: same slot, same
  // predecessor classes. Repeat until nothing changes.
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::pair<int, std::vector<int>>, int> by_signature;
    for (int i = 0; i < n; ++i) {
      std::vector<int> pre;
      for (int p : ws[i].prefixes) pre.push_back(sets.find(local(p)));
      std::sort(pre.begin(), pre.end());
      pre.erase(std::unique(pre.begin(), pre.end()), pre.end());
      auto key = std::make_pair(slot_index(ws[i].hop), std::move(pre));
      auto [it, inserted] = by_signature.try_emplace(std::move(key), i);
      if (!inserted && sets.unite(it->second, i)) changed = true;
    }
  }

  // Representatives are class minima, so ascending representatives give the
  // order of each class's smallest member.
  std::vector<int> new_id(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = sets.find(i);
    if (r == i) new_id[i] = tree.first_id + next++;
  }
  WorkloadTree out{tree.root, tree.first_id, std::vector<Workload>(next)};
  for (int i = 0; i < n; ++i) {
    const int r = sets.find(i);
    Workload& m = out.workloads[new_id[r] - tree.first_id];
    if (r == i) {
      m.id = new_id[r];
      m.root = ws[i].root;
      m.tail = ws[i].tail;
      m.head = ws[i].head;
      m.hop = ws[i].hop;
    }
    for (int p : ws[i].prefixes) m.prefixes.push_back(new_id[sets.find(local(p))]);
    m.merged_from.insert(m.merged_from.end(), ws[i].merged_from.begin(),
                         ws[i].merged_from.end());
  }
  for (auto& m : out.workloads) {
    std::sort(m.prefixes.begin(), m.prefixes.end());
    m.prefixes.erase(std::unique(m.prefixes.begin(), m.prefixes.end()), m.prefixes.end());
    std::sort(m.merged_from.begin(), m.merged_from.end());
  }
  return out;
}

namespace {

void require_two_servers(const TopologyGraph& g) {
  if (g.num_servers() < 2) throw WorkloadError("need at least two servers");
}

}  // namespace

WorkloadSet build_all_trees(const TopologyGraph& g) {
  require_two_servers(g);
  WorkloadSet set;
  int next_id = 0;
  for (int root = 0; root < g.num_servers(); ++root) {
    const NodeTree nt = build_node_tree(g, root);
    set.trees.push_back(merge_workloads(g, build_workload_tree(g, nt, next_id)));
    next_id += static_cast<int>(set.trees.back().size());
  }
  return set;
}

WorkloadSet build_all_trees_unmerged(const TopologyGraph& g) {
  require_two_servers(g);
  WorkloadSet set;
  int next_id = 0;
  for (int root = 0; root < g.num_servers(); ++root) {
    set.trees.push_back(build_workload_tree(g, build_node_tree(g, root), next_id));
    next_id += static_cast<int>(set.trees.back().size());
  }
  return set;
}

WorkloadSet build_ps_workloads(const TopologyGraph& g) {
  require_two_servers(g);
  WorkloadSet set;
  int next_id = 0;
  for (int root = 0; root < g.num_servers(); ++root) {
    WorkloadTree tree{root, next_id, {}};
    for (int s = 0; s < g.num_servers(); ++s) {
      if (s == root) continue;
      int prev = -1;
      for (const Hop& hop : shortest_route(g, s, root).hops) {
        Workload w;
        w.id = next_id++;
        w.root = root;
        w.tail = g.tail_of(hop);
        w.head = g.head_of(hop);
        w.hop = hop;
        if (prev >= 0) w.prefixes.push_back(prev);
        w.merged_from.push_back(s);
        prev = w.id;
        tree.workloads.push_back(std::move(w));
      }
    }
    set.trees.push_back(std::move(tree));
  }
  return set;
}

std::vector<int> topological_order(const WorkloadTree& tree) {
  const int n = static_cast<int>(tree.size());
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> successors(n);
  for (int i = 0; i < n; ++i) {
    for (int p : tree.workloads[i].prefixes) {
      const int j = p - tree.first_id;
      if (j < 0 || j >= n) return {};
      successors[j].push_back(i);
      ++indegree[i];
    }
  }
  std::deque<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int i = ready.front();
    ready.pop_front();
    order.push_back(tree.first_id + i);
    for (int s : successors[i]) {
      if (--indegree[s] == 0) ready.push_back(s);
    }
  }
  if (static_cast<int>(order.size()) != n) return {};
  return order;
}

int longest_chain(const WorkloadTree& tree) {
  const auto order = topological_order(tree);
  if (order.size() != tree.size()) throw WorkloadError("prefix cycle in tree");
  std::vector<int> chain(tree.size(), 0);
  int best = 0;
  for (int id : order) {
    const Workload& w = tree.at(id);
    int c = 1;
    for (int p : w.prefixes) c = std::max(c, chain[p - tree.first_id] + 1);
    chain[id - tree.first_id] = c;
    best = std::max(best, c);
  }
  return best;
}

}  // namespace allreduce

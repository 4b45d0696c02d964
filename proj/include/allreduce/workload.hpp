#ifndef ALLREDUCE_WORKLOAD_HPP_
#define ALLREDUCE_WORKLOAD_HPP_

#include <vector>

#include "allreduce/topology.hpp"

namespace allreduce {

// Per-root tree over physical nodes, every edge directed toward the root.
struct NodeTree {
  int root = 0;
  std::vector<int> parent;       // parent node id, -1 for the root and non-members
  std::vector<int> parent_link;  // link to the parent, -1 where parent is -1
  std::vector<bool> member;

  bool contains(int node) const { return member.at(node); }
  int depth(int node) const;  // hop count to the root
};

// One hop of aggregated gradient data over one physical link.
struct Workload {
  int id = 0;
  int root = 0;  // data destination; identifies the owning tree
  int tail = 0;  // sender
  int head = 0;  // receiver
  Hop hop;
  std::vector<int> prefixes;     // immediate predecessors, sorted ids
  std::vector<int> merged_from;  // source servers whose data this hop carries, sorted

  bool operator==(const Workload&) const = default;
};

// All workloads destined to one root server. Ids are dense, starting at
// first_id, and stored in id order.
struct WorkloadTree {
  int root = 0;
  int first_id = 0;
  std::vector<Workload> workloads;

  std::size_t size() const { return workloads.size(); }
  std::vector<int> leaves() const;
  const Workload& at(int id) const { return workloads.at(id - first_id); }

  bool operator==(const WorkloadTree&) const = default;
};

struct WorkloadSet {
  std::vector<WorkloadTree> trees;

  int total() const;
  int max_chain_length() const;
};

class WorkloadError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Overlays shortest routes of every other server toward `root`, in ascending
// server id. A route stops at the first node already in the tree.
NodeTree build_node_tree(const TopologyGraph& g, int root);

// One workload per hop of every non-root server's tree path; each hop's
// prefix is the previous hop of the same branch. Ids start at first_id.
WorkloadTree build_workload_tree(const TopologyGraph& g, const NodeTree& tree,
                                 int first_id = 0);

// Combines workloads that share (link, direction) into a server head, then
// collapses the now-identical continuations, to a fixpoint. Switches never
// combine distinct streams. Output ids are dense from first_id and ordered
// by the smallest input id each output absorbs, so the result does not
// depend on merge order.
WorkloadTree merge_workloads(const TopologyGraph& g, const WorkloadTree& tree);

// One merged tree per server root with globally unique ids.
WorkloadSet build_all_trees(const TopologyGraph& g);

// Pre-merge counterpart of build_all_trees (tree paths, no merging).
WorkloadSet build_all_trees_unmerged(const TopologyGraph& g);

// Parameter-server workload set: every non-root server's data travels its
// own shortest route to every root as an independent chain, no merging.
WorkloadSet build_ps_workloads(const TopologyGraph& g);

// Workload ids in a prefix-respecting order; empty when the prefix graph has
// a cycle or references an id outside the tree.
std::vector<int> topological_order(const WorkloadTree& tree);

// Number of workloads on the longest prefix chain in the tree.
int longest_chain(const WorkloadTree& tree);

}  // namespace allreduce

#endif  // ALLREDUCE_WORKLOAD_HPP_

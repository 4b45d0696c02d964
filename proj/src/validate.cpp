#include "allreduce/validate.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "allreduce/reference.hpp"

namespace allreduce {

namespace {

std::string join_first(const std::vector<std::string>& problems, std::size_t limit = 3) {
  std::ostringstream out;
  for (std::size_t i = 0; i < problems.size() && i < limit; ++i) {
    if (i) out << "; ";
    out << problems[i];
  }
  if (problems.size() > limit) out << "; ... (" << problems.size() << " total)";
  return out.str();
}

CheckResult from_problems(std::string name, const std::vector<std::string>& problems,
                          std::string ok_detail) {
  if (problems.empty()) return {std::move(name), true, std::move(ok_detail)};
  return {std::move(name), false, join_first(problems)};
}

}  // namespace

std::vector<CheckResult> validate_artifacts(const TopologyGraph& g, const WorkloadSet& set) {
  std::vector<CheckResult> out;
  const std::string label = preset_label_for(g.params());
  const auto ref = reference_row(label);

  // Topology shape.
  {
    std::vector<std::string> problems;
    if (!g.is_connected()) problems.push_back("graph is disconnected");
    try {
      const TopologyGraph rebuilt = build_topology(g.params());
      if (rebuilt.num_servers() != g.num_servers() || rebuilt.links() != g.links()) {
        problems.push_back("links differ from a fresh build of " + rebuilt.name());
      }
    } catch (const std::exception& e) {
      problems.push_back(std::string("params do not build: ") + e.what());
    }
    out.push_back(from_problems("topology", problems,
                                std::to_string(g.num_nodes()) + " nodes, " +
                                    std::to_string(g.num_links()) + " links"));
  }
  if (ref) {
    const bool ok = g.num_nodes() == ref->nodes && g.num_links() == ref->edges;
    std::ostringstream d;
    d << label << " target (" << ref->nodes << "," << ref->edges << "), actual ("
      << g.num_nodes() << "," << g.num_links() << ")";
    out.push_back({"topology-counts", ok, d.str()});
  }

  // Ids and hop endpoints.
  {
    std::vector<std::string> problems;
    int expected = 0;
    for (const WorkloadTree& t : set.trees) {
      if (t.root < 0 || t.root >= g.num_servers()) {
        problems.push_back("tree root " + std::to_string(t.root) + " is not a server");
      }
      if (t.first_id != expected) problems.push_back("tree " + std::to_string(t.root) + " ids not dense");
      for (const Workload& w : t.workloads) {
        if (w.id != expected++) problems.push_back("workload id " + std::to_string(w.id) + " out of order");
      }
    }
    out.push_back(from_problems("workload-ids", problems, std::to_string(expected) + " workloads"));
  }
  {
    std::vector<std::string> problems;
    for (const WorkloadTree& t : set.trees) {
      for (const Workload& w : t.workloads) {
        const std::string id = "workload " + std::to_string(w.id);
        if (w.hop.link < 0 || w.hop.link >= g.num_links()) {
          problems.push_back(id + ": unknown link");
          continue;
        }
        if (g.tail_of(w.hop) != w.tail || g.head_of(w.hop) != w.head) {
          problems.push_back(id + ": tail/head do not match its link direction");
        }
        if (w.root != t.root) problems.push_back(id + ": root differs from its tree");
      }
    }
    out.push_back(from_problems("hop-endpoints", problems, "every hop matches its link"));
  }

  // Per-tree prefix graph.
  {
    std::vector<std::string> problems;
    for (const WorkloadTree& t : set.trees) {
      if (topological_order(t).size() != t.size()) {
        problems.push_back("tree " + std::to_string(t.root) + " has a prefix cycle or a foreign prefix");
      }
    }
    out.push_back(from_problems("acyclic", problems, "all trees have a topological order"));
  }
  {
    std::vector<std::string> problems;
    for (const WorkloadTree& t : set.trees) {
      try {
        if (!(merge_workloads(g, t) == t)) {
          problems.push_back("tree " + std::to_string(t.root) + " still has mergeable workloads");
        }
      } catch (const std::exception& e) {
        problems.push_back("tree " + std::to_string(t.root) + ": " + e.what());
      }
    }
    out.push_back(from_problems("merge-idempotent", problems, "merging again changes nothing"));
  }
  {
    std::vector<std::string> problems;
    for (const WorkloadTree& t : set.trees) {
      for (const Workload& w : t.workloads) {
        // Streams only combine on arrival at a server.
        if (w.head >= 0 && w.head < g.num_nodes() && !g.node(w.head).is_server() &&
            w.prefixes.size() > 1) {
          problems.push_back("workload " + std::to_string(w.id) + " combines streams into a switch");
        }
      }
    }
    out.push_back(from_problems("switch-forwarding", problems, "switches only forward"));
  }
  {
    std::vector<std::string> problems;
    std::set<int> roots;
    for (const WorkloadTree& t : set.trees) {
      if (!roots.insert(t.root).second) problems.push_back("duplicate tree for root " + std::to_string(t.root));
      std::set<int> delivered;
      for (const Workload& w : t.workloads) {
        if (w.head == t.root) delivered.insert(w.merged_from.begin(), w.merged_from.end());
      }
      for (int s = 0; s < g.num_servers(); ++s) {
        if (s != t.root && !delivered.count(s)) {
          problems.push_back("tree " + std::to_string(t.root) + " never delivers server " +
                             std::to_string(s));
        }
      }
    }
    if (static_cast<int>(roots.size()) != g.num_servers()) {
      problems.push_back(std::to_string(roots.size()) + " trees for " +
                         std::to_string(g.num_servers()) + " servers");
    }
    out.push_back(from_problems("coverage", problems, "every root receives every other server"));
  }

  // Count against the published figure: exact for DCell, reported otherwise.
  if (ref) {
    const bool hard = g.params().family == Family::kDCell;
    const bool match = set.total() == ref->workloads;
    std::ostringstream d;
    d << label << " target " << ref->workloads << ", actual " << set.total();
    if (!hard) d << " (informational)";
    out.push_back({"workload-count", match || !hard, d.str()});
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace allreduce

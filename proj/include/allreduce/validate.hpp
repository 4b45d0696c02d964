#ifndef ALLREDUCE_VALIDATE_HPP_
#define ALLREDUCE_VALIDATE_HPP_

#include <string>
#include <vector>

#include "allreduce/topology.hpp"
#include "allreduce/workload.hpp"

namespace allreduce {

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

// Re-checks a topology and a workload dump against the construction rules:
// graph shape, dense ids, hop endpoints, per-tree acyclicity, merge
// idempotence, switch behaviour, source coverage, and the workload count
// against the published figure for the preset (hard only for DCell).
std::vector<CheckResult> validate_artifacts(const TopologyGraph& g, const WorkloadSet& set);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace allreduce

#endif  // ALLREDUCE_VALIDATE_HPP_

#ifndef ALLREDUCE_REFERENCE_HPP_
#define ALLREDUCE_REFERENCE_HPP_

#include <optional>
#include <string>

#include "allreduce/topology.hpp"

namespace allreduce {

// Published figures for one benchmark preset (rounds are 10-seed means).
struct ReferenceRow {
  std::string label;
  int nodes = 0;
  int edges = 0;
  int workloads = 0;
  double ps_rounds = 0.0;
  double ring_rounds = 0.0;
  double rl_rounds = 0.0;
};

// Row for a preset label (B1..J3), if one exists.
std::optional<ReferenceRow> reference_row(const std::string& label);

// Label of the preset whose params match, or empty.
std::string preset_label_for(const TopologyParams& params);

}  // namespace allreduce

#endif  // ALLREDUCE_REFERENCE_HPP_

#ifndef ALLREDUCE_IO_HPP_
#define ALLREDUCE_IO_HPP_

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "allreduce/rl/trainer.hpp"
#include "allreduce/simulator.hpp"
#include "allreduce/topology.hpp"
#include "allreduce/workload.hpp"

// JSON documents exchanged between commands. Every document carries a
// "format" name and an integer "version"; readers reject anything else.
namespace allreduce::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kTopologyVersion = 1;
inline constexpr int kWorkloadVersion = 1;
inline constexpr int kRoundLogVersion = 1;
inline constexpr int kCheckpointVersion = 1;

std::string topology_to_json(const TopologyGraph& g, const std::string& preset = "");
// Rebuilds the graph from the listed nodes and links (not from the params).
TopologyGraph topology_from_json(const std::string& text);

std::string workloads_to_json(const TopologyGraph& g, const WorkloadSet& set);
// Trees are regrouped by root in order of first appearance.
WorkloadSet workloads_from_json(const std::string& text);

// One header line, then one line per round: {"round", "selected", "n_on"}.
void write_round_log(std::ostream& out, const SimState& state, const std::string& topology,
                     const std::string& scheduler, std::uint64_t seed);

std::string topology_params_to_json(const TopologyParams& p);
TopologyParams topology_params_from_json(const std::string& text);
std::string train_config_to_json(const rl::TrainConfig& c);
// Missing keys keep their defaults; unknown keys are an error.
rl::TrainConfig train_config_from_json(const std::string& text);

struct Checkpoint {
  TopologyParams topology;
  rl::TrainConfig config;
  int iteration = 0;
  rl::FtsPolicy fts;
  rl::WsPolicy ws;
  std::string rng_state;
};

std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& text);
Checkpoint make_checkpoint(const rl::Trainer& trainer, const TopologyParams& topology,
                           int iteration);
// Trainer for the checkpoint's topology and config carrying its weights and RNG state.
rl::Trainer restore_trainer(const Checkpoint& c);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace allreduce::io

#endif  // ALLREDUCE_IO_HPP_

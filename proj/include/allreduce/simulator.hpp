#ifndef ALLREDUCE_SIMULATOR_HPP_
#define ALLREDUCE_SIMULATOR_HPP_

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "allreduce/topology.hpp"
#include "allreduce/workload.hpp"

namespace allreduce {

// Abstract cost model. One round moves one gradient piece over every busy
// link direction and lasts piece_time() = full_time / pieces.
struct SimConfig {
  double gradient_size = 1.0;  // P
  int num_servers = 0;         // N
  int pieces = 0;              // k
  double full_time = 1.0;      // T_F
  int physical_links = 0;      // N_phy

  double piece_time() const { return full_time / pieces; }  // T_S

  // Defaults to one piece per root tree (k = N).
  static SimConfig for_topology(const TopologyGraph& g, int pieces = 0,
                                double full_time = 1.0);
  void validate() const;
};

enum class WorkloadStatus : std::uint8_t { kBlocked, kReady, kDone };

// Flattened, immutable view of a workload set shared by every state copy.
// Workload ids must be dense 0..W-1 in storage order; `group` is the tree
// (or logical step) each workload belongs to.
class SimInstance {
 public:
  SimInstance(std::vector<Workload> workloads, std::vector<int> group, int num_groups,
              int num_links);
  static std::shared_ptr<const SimInstance> from_set(const TopologyGraph& g,
                                                     const WorkloadSet& set);

  int num_workloads() const { return static_cast<int>(workloads_.size()); }
  int num_groups() const { return num_groups_; }
  int num_links() const { return num_links_; }
  int num_slots() const { return 2 * num_links_; }

  const Workload& workload(int id) const { return workloads_.at(id); }
  const std::vector<Workload>& workloads() const { return workloads_; }
  int group_of(int id) const { return group_[id]; }
  int group_size(int g) const { return group_size_[g]; }
  const std::vector<int>& successors(int id) const { return successors_[id]; }
  // Workloads on the longest successor chain starting at id, id included.
  int chain_depth(int id) const { return chain_depth_[id]; }
  int max_chain_depth() const { return max_chain_depth_; }
  int max_successors() const { return max_successors_; }

 private:
  std::vector<Workload> workloads_;
  std::vector<int> group_;
  std::vector<int> group_size_;
  int num_groups_ = 0;
  int num_links_ = 0;
  std::vector<std::vector<int>> successors_;
  std::vector<int> chain_depth_;
  int max_chain_depth_ = 0;
  int max_successors_ = 0;
};

bool conflicts(const Workload& a, const Workload& b);

class RoundError : public std::runtime_error {
 public:
  enum class Kind { kNotReady, kConflict, kUnknownId };
  RoundError(Kind kind, int a, int b, const std::string& what)
      : std::runtime_error(what), kind(kind), first(a), second(b) {}
  Kind kind;
  int first;
  int second;
};

struct Metrics {
  int total_rounds = 0;
  double wall_clock = 0.0;
  std::vector<double> utilization_links;  // N_on / N_phy, per round
  std::vector<double> utilization_slots;  // N_on / (2 N_phy), per round
  double mean_utilization_links = 0.0;
  double mean_utilization_slots = 0.0;
  int workloads = 0;
  int sent = 0;
  bool complete = false;  // false when collected before the run finished
};

// Per-round execution state. Copies are independent.
class SimState {
 public:
  SimState(std::shared_ptr<const SimInstance> instance, SimConfig config);

  const SimInstance& instance() const { return *instance_; }
  std::shared_ptr<const SimInstance> shared_instance() const { return instance_; }
  const SimConfig& config() const { return config_; }

  int round() const { return round_; }
  WorkloadStatus status(int id) const { return status_.at(id); }
  // Ready ids in ascending order.
  const std::vector<int>& ready() const { return ready_; }
  int done_count() const { return done_count_; }
  int remaining_in_group(int g) const { return remaining_in_group_[g]; }
  bool is_done() const { return done_count_ == instance_->num_workloads(); }

  // Selected ids of every committed round, in round order.
  const std::vector<std::vector<int>>& log() const { return log_; }
  const std::vector<int>& sent_per_round() const { return sent_per_round_; }

  // Number of blocked successors that `id` alone would make ready.
  int unblock_count(int id) const;

  // Commits one round. The whole round is rejected when any id is unknown,
  // not ready, repeated, or shares a (link, direction) with another.
  void send_round(std::span<const int> selected);

 private:
  std::shared_ptr<const SimInstance> instance_;
  SimConfig config_;
  int round_ = 0;
  int done_count_ = 0;
  std::vector<WorkloadStatus> status_;
  std::vector<int> pending_prefixes_;
  std::vector<int> ready_;
  std::vector<int> remaining_in_group_;
  std::vector<std::vector<int>> log_;
  std::vector<int> sent_per_round_;
};

SimState reset(std::shared_ptr<const SimInstance> instance, const SimConfig& config);
std::vector<int> ready_workloads(const SimState& state);
bool is_done(const SimState& state);
Metrics collect_metrics(const SimState& state);

// Lower bound on rounds for any scheduler: max(ceil(W / 2 N_phy), longest chain).
int round_lower_bound(const SimInstance& instance);

// Replays the log; true when no workload ran twice or before its prefixes
// and no round used a (link, direction) twice. A finished state must also
// have run every workload.
bool replay_is_valid(const SimState& state);

}  // namespace allreduce

#endif  // ALLREDUCE_SIMULATOR_HPP_

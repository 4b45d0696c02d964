#ifndef ALLREDUCE_ENVS_HPP_
#define ALLREDUCE_ENVS_HPP_

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "allreduce/rng.hpp"
#include "allreduce/simulator.hpp"

namespace allreduce {

struct EnvConfig {
  double tree_coefficient = 0.1;  // weight of the trees-selected term
  double done_bonus = 10.0;
  int max_rounds = 0;  // episode cap; 0 disables truncation
};

// Dense term: sent/total + coef * selected/total_trees.
double fts_dense_reward(int sent, int total, int trees_selected, int total_trees,
                        double tree_coefficient = 0.1);
// Stage term: done_bonus when done, otherwise -total_trees/total.
double fts_stage_reward(int total, int total_trees, bool done, double done_bonus = 10.0);
double fts_reward(int sent, int total, int trees_selected, int total_trees, bool done,
                  double tree_coefficient = 0.1, double done_bonus = 10.0);
// Per-pick reward of the workload-scheduling agent.
double ws_pick_reward(int total);

// ---------------------------------------------------------------------------
// Flow-tree selection (one step per round)

struct FtsAction {
  std::vector<std::uint8_t> trees;  // multi-hot, one entry per tree

  int count() const;
  static FtsAction all(int num_trees) {
    return {std::vector<std::uint8_t>(num_trees, 1)};
  }
  static FtsAction none(int num_trees) {
    return {std::vector<std::uint8_t>(num_trees, 0)};
  }
};

struct FtsObservation {
  std::vector<double> remaining;    // per tree, unsent fraction
  std::vector<double> tree_done;    // per tree, 1 when finished
  std::vector<double> pressure;     // per link, ready demand / max demand
  std::vector<double> last_action;  // echo of the previous multi-hot action
  double progress = 0.0;            // sent / total

  std::vector<double> flatten() const;
  static int dimension(int num_trees, int num_links) {
    return 3 * num_trees + num_links + 1;
  }
};

// ---------------------------------------------------------------------------
// Workload scheduling (one step per pick inside a round)

inline constexpr int kWsRowFeatures = 5;
inline constexpr int kWsSummaryFeatures = kWsRowFeatures + 3;

struct WsCandidate {
  int workload = 0;
  int tree = 0;
  int link = 0;
  int direction = 0;
  int unblocks = 0;     // dependents this pick would make ready
  int chain_depth = 0;  // workloads left on the longest chain through it
};

struct WsObservation {
  std::vector<WsCandidate> candidates;  // unselected pool workloads, ascending id
  std::vector<std::uint8_t> mask;       // 1 where selectable (no conflict)
  std::vector<std::uint8_t> occupancy;  // per (link, direction) slot this round
  std::vector<double> rows;             // candidates.size() x kWsRowFeatures
  std::vector<double> summary;          // kWsSummaryFeatures
  int pool_size = 0;
  int selected = 0;

  int num_candidates() const { return static_cast<int>(candidates.size()); }
  int num_selectable() const;
};

struct WsAction {
  static constexpr int kTerminate = -1;
  int index = kTerminate;

  bool is_terminate() const { return index == kTerminate; }
  static WsAction terminate() { return {kTerminate}; }
  static WsAction pick(int i) { return {i}; }
};

class IllegalAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WsStepResult {
  double reward = 0.0;
  bool done = false;
};

// One round's sequential selection over a pool of ready workloads.
class WsRound {
 public:
  WsRound(const SimState& state, std::vector<int> pool);

  const WsObservation& observation() const { return obs_; }
  WsStepResult step(WsAction action);
  bool done() const { return done_; }
  const std::vector<int>& selected() const { return selected_; }
  const std::vector<int>& pool() const { return pool_; }

 private:
  void refresh();

  const SimState* state_;
  std::vector<int> pool_;
  std::vector<int> selected_;
  std::vector<std::uint8_t> occupancy_;
  WsObservation obs_;
  bool done_ = false;
};

class WsAgent {
 public:
  virtual ~WsAgent() = default;
  virtual WsAction act(const WsObservation& obs, Rng& rng) = 0;
};

// Always takes the first selectable candidate, so every round is maximal.
class FirstFitWsAgent : public WsAgent {
 public:
  WsAction act(const WsObservation& obs, Rng& rng) override;
};

struct FtsStepInfo {
  int round = 0;  // index of the committed round
  int n_on = 0;
  std::vector<int> committed;
  bool truncated = false;
};

struct FtsStepResult {
  FtsObservation observation;
  double reward = 0.0;
  bool done = false;
  FtsStepInfo info;
};

class FtsEnv {
 public:
  FtsEnv(std::shared_ptr<const SimInstance> instance, SimConfig sim_config,
         EnvConfig env_config);

  FtsObservation reset();
  FtsObservation observe() const;

  // Ready workloads of the selected trees.
  std::vector<int> pool_for(const FtsAction& action) const;
  WsRound begin_round(const FtsAction& action) const;
  // Commits the round's selection and returns the upper-level transition.
  FtsStepResult commit_round(const FtsAction& action, const WsRound& round);
  // Full step: runs the agent over the round's pool, then commits.
  FtsStepResult step(const FtsAction& action, WsAgent& agent, Rng& rng);

  bool done() const { return done_; }
  const SimState& state() const { return state_; }
  int num_trees() const { return instance_->num_groups(); }
  int num_links() const { return instance_->num_links(); }
  int observation_dimension() const {
    return FtsObservation::dimension(num_trees(), num_links());
  }
  const EnvConfig& config() const { return env_config_; }

 private:
  void check_action(const FtsAction& action) const;

  std::shared_ptr<const SimInstance> instance_;
  SimConfig sim_config_;
  EnvConfig env_config_;
  SimState state_;
  std::vector<double> last_action_;
  bool done_ = false;
};

}  // namespace allreduce

#endif  // ALLREDUCE_ENVS_HPP_

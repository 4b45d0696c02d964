#ifndef ALLREDUCE_RL_TRAINER_HPP_
#define ALLREDUCE_RL_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "allreduce/envs.hpp"
#include "allreduce/rl/mlp.hpp"
#include "allreduce/rl/policies.hpp"
#include "allreduce/topology.hpp"

namespace allreduce::rl {

struct TrainConfig {
  int outer_iterations = 10;  // I
  int fts_phases = 5;         // J
  int ws_phases = 5;          // K
  double gamma = 0.99;
  double learning_rate = 3e-4;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int rollouts = 16;  // episodes collected per phase
  int epochs = 4;
  int minibatches = 4;
  int hidden = kDefaultHidden;
  double terminate_logit = -2.0;  // initial TERMINATE logit of the WS policy
  int episode_cap_factor = 4;     // episode cap = factor * greedy schedule rounds
  int workers = 1;                // rollout threads
  // After training, restore the iterate with the fewest evaluated rounds
  // (ties keep the earlier one) instead of the last.
  bool keep_best = true;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  LossCoefficients loss() const { return {clip, entropy_coef, value_coef}; }
};

enum class Flavor { kFts, kWs };
std::string to_string(Flavor f);

class FlavorMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FtsRecord {
  std::vector<double> obs;
  std::vector<double> next_obs;
  FtsAction action;
  double reward = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  bool done = false;
};

struct WsRecord {
  WsObservation obs;
  WsAction action;
  double reward = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  bool done = false;  // last record of the episode
  // Extra discount steps after this record: each round close counts as one
  // step, so finishing in fewer rounds raises the return of earlier picks.
  int delay = 0;
};

// Holds records of a single flavor; adding or reading the other flavor throws.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(Flavor flavor) : flavor_(flavor) {}

  Flavor flavor() const { return flavor_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  void add(FtsRecord record);
  void add(WsRecord record);
  const std::vector<FtsRecord>& fts() const;
  const std::vector<WsRecord>& ws() const;

  // Discounted returns per record and advantages (return - value), the
  // latter normalized to zero mean and unit variance over the buffer.
  void compute_returns(double gamma);
  const std::vector<double>& returns() const { return returns_; }
  const std::vector<double>& advantages() const { return advantages_; }

 private:
  void require(Flavor f) const;

  Flavor flavor_;
  std::vector<FtsRecord> fts_;
  std::vector<WsRecord> ws_;
  std::vector<double> returns_;
  std::vector<double> advantages_;
};

struct UpdateStats {
  double loss = 0.0;  // mean over the last epoch
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // before clipping, last minibatch
};

// Clipped policy-gradient updates over a filled buffer; returns and
// advantages must already be computed. Throws FlavorMismatch on a buffer of
// the other flavor.
UpdateStats update_fts(FtsPolicy& policy, Adam& optimizer, const TrajectoryBuffer& buffer,
                       const TrainConfig& config, Rng& rng);
UpdateStats update_ws(WsPolicy& policy, Adam& optimizer, const TrajectoryBuffer& buffer,
                      const TrainConfig& config, Rng& rng);

struct EpisodeResult {
  int rounds = 0;
  bool complete = false;
  double fts_return = 0.0;  // undiscounted
  double ws_return = 0.0;
  std::vector<FtsRecord> fts;
  std::vector<WsRecord> ws;
};

// Runs one episode from reset. sample=false takes mode actions. Records are
// kept only for the requested flavor.
EpisodeResult run_episode(FtsEnv& env, const FtsPolicy& fts, const WsPolicy& ws, Rng& rng,
                          bool sample, Flavor record);

struct PhaseStats {
  Flavor flavor = Flavor::kFts;
  bool evaluation = false;  // end-of-iteration evaluation row, no update
  int iteration = 0;  // outer iteration, from 1
  int phase = 0;      // index within the flavor's inner loop, from 1
  double mean_rounds = 0.0;
  double mean_return = 0.0;
  double loss = 0.0;
  std::uint64_t frozen_hash = 0;
};

struct EvalSummary {
  double mean_rounds = 0.0;
  double std_rounds = 0.0;  // population std
  int completed = 0;
  std::vector<int> rounds;
};

// Owns both policies, their optimizers, and the simulation instance for one
// topology. Every random draw derives from config.seed.
class Trainer {
 public:
  Trainer(const TopologyGraph& graph, TrainConfig config);
  Trainer(std::shared_ptr<const SimInstance> instance, SimConfig sim_config, TrainConfig config);

  // Collects config.rollouts episodes with a params snapshot, then updates
  // the learner. The other policy is frozen; its hash is checked afterwards.
  PhaseStats train_phase(Flavor learner);

  // I outer iterations of J FTS phases then K WS phases, each followed by a
  // mode-action evaluation row. on_iteration runs after each outer
  // iteration (checkpoint hook).
  std::vector<PhaseStats> train(const std::function<void(int)>& on_iteration = {});

  EvalSummary evaluate(const std::vector<std::uint64_t>& seeds) const;

  const FtsPolicy& fts_policy() const { return fts_; }
  const WsPolicy& ws_policy() const { return ws_; }
  FtsPolicy& fts_policy() { return fts_; }
  WsPolicy& ws_policy() { return ws_; }
  const TrainConfig& config() const { return config_; }
  const SimInstance& instance() const { return *instance_; }
  std::shared_ptr<const SimInstance> shared_instance() const { return instance_; }
  const SimConfig& sim_config() const { return sim_config_; }
  const EnvConfig& env_config() const { return env_config_; }
  const Rng& rng() const { return rng_; }
  void set_rng(const Rng& rng) { rng_ = rng; }
  int phases_run() const { return phases_run_; }
  // Evaluated rounds of the iterate train() kept; 0 before training.
  double best_rounds() const { return best_rounds_; }

 private:
  void init();
  std::vector<EpisodeResult> collect(Flavor record, int phase_id) const;

  std::shared_ptr<const SimInstance> instance_;
  SimConfig sim_config_;
  EnvConfig env_config_;
  TrainConfig config_;
  FtsPolicy fts_;
  WsPolicy ws_;
  Adam fts_opt_;
  Adam ws_opt_;
  Rng rng_;
  int phases_run_ = 0;
  int iteration_ = 0;
  double best_rounds_ = 0.0;
};

}  // namespace allreduce::rl

#endif  // ALLREDUCE_RL_TRAINER_HPP_

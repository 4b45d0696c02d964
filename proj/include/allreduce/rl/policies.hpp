#ifndef ALLREDUCE_RL_POLICIES_HPP_
#define ALLREDUCE_RL_POLICIES_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "allreduce/envs.hpp"
#include "allreduce/rl/mlp.hpp"

namespace allreduce::rl {

inline constexpr int kDefaultHidden = 128;

struct LossCoefficients {
  double clip = 0.2;
  double entropy = 0.01;
  double value = 0.5;
};

// Result of one clipped policy-gradient sample, already added to the gradient.
struct SampleLoss {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total() const { return policy + value; }
};

std::uint64_t hash_params(std::span<const double> params);

// Upper-level policy: one independent Bernoulli per flow tree from sigmoid
// logits, plus a state-value head. Parameters are [actor | critic].
class FtsPolicy {
 public:
  FtsPolicy() = default;
  FtsPolicy(int observation_size, int num_trees, int hidden, Rng& rng);

  struct Decision {
    FtsAction action;
    double log_prob = 0.0;
    double value = 0.0;
  };

  int observation_size() const { return actor_.input_size(); }
  int num_trees() const { return actor_.output_size(); }
  int hidden() const { return actor_.sizes()[1]; }

  Vector logits(std::span<const double> obs) const;
  double value(std::span<const double> obs) const;
  Decision act(std::span<const double> obs, Rng& rng) const;
  // Selects tree i iff its logit is positive.
  FtsAction mode(std::span<const double> obs) const;
  double log_prob(std::span<const double> obs, const FtsAction& action) const;
  // Adds d log_prob / d params to grads.
  void add_log_prob_grad(std::span<const double> obs, const FtsAction& action,
                         std::span<double> grads) const;
  // Adds weight * d(clipped surrogate + value loss - entropy bonus)/d params.
  SampleLoss add_loss_grad(std::span<const double> obs, const FtsAction& action,
                           double old_log_prob, double advantage, double ret,
                           const LossCoefficients& coeffs, double weight,
                           std::span<double> grads) const;

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t num_params() const { return params_.size(); }
  std::uint64_t hash() const { return hash_params(params_); }

 private:
  std::span<const double> actor_params() const;
  std::span<const double> critic_params() const;
  void check_obs(std::span<const double> obs) const;

  Mlp actor_;
  Mlp critic_;
  std::vector<double> params_;
};

// Lower-level policy: a scorer shared across candidate rows, a learned
// TERMINATE logit, and a value head over the observation summary.
// Parameters are [scorer | terminate | critic]. Action index C (the number
// of candidates) stands for TERMINATE in probability vectors.
class WsPolicy {
 public:
  WsPolicy() = default;
  WsPolicy(int hidden, Rng& rng, double terminate_logit = 0.0);

  struct Decision {
    WsAction action;
    double log_prob = 0.0;
    double value = 0.0;
  };

  int hidden() const { return scorer_.sizes()[1]; }

  // Length C + 1; masked candidates get -infinity.
  Vector logits(const WsObservation& obs) const;
  Vector probabilities(const WsObservation& obs) const;
  double value(const WsObservation& obs) const;
  Decision act(const WsObservation& obs, Rng& rng) const;
  // Highest logit among legal actions; ties go to the lowest index.
  WsAction mode(const WsObservation& obs) const;
  double log_prob(const WsObservation& obs, WsAction action) const;
  void add_log_prob_grad(const WsObservation& obs, WsAction action,
                         std::span<double> grads) const;
  SampleLoss add_loss_grad(const WsObservation& obs, WsAction action, double old_log_prob,
                           double advantage, double ret, const LossCoefficients& coeffs,
                           double weight, std::span<double> grads) const;

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t num_params() const { return params_.size(); }
  std::uint64_t hash() const { return hash_params(params_); }

 private:
  std::span<const double> scorer_params() const;
  std::span<const double> critic_params() const;
  std::size_t terminate_index() const { return scorer_.num_params(); }
  void check_obs(const WsObservation& obs) const;
  int action_slot(const WsObservation& obs, WsAction action) const;

  Mlp scorer_;
  Mlp critic_;
  std::vector<double> params_;
};

}  // namespace allreduce::rl

#endif  // ALLREDUCE_RL_POLICIES_HPP_

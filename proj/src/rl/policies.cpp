#include "allreduce/rl/policies.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace allreduce::rl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix row_of(std::span<const double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

// Gradient multiplier of the clipped surrogate with respect to log_prob.
double surrogate_grad(double ratio, double advantage, double clip) {
  const bool active = (advantage >= 0.0 && ratio < 1.0 + clip) ||
                      (advantage < 0.0 && ratio > 1.0 - clip);
  return active ? -advantage * ratio : 0.0;
}

double surrogate_loss(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return -std::min(ratio * advantage, clipped * advantage);
}

}  // namespace

std::uint64_t hash_params(std::span<const double> params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double p : params) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &p, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

FtsPolicy::FtsPolicy(int observation_size, int num_trees, int hidden, Rng& rng)
    : actor_({observation_size, hidden, hidden, num_trees}),
      critic_({observation_size, hidden, hidden, 1}),
      params_(actor_.num_params() + critic_.num_params()) {
  actor_.init(std::span<double>(params_).first(actor_.num_params()), rng, 0.01);
  critic_.init(std::span<double>(params_).subspan(actor_.num_params()), rng, 1.0);
}

std::span<const double> FtsPolicy::actor_params() const {
  return std::span<const double>(params_).first(actor_.num_params());
}

std::span<const double> FtsPolicy::critic_params() const {
  return std::span<const double>(params_).subspan(actor_.num_params());
}

void FtsPolicy::check_obs(std::span<const double> obs) const {
  if (static_cast<int>(obs.size()) != observation_size()) {
    throw std::invalid_argument("flow-tree observation has size " + std::to_string(obs.size()) +
                                ", policy expects " + std::to_string(observation_size()));
  }
}

Vector FtsPolicy::logits(std::span<const double> obs) const {
  check_obs(obs);
  return actor_.forward(actor_params(), row_of(obs)).row(0).transpose();
}

double FtsPolicy::value(std::span<const double> obs) const {
  check_obs(obs);
  return critic_.forward(critic_params(), row_of(obs))(0, 0);
}

FtsPolicy::Decision FtsPolicy::act(std::span<const double> obs, Rng& rng) const {
  const Vector z = logits(obs);
  Decision d;
  d.action.trees.resize(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const bool on = uniform01(rng) < sigmoid(z[i]);
    d.action.trees[i] = on ? 1 : 0;
    d.log_prob += on ? -softplus(-z[i]) : -softplus(z[i]);
  }
  d.value = value(obs);
  return d;
}

FtsAction FtsPolicy::mode(std::span<const double> obs) const {
  const Vector z = logits(obs);
  FtsAction a;
  a.trees.resize(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) a.trees[i] = z[i] > 0.0 ? 1 : 0;
  return a;
}

double FtsPolicy::log_prob(std::span<const double> obs, const FtsAction& action) const {
  const Vector z = logits(obs);
  if (static_cast<Eigen::Index>(action.trees.size()) != z.size()) {
    throw std::invalid_argument("flow-tree action length mismatch");
  }
  double lp = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    lp += action.trees[i] ? -softplus(-z[i]) : -softplus(z[i]);
  }
  return lp;
}

void FtsPolicy::add_log_prob_grad(std::span<const double> obs, const FtsAction& action,
                                  std::span<double> grads) const {
  check_obs(obs);
  Mlp::Cache cache;
  const Matrix z = actor_.forward(actor_params(), row_of(obs), &cache);
  Matrix dz(1, z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    dz(0, i) = (action.trees.at(i) ? 1.0 : 0.0) - sigmoid(z(0, i));
  }
  actor_.backward(actor_params(), cache, dz, grads.first(actor_.num_params()));
}

SampleLoss FtsPolicy::add_loss_grad(std::span<const double> obs, const FtsAction& action,
                                    double old_log_prob, double advantage, double ret,
                                    const LossCoefficients& coeffs, double weight,
                                    std::span<double> grads) const {
  check_obs(obs);
  if (static_cast<int>(action.trees.size()) != num_trees()) {
    throw std::invalid_argument("flow-tree action length mismatch");
  }
  SampleLoss loss;
  Mlp::Cache actor_cache;
  const Matrix z = actor_.forward(actor_params(), row_of(obs), &actor_cache);
  double lp = 0.0, entropy = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const double zi = z(0, i), p = sigmoid(zi);
    lp += action.trees[i] ? -softplus(-zi) : -softplus(zi);
    entropy += p * softplus(-zi) + (1.0 - p) * softplus(zi);
  }
  const double ratio = std::exp(lp - old_log_prob);
  const double g_lp = surrogate_grad(ratio, advantage, coeffs.clip);
  loss.policy = weight * (surrogate_loss(ratio, advantage, coeffs.clip) - coeffs.entropy * entropy);
  loss.entropy = entropy;

  Matrix dz(1, z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const double zi = z(0, i), p = sigmoid(zi);
    const double dlp = (action.trees[i] ? 1.0 : 0.0) - p;
    const double dent = -zi * p * (1.0 - p);
    dz(0, i) = weight * (g_lp * dlp - coeffs.entropy * dent);
  }
  actor_.backward(actor_params(), actor_cache, dz, grads.first(actor_.num_params()));

  Mlp::Cache critic_cache;
  const double v = critic_.forward(critic_params(), row_of(obs), &critic_cache)(0, 0);
  loss.value = weight * coeffs.value * 0.5 * (v - ret) * (v - ret);
  Matrix dv(1, 1);
  dv(0, 0) = weight * coeffs.value * (v - ret);
  critic_.backward(critic_params(), critic_cache, dv, grads.subspan(actor_.num_params()));
  return loss;
}

// ---------------------------------------------------------------------------

WsPolicy::WsPolicy(int hidden, Rng& rng, double terminate_logit)
    : scorer_({kWsRowFeatures, hidden, hidden, 1}),
      critic_({kWsSummaryFeatures, hidden, hidden, 1}),
      params_(scorer_.num_params() + 1 + critic_.num_params()) {
  auto all = std::span<double>(params_);
  scorer_.init(all.first(scorer_.num_params()), rng, 0.01);
  params_[terminate_index()] = terminate_logit;
  critic_.init(all.subspan(scorer_.num_params() + 1), rng, 1.0);
}

std::span<const double> WsPolicy::scorer_params() const {
  return std::span<const double>(params_).first(scorer_.num_params());
}

std::span<const double> WsPolicy::critic_params() const {
  return std::span<const double>(params_).subspan(scorer_.num_params() + 1);
}

void WsPolicy::check_obs(const WsObservation& obs) const {
  const auto c = static_cast<std::size_t>(obs.num_candidates());
  if (obs.mask.size() != c || obs.rows.size() != c * kWsRowFeatures ||
      obs.summary.size() != static_cast<std::size_t>(kWsSummaryFeatures)) {
    throw std::invalid_argument("malformed workload-scheduling observation");
  }
}

namespace {

Matrix rows_of(const WsObservation& obs) {
  Matrix m(obs.num_candidates(), kWsRowFeatures);
  for (int r = 0; r < obs.num_candidates(); ++r) {
    for (int f = 0; f < kWsRowFeatures; ++f) m(r, f) = obs.rows[r * kWsRowFeatures + f];
  }
  return m;
}

// Softmax restricted to finite logits.
Vector masked_softmax(const Vector& logits) {
  const double peak = logits.maxCoeff();
  Vector p(logits.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    p[i] = std::isfinite(logits[i]) ? std::exp(logits[i] - peak) : 0.0;
    total += p[i];
  }
  return p / total;
}

}  // namespace

Vector WsPolicy::logits(const WsObservation& obs) const {
  check_obs(obs);
  const int c = obs.num_candidates();
  Vector out(c + 1);
  if (c > 0) {
    const Matrix scores = scorer_.forward(scorer_params(), rows_of(obs));
    for (int i = 0; i < c; ++i) out[i] = obs.mask[i] ? scores(i, 0) : kNegInf;
  }
  out[c] = params_[terminate_index()];
  return out;
}

Vector WsPolicy::probabilities(const WsObservation& obs) const {
  return masked_softmax(logits(obs));
}

double WsPolicy::value(const WsObservation& obs) const {
  check_obs(obs);
  return critic_.forward(critic_params(), row_of(obs.summary))(0, 0);
}

int WsPolicy::action_slot(const WsObservation& obs, WsAction action) const {
  if (action.is_terminate()) return obs.num_candidates();
  if (action.index < 0 || action.index >= obs.num_candidates() || !obs.mask[action.index]) {
    throw IllegalAction("action is masked or out of range");
  }
  return action.index;
}

WsPolicy::Decision WsPolicy::act(const WsObservation& obs, Rng& rng) const {
  const Vector p = probabilities(obs);
  const double u = uniform01(rng);
  double acc = 0.0;
  Eigen::Index pick = p.size() - 1;  // TERMINATE absorbs rounding
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  Decision d;
  d.action = pick == obs.num_candidates() ? WsAction::terminate()
                                          : WsAction::pick(static_cast<int>(pick));
  d.log_prob = std::log(p[pick]);
  d.value = value(obs);
  return d;
}

WsAction WsPolicy::mode(const WsObservation& obs) const {
  const Vector z = logits(obs);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best == obs.num_candidates() ? WsAction::terminate()
                                      : WsAction::pick(static_cast<int>(best));
}

double WsPolicy::log_prob(const WsObservation& obs, WsAction action) const {
  const Vector p = probabilities(obs);
  return std::log(p[action_slot(obs, action)]);
}

void WsPolicy::add_log_prob_grad(const WsObservation& obs, WsAction action,
                                 std::span<double> grads) const {
  check_obs(obs);
  const int c = obs.num_candidates();
  const int a = action_slot(obs, action);
  Mlp::Cache cache;
  Vector z(c + 1);
  if (c > 0) {
    const Matrix scores = scorer_.forward(scorer_params(), rows_of(obs), &cache);
    for (int i = 0; i < c; ++i) z[i] = obs.mask[i] ? scores(i, 0) : kNegInf;
  }
  z[c] = params_[terminate_index()];
  const Vector p = masked_softmax(z);
  if (c > 0) {
    Matrix dscore(c, 1);
    for (int i = 0; i < c; ++i) dscore(i, 0) = obs.mask[i] ? (i == a) - p[i] : 0.0;
    scorer_.backward(scorer_params(), cache, dscore, grads.first(scorer_.num_params()));
  }
  grads[terminate_index()] += (a == c) - p[c];
}

SampleLoss WsPolicy::add_loss_grad(const WsObservation& obs, WsAction action,
                                   double old_log_prob, double advantage, double ret,
                                   const LossCoefficients& coeffs, double weight,
                                   std::span<double> grads) const {
  check_obs(obs);
  const int c = obs.num_candidates();
  const int a = action_slot(obs, action);
  Mlp::Cache cache;
  Vector z(c + 1);
  if (c > 0) {
    const Matrix scores = scorer_.forward(scorer_params(), rows_of(obs), &cache);
    for (int i = 0; i < c; ++i) z[i] = obs.mask[i] ? scores(i, 0) : kNegInf;
  }
  z[c] = params_[terminate_index()];
  const Vector p = masked_softmax(z);

  double entropy = 0.0;
  for (Eigen::Index i = 0; i <= c; ++i) {
    if (p[i] > 0.0) entropy -= p[i] * std::log(p[i]);
  }
  const double lp = std::log(p[a]);
  const double ratio = std::exp(lp - old_log_prob);
  const double g_lp = surrogate_grad(ratio, advantage, coeffs.clip);
  SampleLoss loss;
  loss.policy = weight * (surrogate_loss(ratio, advantage, coeffs.clip) - coeffs.entropy * entropy);
  loss.entropy = entropy;

  // d/dz_j: log-prob term (1[j=a] - p_j); entropy term -p_j (log p_j + H).
  Vector dz = Vector::Zero(c + 1);
  for (int j = 0; j <= c; ++j) {
    if (p[j] <= 0.0) continue;
    const double dlp = (j == a) - p[j];
    const double dent = -p[j] * (std::log(p[j]) + entropy);
    dz[j] = weight * (g_lp * dlp - coeffs.entropy * dent);
  }
  if (c > 0) {
    Matrix dscore(c, 1);
    for (int i = 0; i < c; ++i) dscore(i, 0) = dz[i];
    scorer_.backward(scorer_params(), cache, dscore, grads.first(scorer_.num_params()));
  }
  grads[terminate_index()] += dz[c];

  Mlp::Cache critic_cache;
  const double v = critic_.forward(critic_params(), row_of(obs.summary), &critic_cache)(0, 0);
  loss.value = weight * coeffs.value * 0.5 * (v - ret) * (v - ret);
  Matrix dv(1, 1);
  dv(0, 0) = weight * coeffs.value * (v - ret);
  critic_.backward(critic_params(), critic_cache, dv,
                   grads.subspan(scorer_.num_params() + 1));
  return loss;
}

}  // namespace allreduce::rl

#include "allreduce/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "allreduce/baselines.hpp"

namespace allreduce::rl {

namespace {

void require_field(bool ok, const char* field, const std::string& rule) {
  if (!ok) throw std::invalid_argument(std::string("train config: ") + field + " " + rule);
}

// Shuffled record indices split into at most `parts` nearly equal batches.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, int parts, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t count = std::min<std::size_t>(std::max(parts, 1), std::max<std::size_t>(n, 1));
  std::vector<std::vector<std::size_t>> out(count);
  for (std::size_t i = 0; i < n; ++i) out[i % count].push_back(order[i]);
  return out;
}

template <class Policy, class Records, class Eval>
UpdateStats run_updates(Policy& policy, Adam& optimizer, const TrajectoryBuffer& buffer,
                        const Records& records, const TrainConfig& config, Rng& rng, Eval eval) {
  UpdateStats stats;
  if (records.empty()) return stats;
  if (buffer.returns().size() != records.size()) {
    throw std::logic_error("compute_returns must run before an update");
  }
  const LossCoefficients coeffs = config.loss();
  std::vector<double> grads(policy.num_params());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    UpdateStats epoch_stats;
    const auto batches = minibatches(records.size(), config.minibatches, rng);
    for (const auto& batch : batches) {
      std::fill(grads.begin(), grads.end(), 0.0);
      const double weight = 1.0 / static_cast<double>(batch.size());
      for (std::size_t i : batch) {
        const SampleLoss s = eval(records[i], buffer.advantages()[i], buffer.returns()[i], coeffs,
                                  weight, grads);
        epoch_stats.policy_loss += s.policy;
        epoch_stats.value_loss += s.value;
        epoch_stats.entropy += s.entropy * weight;
      }
      epoch_stats.grad_norm = clip_grad_norm(grads, config.max_grad_norm);
      optimizer.step(policy.mutable_params(), grads);
    }
    const double nb = static_cast<double>(batches.size());
    epoch_stats.policy_loss /= nb;
    epoch_stats.value_loss /= nb;
    epoch_stats.entropy /= nb;
    epoch_stats.loss = epoch_stats.policy_loss + epoch_stats.value_loss;
    stats = epoch_stats;
  }
  return stats;
}

int greedy_rounds(std::shared_ptr<const SimInstance> instance, const SimConfig& sim,
                  std::uint64_t seed) {
  SimState state(std::move(instance), sim);
  RandomGreedyScheduler scheduler;
  Rng rng = make_rng(seed, "episode-cap");
  run_to_completion(state, scheduler, rng);
  return state.round();
}

}  // namespace

void TrainConfig::validate() const {
  require_field(outer_iterations >= 1, "outer_iterations", "must be >= 1");
  require_field(fts_phases >= 1, "fts_phases", "must be >= 1");
  require_field(ws_phases >= 1, "ws_phases", "must be >= 1");
  require_field(gamma > 0.0 && gamma <= 1.0, "gamma", "must be in (0, 1]");
  require_field(clip > 0.0 && clip < 1.0, "clip", "must be in (0, 1)");
  require_field(learning_rate >= 0.0, "learning_rate", "must be >= 0");
  require_field(entropy_coef >= 0.0, "entropy_coef", "must be >= 0");
  require_field(value_coef >= 0.0, "value_coef", "must be >= 0");
  require_field(max_grad_norm >= 0.0, "max_grad_norm", "must be >= 0 (0 disables)");
  require_field(rollouts >= 1, "rollouts", "must be >= 1");
  require_field(epochs >= 1, "epochs", "must be >= 1");
  require_field(minibatches >= 1, "minibatches", "must be >= 1");
  require_field(hidden >= 1, "hidden", "must be >= 1");
  require_field(episode_cap_factor >= 1, "episode_cap_factor", "must be >= 1");
  require_field(workers >= 1, "workers", "must be >= 1");
}

std::string to_string(Flavor f) { return f == Flavor::kFts ? "fts" : "ws"; }

// ---------------------------------------------------------------------------

std::size_t TrajectoryBuffer::size() const {
  return flavor_ == Flavor::kFts ? fts_.size() : ws_.size();
}

void TrajectoryBuffer::require(Flavor f) const {
  if (f != flavor_) {
    throw FlavorMismatch("buffer holds " + to_string(flavor_) + " records, not " + to_string(f));
  }
}

void TrajectoryBuffer::add(FtsRecord record) {
  require(Flavor::kFts);
  fts_.push_back(std::move(record));
}

void TrajectoryBuffer::add(WsRecord record) {
  require(Flavor::kWs);
  ws_.push_back(std::move(record));
}

const std::vector<FtsRecord>& TrajectoryBuffer::fts() const {
  require(Flavor::kFts);
  return fts_;
}

const std::vector<WsRecord>& TrajectoryBuffer::ws() const {
  require(Flavor::kWs);
  return ws_;
}

void TrajectoryBuffer::compute_returns(double gamma) {
  const std::size_t n = size();
  returns_.assign(n, 0.0);
  advantages_.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    double reward, value, discount = gamma;
    bool done;
    if (flavor_ == Flavor::kFts) {
      reward = fts_[i].reward, value = fts_[i].value, done = fts_[i].done;
    } else {
      reward = ws_[i].reward, value = ws_[i].value, done = ws_[i].done;
      discount = std::pow(gamma, 1 + ws_[i].delay);
    }
    running = reward + (done ? 0.0 : discount * running);
    returns_[i] = running;
    advantages_[i] = running - value;
  }
  if (n == 0) return;
  const double mean = std::accumulate(advantages_.begin(), advantages_.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages_) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : advantages_) a = (a - mean) / (sd + 1e-8);
}

// ---------------------------------------------------------------------------

UpdateStats update_fts(FtsPolicy& policy, Adam& optimizer, const TrajectoryBuffer& buffer,
                       const TrainConfig& config, Rng& rng) {
  const auto& records = buffer.fts();
  return run_updates(policy, optimizer, buffer, records, config, rng,
                     [&](const FtsRecord& r, double adv, double ret, const LossCoefficients& c,
                         double w, std::vector<double>& g) {
                       return policy.add_loss_grad(r.obs, r.action, r.log_prob, adv, ret, c, w, g);
                     });
}

UpdateStats update_ws(WsPolicy& policy, Adam& optimizer, const TrajectoryBuffer& buffer,
                      const TrainConfig& config, Rng& rng) {
  const auto& records = buffer.ws();
  return run_updates(policy, optimizer, buffer, records, config, rng,
                     [&](const WsRecord& r, double adv, double ret, const LossCoefficients& c,
                         double w, std::vector<double>& g) {
                       return policy.add_loss_grad(r.obs, r.action, r.log_prob, adv, ret, c, w, g);
                     });
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(FtsEnv& env, const FtsPolicy& fts, const WsPolicy& ws, Rng& rng,
                          bool sample, Flavor record) {
  EpisodeResult result;
  std::vector<double> obs = env.reset().flatten();
  while (!env.done()) {
    FtsPolicy::Decision top;
    if (sample) {
      top = fts.act(obs, rng);
    } else {
      top.action = fts.mode(obs);
    }
    WsRound round = env.begin_round(top.action);
    while (!round.done()) {
      const WsObservation& wobs = round.observation();
      WsPolicy::Decision low;
      if (sample) {
        low = ws.act(wobs, rng);
      } else {
        low.action = ws.mode(wobs);
      }
      WsRecord rec;
      if (record == Flavor::kWs) {
        rec.obs = wobs;
        rec.action = low.action;
        rec.log_prob = low.log_prob;
        rec.value = low.value;
      }
      const WsStepResult step = round.step(low.action);
      result.ws_return += step.reward;
      if (record == Flavor::kWs) {
        rec.reward = step.reward;
        result.ws.push_back(std::move(rec));
      }
    }
    const FtsStepResult step = env.commit_round(top.action, round);
    result.fts_return += step.reward;
    std::vector<double> next = step.observation.flatten();
    if (record == Flavor::kFts) {
      FtsRecord rec{obs, next, top.action, step.reward, top.log_prob, top.value, step.done};
      result.fts.push_back(std::move(rec));
    } else if (!result.ws.empty()) {
      ++result.ws.back().delay;  // the round close is one more step of delay
    }
    obs = std::move(next);
  }
  if (!result.ws.empty()) result.ws.back().done = true;
  result.rounds = env.state().round();
  result.complete = env.state().is_done();
  return result;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(const TopologyGraph& graph, TrainConfig config)
    : Trainer(greedy_instance(graph), SimConfig::for_topology(graph), config) {}

Trainer::Trainer(std::shared_ptr<const SimInstance> instance, SimConfig sim_config,
                 TrainConfig config)
    : instance_(std::move(instance)), sim_config_(sim_config), config_(config) {
  config_.validate();
  init();
}

void Trainer::init() {
  const int cap = greedy_rounds(instance_, sim_config_, config_.seed);
  env_config_.max_rounds = config_.episode_cap_factor * std::max(cap, 1);
  Rng init_rng = make_rng(config_.seed, "policy-init");
  const int obs_size = FtsObservation::dimension(instance_->num_groups(), instance_->num_links());
  fts_ = FtsPolicy(obs_size, instance_->num_groups(), config_.hidden, init_rng);
  ws_ = WsPolicy(config_.hidden, init_rng, config_.terminate_logit);
  fts_opt_ = Adam(fts_.num_params(), config_.learning_rate);
  ws_opt_ = Adam(ws_.num_params(), config_.learning_rate);
  rng_ = make_rng(config_.seed, "update");
}

std::vector<EpisodeResult> Trainer::collect(Flavor record, int phase_id) const {
  std::vector<EpisodeResult> results(config_.rollouts);
  // Workers read the policies only; no update runs until every worker joins.
  auto work = [&](int first, int stride) {
    FtsEnv env(instance_, sim_config_, env_config_);
    for (int e = first; e < config_.rollouts; e += stride) {
      Rng rng = make_rng(config_.seed,
                         "rollout/" + std::to_string(phase_id) + "/" + std::to_string(e));
      results[e] = run_episode(env, fts_, ws_, rng, true, record);
    }
  };
  const int workers = std::min(config_.workers, config_.rollouts);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w, workers);
    for (auto& t : threads) t.join();
  }
  return results;
}

PhaseStats Trainer::train_phase(Flavor learner) {
  const std::uint64_t frozen_before = learner == Flavor::kFts ? ws_.hash() : fts_.hash();
  const int phase_id = phases_run_++;
  std::vector<EpisodeResult> episodes = collect(learner, phase_id);

  TrajectoryBuffer buffer(learner);
  PhaseStats stats;
  stats.flavor = learner;
  for (auto& ep : episodes) {
    stats.mean_rounds += ep.rounds;
    stats.mean_return += learner == Flavor::kFts ? ep.fts_return : ep.ws_return;
    for (auto& r : ep.fts) buffer.add(std::move(r));
    for (auto& r : ep.ws) buffer.add(std::move(r));
  }
  stats.mean_rounds /= episodes.size();
  stats.mean_return /= episodes.size();
  buffer.compute_returns(config_.gamma);

  const UpdateStats update = learner == Flavor::kFts
                                 ? update_fts(fts_, fts_opt_, buffer, config_, rng_)
                                 : update_ws(ws_, ws_opt_, buffer, config_, rng_);
  stats.loss = update.loss;
  stats.frozen_hash = learner == Flavor::kFts ? ws_.hash() : fts_.hash();
  if (stats.frozen_hash != frozen_before) {
    throw std::logic_error("frozen policy changed during a " + to_string(learner) + " phase");
  }
  return stats;
}

std::vector<PhaseStats> Trainer::train(const std::function<void(int)>& on_iteration) {
  std::vector<PhaseStats> curve;
  std::vector<double> best_fts, best_ws;
  double best = 0.0;
  for (int i = 1; i <= config_.outer_iterations; ++i) {
    ++iteration_;
    for (int j = 1; j <= config_.fts_phases; ++j) {
      PhaseStats s = train_phase(Flavor::kFts);
      s.iteration = i, s.phase = j;
      curve.push_back(s);
    }
    for (int k = 1; k <= config_.ws_phases; ++k) {
      PhaseStats s = train_phase(Flavor::kWs);
      s.iteration = i, s.phase = k;
      curve.push_back(s);
    }
    const EvalSummary eval = evaluate({config_.seed});
    PhaseStats row;
    row.evaluation = true;
    row.iteration = i;
    row.mean_rounds = eval.mean_rounds;
    curve.push_back(row);
    if (best_fts.empty() || eval.mean_rounds < best) {
      best = eval.mean_rounds;
      best_fts.assign(fts_.params().begin(), fts_.params().end());
      best_ws.assign(ws_.params().begin(), ws_.params().end());
    }
    best_rounds_ = config_.keep_best ? best : eval.mean_rounds;
    if (on_iteration) on_iteration(i);
  }
  if (config_.keep_best && !best_fts.empty()) {
    std::copy(best_fts.begin(), best_fts.end(), fts_.mutable_params().begin());
    std::copy(best_ws.begin(), best_ws.end(), ws_.mutable_params().begin());
  }
  return curve;
}

EvalSummary Trainer::evaluate(const std::vector<std::uint64_t>& seeds) const {
  EvalSummary summary;
  FtsEnv env(instance_, sim_config_, env_config_);
  for (std::uint64_t seed : seeds) {
    Rng rng = make_rng(seed, "evaluate");
    const EpisodeResult ep = run_episode(env, fts_, ws_, rng, false, Flavor::kFts);
    summary.rounds.push_back(ep.rounds);
    if (ep.complete) ++summary.completed;
  }
  if (summary.rounds.empty()) return summary;
  const double n = static_cast<double>(summary.rounds.size());
  summary.mean_rounds = std::accumulate(summary.rounds.begin(), summary.rounds.end(), 0.0) / n;
  double var = 0.0;
  for (int r : summary.rounds) var += (r - summary.mean_rounds) * (r - summary.mean_rounds);
  summary.std_rounds = std::sqrt(var / n);
  return summary;
}

}  // namespace allreduce::rl

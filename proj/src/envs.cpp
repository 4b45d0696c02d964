#include "allreduce/envs.hpp"

#include <algorithm>
#include <string>

namespace allreduce {

double fts_dense_reward(int sent, int total, int trees_selected, int total_trees,
                        double tree_coefficient) {
  if (total <= 0 || total_trees <= 0) throw std::invalid_argument("reward denominators must be > 0");
  return static_cast<double>(sent) / total +
         tree_coefficient * (static_cast<double>(trees_selected) / total_trees);
}

double fts_stage_reward(int total, int total_trees, bool done, double done_bonus) {
  if (total <= 0 || total_trees <= 0) throw std::invalid_argument("reward denominators must be > 0");
  return done ? done_bonus : -static_cast<double>(total_trees) / total;
}

double fts_reward(int sent, int total, int trees_selected, int total_trees, bool done,
                  double tree_coefficient, double done_bonus) {
  return fts_dense_reward(sent, total, trees_selected, total_trees, tree_coefficient) +
         fts_stage_reward(total, total_trees, done, done_bonus);
}

double ws_pick_reward(int total) {
  if (total <= 0) throw std::invalid_argument("reward denominator must be > 0");
  return 1.0 / total;
}

int FtsAction::count() const {
  return static_cast<int>(std::count_if(trees.begin(), trees.end(),
                                        [](std::uint8_t b) { return b != 0; }));
}

std::vector<double> FtsObservation::flatten() const {
  std::vector<double> out;
  out.reserve(remaining.size() * 3 + pressure.size() + 1);
  out.insert(out.end(), remaining.begin(), remaining.end());
  out.insert(out.end(), tree_done.begin(), tree_done.end());
  out.insert(out.end(), pressure.begin(), pressure.end());
  out.insert(out.end(), last_action.begin(), last_action.end());
  out.push_back(progress);
  return out;
}

int WsObservation::num_selectable() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------

WsRound::WsRound(const SimState& state, std::vector<int> pool)
    : state_(&state), pool_(std::move(pool)) {
  std::sort(pool_.begin(), pool_.end());
  for (int id : pool_) {
    if (state.status(id) != WorkloadStatus::kReady) {
      throw std::invalid_argument("pool contains non-ready workload " + std::to_string(id));
    }
  }
  occupancy_.assign(state.instance().num_slots(), 0);
  refresh();
  done_ = obs_.num_selectable() == 0;
}

void WsRound::refresh() {
  const SimInstance& inst = state_->instance();
  const double tree_scale = std::max(1, inst.num_groups() - 1);
  const double link_scale = std::max(1, inst.num_links() - 1);
  const double unblock_scale = std::max(1, inst.max_successors());
  const double depth_scale = std::max(1, inst.max_chain_depth());

  obs_ = WsObservation{};
  obs_.pool_size = static_cast<int>(pool_.size());
  obs_.selected = static_cast<int>(selected_.size());
  obs_.occupancy = occupancy_;
  std::vector<double> mean(kWsRowFeatures, 0.0);
  int selectable = 0;
  for (int id : pool_) {
    if (std::binary_search(selected_.begin(), selected_.end(), id)) continue;
    const Workload& w = inst.workload(id);
    WsCandidate c{id, inst.group_of(id), w.hop.link, static_cast<int>(w.hop.dir),
                  state_->unblock_count(id), inst.chain_depth(id)};
    const bool free = occupancy_[slot_index(w.hop)] == 0;
    const double row[kWsRowFeatures] = {c.tree / tree_scale, c.link / link_scale,
                                        static_cast<double>(c.direction),
                                        c.unblocks / unblock_scale,
                                        c.chain_depth / depth_scale};
    obs_.rows.insert(obs_.rows.end(), row, row + kWsRowFeatures);
    if (free) {
      for (int f = 0; f < kWsRowFeatures; ++f) mean[f] += row[f];
      ++selectable;
    }
    obs_.candidates.push_back(c);
    obs_.mask.push_back(free ? 1 : 0);
  }
  const double pool = std::max(1, obs_.pool_size);
  for (double& m : mean) m /= std::max(1, selectable);
  obs_.summary = mean;
  obs_.summary.push_back(selectable / pool);
  obs_.summary.push_back(obs_.selected / pool);
  obs_.summary.push_back(static_cast<double>(state_->done_count()) /
                         std::max(1, inst.num_workloads()));
}

WsStepResult WsRound::step(WsAction action) {
  if (done_) throw IllegalAction("round already closed");
  if (action.is_terminate()) {
    done_ = true;
    return {0.0, true};
  }
  if (action.index < 0 || action.index >= obs_.num_candidates()) {
    throw IllegalAction("candidate index " + std::to_string(action.index) + " out of range");
  }
  if (!obs_.mask[action.index]) {
    throw IllegalAction("candidate " + std::to_string(action.index) + " is masked");
  }
  const int id = obs_.candidates[action.index].workload;
  selected_.insert(std::upper_bound(selected_.begin(), selected_.end(), id), id);
  occupancy_[slot_index(state_->instance().workload(id).hop)] = 1;
  refresh();
  done_ = obs_.num_selectable() == 0;
  return {ws_pick_reward(state_->instance().num_workloads()), done_};
}

WsAction FirstFitWsAgent::act(const WsObservation& obs, Rng&) {
  for (int i = 0; i < obs.num_candidates(); ++i) {
    if (obs.mask[i]) return WsAction::pick(i);
  }
  return WsAction::terminate();
}

// ---------------------------------------------------------------------------

FtsEnv::FtsEnv(std::shared_ptr<const SimInstance> instance, SimConfig sim_config,
               EnvConfig env_config)
    : instance_(std::move(instance)),
      sim_config_(sim_config),
      env_config_(env_config),
      state_(instance_, sim_config_) {
  if (instance_->num_workloads() == 0 || instance_->num_groups() == 0) {
    throw std::invalid_argument("FtsEnv needs at least one workload");
  }
  reset();
}

FtsObservation FtsEnv::reset() {
  state_ = SimState(instance_, sim_config_);
  last_action_.assign(num_trees(), 0.0);
  done_ = state_.is_done();
  return observe();
}

FtsObservation FtsEnv::observe() const {
  FtsObservation obs;
  const int trees = num_trees();
  obs.remaining.resize(trees);
  obs.tree_done.resize(trees);
  for (int t = 0; t < trees; ++t) {
    const int size = instance_->group_size(t);
    const int left = state_.remaining_in_group(t);
    obs.remaining[t] = size > 0 ? static_cast<double>(left) / size : 0.0;
    obs.tree_done[t] = left == 0 ? 1.0 : 0.0;
  }
  std::vector<int> demand(num_links(), 0);
  for (int id : state_.ready()) ++demand[instance_->workload(id).hop.link];
  const int peak = demand.empty() ? 0 : *std::max_element(demand.begin(), demand.end());
  obs.pressure.resize(num_links());
  for (int l = 0; l < num_links(); ++l) {
    obs.pressure[l] = peak > 0 ? static_cast<double>(demand[l]) / peak : 0.0;
  }
  obs.last_action = last_action_;
  obs.progress = static_cast<double>(state_.done_count()) / instance_->num_workloads();
  return obs;
}

void FtsEnv::check_action(const FtsAction& action) const {
  if (static_cast<int>(action.trees.size()) != num_trees()) {
    throw IllegalAction("flow-tree action has length " + std::to_string(action.trees.size()) +
                        ", expected " + std::to_string(num_trees()));
  }
}

std::vector<int> FtsEnv::pool_for(const FtsAction& action) const {
  check_action(action);
  std::vector<int> pool;
  for (int id : state_.ready()) {
    if (action.trees[instance_->group_of(id)]) pool.push_back(id);
  }
  return pool;
}

WsRound FtsEnv::begin_round(const FtsAction& action) const {
  if (done_) throw IllegalAction("episode already finished");
  return WsRound(state_, pool_for(action));
}

FtsStepResult FtsEnv::commit_round(const FtsAction& action, const WsRound& round) {
  if (done_) throw IllegalAction("episode already finished");
  check_action(action);
  FtsStepResult result;
  result.info.round = state_.round();
  result.info.committed = round.selected();
  state_.send_round(round.selected());
  result.info.n_on = static_cast<int>(round.selected().size());

  const bool finished = state_.is_done();
  const bool truncated =
      !finished && env_config_.max_rounds > 0 && state_.round() >= env_config_.max_rounds;
  result.reward = fts_reward(result.info.n_on, instance_->num_workloads(), action.count(),
                             num_trees(), finished, env_config_.tree_coefficient,
                             env_config_.done_bonus);
  result.info.truncated = truncated;
  done_ = finished || truncated;
  result.done = done_;
  for (int t = 0; t < num_trees(); ++t) last_action_[t] = action.trees[t] ? 1.0 : 0.0;
  result.observation = observe();
  return result;
}

FtsStepResult FtsEnv::step(const FtsAction& action, WsAgent& agent, Rng& rng) {
  WsRound round = begin_round(action);
  while (!round.done()) round.step(agent.act(round.observation(), rng));
  return commit_round(action, round);
}

}  // namespace allreduce

#include "allreduce/simulator.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace allreduce {

SimConfig SimConfig::for_topology(const TopologyGraph& g, int pieces, double full_time) {
  SimConfig c;
  c.num_servers = g.num_servers();
  c.pieces = pieces > 0 ? pieces : g.num_servers();
  c.full_time = full_time;
  c.physical_links = g.num_links();
  c.validate();
  return c;
}

void SimConfig::validate() const {
  if (pieces < 1) throw std::invalid_argument("SimConfig: pieces must be >= 1");
  if (physical_links < 1) throw std::invalid_argument("SimConfig: no physical links");
  if (!(full_time > 0.0)) throw std::invalid_argument("SimConfig: full_time must be > 0");
}

SimInstance::SimInstance(std::vector<Workload> workloads, std::vector<int> group,
                         int num_groups, int num_links)
    : workloads_(std::move(workloads)),
      group_(std::move(group)),
      group_size_(num_groups, 0),
      num_groups_(num_groups),
      num_links_(num_links) {
  const int n = num_workloads();
  if (static_cast<int>(group_.size()) != n) {
    throw std::invalid_argument("SimInstance: group vector size mismatch");
  }
  successors_.resize(n);
  for (int i = 0; i < n; ++i) {
    const Workload& w = workloads_[i];
    if (w.id != i) throw std::invalid_argument("SimInstance: workload ids must be dense");
    if (w.hop.link < 0 || w.hop.link >= num_links_) {
      throw std::invalid_argument("SimInstance: link out of range");
    }
    if (group_[i] < 0 || group_[i] >= num_groups_) {
      throw std::invalid_argument("SimInstance: group out of range");
    }
    ++group_size_[group_[i]];
    for (int p : w.prefixes) {
      if (p < 0 || p >= n || p == i) throw std::invalid_argument("SimInstance: bad prefix");
      successors_[p].push_back(i);
    }
  }
  for (const auto& succ : successors_) {
    max_successors_ = std::max(max_successors_, static_cast<int>(succ.size()));
  }
  // Chain depth by reverse topological order; also rejects prefix cycles.
  std::vector<int> pending(n, 0);
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i) {
    pending[i] = static_cast<int>(workloads_[i].prefixes.size());
    if (pending[i] == 0) order.push_back(i);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (int s : successors_[order[head]]) {
      if (--pending[s] == 0) order.push_back(s);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    throw std::invalid_argument("SimInstance: prefix graph has a cycle");
  }
  chain_depth_.assign(n, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (int s : successors_[*it]) {
      chain_depth_[*it] = std::max(chain_depth_[*it], chain_depth_[s] + 1);
    }
    max_chain_depth_ = std::max(max_chain_depth_, chain_depth_[*it]);
  }
}

std::shared_ptr<const SimInstance> SimInstance::from_set(const TopologyGraph& g,
                                                         const WorkloadSet& set) {
  std::vector<Workload> flat;
  std::vector<int> group;
  for (std::size_t t = 0; t < set.trees.size(); ++t) {
    for (const auto& w : set.trees[t].workloads) {
      flat.push_back(w);
      group.push_back(static_cast<int>(t));
    }
  }
  return std::make_shared<const SimInstance>(std::move(flat), std::move(group),
                                             static_cast<int>(set.trees.size()),
                                             g.num_links());
}

bool conflicts(const Workload& a, const Workload& b) { return a.hop == b.hop; }

SimState::SimState(std::shared_ptr<const SimInstance> instance, SimConfig config)
    : instance_(std::move(instance)), config_(config) {
  config_.validate();
  const int n = instance_->num_workloads();
  status_.assign(n, WorkloadStatus::kBlocked);
  pending_prefixes_.resize(n);
  remaining_in_group_.assign(instance_->num_groups(), 0);
  for (int i = 0; i < n; ++i) {
    pending_prefixes_[i] = static_cast<int>(instance_->workload(i).prefixes.size());
    if (pending_prefixes_[i] == 0) {
      status_[i] = WorkloadStatus::kReady;
      ready_.push_back(i);
    }
    ++remaining_in_group_[instance_->group_of(i)];
  }
}

int SimState::unblock_count(int id) const {
  int count = 0;
  for (int s : instance_->successors(id)) {
    if (pending_prefixes_[s] == 1) ++count;
  }
  return count;
}

void SimState::send_round(std::span<const int> selected) {
  const int n = instance_->num_workloads();
  std::vector<int> slot_owner(instance_->num_slots(), -1);
  for (int id : selected) {
    if (id < 0 || id >= n) {
      throw RoundError(RoundError::Kind::kUnknownId, id, -1,
                       "unknown workload " + std::to_string(id));
    }
    if (status_[id] != WorkloadStatus::kReady) {
      throw RoundError(RoundError::Kind::kNotReady, id, -1,
                       "workload " + std::to_string(id) + " is not ready");
    }
    int& owner = slot_owner[slot_index(instance_->workload(id).hop)];
    if (owner >= 0) {
      throw RoundError(RoundError::Kind::kConflict, owner, id,
                       "workloads " + std::to_string(owner) + " and " + std::to_string(id) +
                           " share a link direction");
    }
    owner = id;
  }

  std::vector<int> newly_ready;
  for (int id : selected) {
    status_[id] = WorkloadStatus::kDone;
    --remaining_in_group_[instance_->group_of(id)];
    for (int s : instance_->successors(id)) {
      if (--pending_prefixes_[s] == 0) {
        status_[s] = WorkloadStatus::kReady;
        newly_ready.push_back(s);
      }
    }
  }
  done_count_ += static_cast<int>(selected.size());
  std::erase_if(ready_, [&](int id) { return status_[id] != WorkloadStatus::kReady; });
  ready_.insert(ready_.end(), newly_ready.begin(), newly_ready.end());
  std::sort(ready_.begin(), ready_.end());

  std::vector<int> entry(selected.begin(), selected.end());
  std::sort(entry.begin(), entry.end());
  log_.push_back(std::move(entry));
  sent_per_round_.push_back(static_cast<int>(selected.size()));
  ++round_;
}

SimState reset(std::shared_ptr<const SimInstance> instance, const SimConfig& config) {
  return SimState(std::move(instance), config);
}

std::vector<int> ready_workloads(const SimState& state) { return state.ready(); }

bool is_done(const SimState& state) { return state.is_done(); }

Metrics collect_metrics(const SimState& state) {
  Metrics m;
  const auto& cfg = state.config();
  m.total_rounds = state.round();
  m.wall_clock = m.total_rounds * cfg.piece_time();
  m.workloads = state.instance().num_workloads();
  m.sent = state.done_count();
  m.complete = state.is_done();
  const double links = cfg.physical_links;
  for (int on : state.sent_per_round()) {
    m.utilization_links.push_back(on / links);
    m.utilization_slots.push_back(on / (2.0 * links));
  }
  if (m.total_rounds > 0) {
    m.mean_utilization_links = m.sent / links / m.total_rounds;
    m.mean_utilization_slots = m.sent / (2.0 * links) / m.total_rounds;
  }
  return m;
}

int round_lower_bound(const SimInstance& instance) {
  const int w = instance.num_workloads();
  const int slots = instance.num_slots();
  const int capacity_bound = (w + slots - 1) / slots;
  return std::max(capacity_bound, w == 0 ? 0 : instance.max_chain_depth());
}

bool replay_is_valid(const SimState& state) {
  const SimInstance& inst = state.instance();
  const int n = inst.num_workloads();
  std::vector<int> done_round(n, -1);
  int round = 0;
  for (const auto& entry : state.log()) {
    std::vector<bool> used(inst.num_slots(), false);
    for (int id : entry) {
      if (id < 0 || id >= n || done_round[id] >= 0) return false;
      const int slot = slot_index(inst.workload(id).hop);
      if (used[slot]) return false;
      used[slot] = true;
      for (int p : inst.workload(id).prefixes) {
        if (done_round[p] < 0 || done_round[p] >= round) return false;
      }
    }
    for (int id : entry) done_round[id] = round;
    ++round;
  }
  if (!state.is_done()) return true;
  return std::none_of(done_round.begin(), done_round.end(), [](int r) { return r < 0; });
}

}  // namespace allreduce

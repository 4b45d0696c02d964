#include "allreduce/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace allreduce {

std::vector<int> RandomGreedyScheduler::next_round(const SimState& state, Rng& rng) {
  std::vector<int> order = state.ready();
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> used(state.instance().num_slots(), false);
  std::vector<int> picked;
  for (int id : order) {
    const int slot = slot_index(state.instance().workload(id).hop);
    if (used[slot]) continue;
    used[slot] = true;
    picked.push_back(id);
  }
  return picked;
}

void run_to_completion(SimState& state, Scheduler& scheduler, Rng& rng, int max_rounds) {
  while (!state.is_done()) {
    if (state.round() >= max_rounds) {
      throw std::logic_error(scheduler.name() + ": exceeded round limit");
    }
    auto picked = scheduler.next_round(state, rng);
    if (picked.empty() && !state.ready().empty()) {
      throw std::logic_error(scheduler.name() + ": scheduled nothing with work ready");
    }
    state.send_round(picked);
  }
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kPs: return "ps";
    case Method::kRing: return "ring";
    case Method::kGreedy: return "greedy";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "ps") return Method::kPs;
  if (name == "ring") return Method::kRing;
  if (name == "greedy") return Method::kGreedy;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::shared_ptr<const SimInstance> ps_instance(const TopologyGraph& g) {
  return SimInstance::from_set(g, build_ps_workloads(g));
}

std::shared_ptr<const SimInstance> greedy_instance(const TopologyGraph& g) {
  return SimInstance::from_set(g, build_all_trees(g));
}

std::shared_ptr<const SimInstance> ring_instance(const TopologyGraph& g) {
  const int n = g.num_servers();
  if (n < 2) throw std::invalid_argument("ring needs at least two servers");
  std::vector<Route> routes;
  for (int s = 0; s < n; ++s) routes.push_back(shortest_route(g, s, (s + 1) % n));

  std::vector<Workload> flat;
  std::vector<int> group;
  std::vector<int> previous_step;
  const int steps = 2 * (n - 1);
  for (int step = 0; step < steps; ++step) {
    std::vector<int> this_step;
    for (int s = 0; s < n; ++s) {
      for (const Hop& hop : routes[s].hops) {
        Workload w;
        w.id = static_cast<int>(flat.size());
        w.root = (s + 1) % n;
        w.tail = g.tail_of(hop);
        w.head = g.head_of(hop);
        w.hop = hop;
        w.prefixes = previous_step;
        w.merged_from.push_back(s);
        this_step.push_back(w.id);
        flat.push_back(std::move(w));
        group.push_back(step);
      }
    }
    previous_step = std::move(this_step);
  }
  return std::make_shared<const SimInstance>(std::move(flat), std::move(group), steps,
                                             g.num_links());
}

int ring_logical_steps(const SimInstance& ring) { return ring.num_groups(); }

BaselineRun run_baseline(Method method, const TopologyGraph& g, std::uint64_t seed) {
  std::shared_ptr<const SimInstance> inst;
  switch (method) {
    case Method::kPs: inst = ps_instance(g); break;
    case Method::kRing: inst = ring_instance(g); break;
    case Method::kGreedy: inst = greedy_instance(g); break;
  }
  SimState state = reset(inst, SimConfig::for_topology(g));
  Rng rng = make_rng(seed, std::string("scheduler/") + to_string(method));
  RandomGreedyScheduler scheduler;
  run_to_completion(state, scheduler, rng);
  Metrics metrics = collect_metrics(state);
  return {method, seed, std::move(metrics), std::move(state)};
}

Metrics ps_schedule(const TopologyGraph& g, std::uint64_t seed) {
  return run_baseline(Method::kPs, g, seed).metrics;
}

Metrics ring_schedule(const TopologyGraph& g, std::uint64_t seed) {
  return run_baseline(Method::kRing, g, seed).metrics;
}

Metrics greedy_schedule(const TopologyGraph& g, std::uint64_t seed) {
  return run_baseline(Method::kGreedy, g, seed).metrics;
}

SeedSummary summarize_seeds(Method method, const TopologyGraph& g, int seeds,
                            std::uint64_t first_seed) {
  SeedSummary s;
  double util = 0.0;
  for (int i = 0; i < seeds; ++i) {
    const Metrics m = run_baseline(method, g, first_seed + i).metrics;
    s.rounds.push_back(m.total_rounds);
    util += m.mean_utilization_slots;
  }
  if (seeds == 0) return s;
  s.mean_rounds = std::accumulate(s.rounds.begin(), s.rounds.end(), 0.0) / seeds;
  double var = 0.0;
  for (int r : s.rounds) var += (r - s.mean_rounds) * (r - s.mean_rounds);
  s.std_rounds = std::sqrt(var / seeds);
  s.mean_utilization = util / seeds;
  return s;
}

}  // namespace allreduce

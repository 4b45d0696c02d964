#ifndef ALLREDUCE_BASELINES_HPP_
#define ALLREDUCE_BASELINES_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "allreduce/rng.hpp"
#include "allreduce/simulator.hpp"

namespace allreduce {

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  // A conflict-free subset of state.ready().
  virtual std::vector<int> next_round(const SimState& state, Rng& rng) = 0;
};

// Visits ready workloads in a seed-shuffled order and keeps every one whose
// (link, direction) is still free. The result is maximal.
class RandomGreedyScheduler : public Scheduler {
 public:
  std::string name() const override { return "greedy"; }
  std::vector<int> next_round(const SimState& state, Rng& rng) override;
};

// Drives a scheduler until the state is done. Throws std::logic_error if a
// round with ready workloads schedules nothing or if max_rounds is exceeded.
void run_to_completion(SimState& state, Scheduler& scheduler, Rng& rng,
                       int max_rounds = 1'000'000);

enum class Method { kPs, kRing, kGreedy };
const char* to_string(Method m);
Method method_from_string(const std::string& name);

// Workload set each baseline executes.
std::shared_ptr<const SimInstance> ps_instance(const TopologyGraph& g);
std::shared_ptr<const SimInstance> greedy_instance(const TopologyGraph& g);
// Ring over servers in id order: 2(N-1) logical steps. In each step every
// server sends one chunk along its shortest route to its successor; the hops
// of a step are limited only by link conflicts, and every hop of step t+1
// waits for all of step t.
std::shared_ptr<const SimInstance> ring_instance(const TopologyGraph& g);
int ring_logical_steps(const SimInstance& ring);

struct BaselineRun {
  Method method;
  std::uint64_t seed;
  Metrics metrics;
  SimState state;
};

// Runs one baseline for one seed; the scheduler stream is derived from the seed.
BaselineRun run_baseline(Method method, const TopologyGraph& g, std::uint64_t seed);

Metrics ps_schedule(const TopologyGraph& g, std::uint64_t seed);
Metrics ring_schedule(const TopologyGraph& g, std::uint64_t seed);
Metrics greedy_schedule(const TopologyGraph& g, std::uint64_t seed);

struct SeedSummary {
  double mean_rounds = 0.0;
  double std_rounds = 0.0;
  double mean_utilization = 0.0;
  std::vector<int> rounds;
};
SeedSummary summarize_seeds(Method method, const TopologyGraph& g, int seeds,
                            std::uint64_t first_seed = 0);

}  // namespace allreduce

#endif  // ALLREDUCE_BASELINES_HPP_

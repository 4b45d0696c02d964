#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "allreduce/baselines.hpp"

using namespace allreduce;

namespace {

TopologyGraph triangle() {
  TopologyParams p;
  return TopologyGraph("triangle", p, 3, 0, {{0, 0, 1}, {1, 1, 2}, {2, 0, 2}});
}

// Every round of the log is maximal: no workload ready at that round was
// left out while its slot stayed free.
bool rounds_are_maximal(const SimState& finished) {
  SimState s = reset(finished.shared_instance(), finished.config());
  for (const auto& round : finished.log()) {
    std::set<int> used;
    for (int id : round) used.insert(slot_index(s.instance().workload(id).hop));
    for (int id : s.ready()) {
      const bool picked = std::find(round.begin(), round.end(), id) != round.end();
      if (!picked && !used.count(slot_index(s.instance().workload(id).hop))) return false;
    }
    s.send_round(round);
  }
  return true;
}

}  // namespace

TEST(Ring, TriangleTakesFourRounds) {
  const auto g = triangle();
  const auto inst = ring_instance(g);
  EXPECT_EQ(ring_logical_steps(*inst), 4);
  EXPECT_EQ(inst->num_workloads(), 12);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_EQ(ring_schedule(g, seed).total_rounds, 4);
  }
}

TEST(Ring, StepCountIndependentOfTopology) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    const auto inst = ring_instance(g);
    EXPECT_EQ(ring_logical_steps(*inst), 2 * (g.num_servers() - 1)) << p.label;
    EXPECT_GE(ring_schedule(g, 0).total_rounds, 2 * (g.num_servers() - 1));
  }
  EXPECT_THROW(ring_instance(build_jellyfish(4, 2, 1, 0)), std::invalid_argument);
}

TEST(Greedy, SmallestBCube) {
  auto g = build_bcube(2, 0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_EQ(greedy_schedule(g, seed).total_rounds, 2);
}

TEST(Greedy, MatchesHandRolledScheduler) {
  auto g = build_bcube(3, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BaselineRun run = run_baseline(Method::kGreedy, g, seed);
    SimState s = reset(greedy_instance(g), SimConfig::for_topology(g));
    Rng rng = make_rng(seed, "scheduler/greedy");
    while (!s.is_done()) {
      std::vector<int> order = s.ready();
      std::shuffle(order.begin(), order.end(), rng);
      std::set<int> used;
      std::vector<int> round;
      for (int id : order) {
        if (used.insert(slot_index(s.instance().workload(id).hop)).second) round.push_back(id);
      }
      s.send_round(round);
    }
    EXPECT_EQ(s.log(), run.state.log()) << "seed " << seed;
  }
}

TEST(AllMethods, TerminateMaximalAndAboveBound) {
  for (const Preset& p : table_presets()) {
    auto g = build_topology(p.params);
    for (Method m : {Method::kPs, Method::kRing, Method::kGreedy}) {
      for (std::uint64_t seed = 0; seed < 2; ++seed) {
        const BaselineRun run = run_baseline(m, g, seed);
        EXPECT_TRUE(run.metrics.complete);
        EXPECT_TRUE(replay_is_valid(run.state));
        EXPECT_TRUE(rounds_are_maximal(run.state)) << p.label << " " << to_string(m);
        EXPECT_GE(run.metrics.total_rounds, round_lower_bound(run.state.instance()));
      }
    }
  }
}

TEST(AllMethods, FixedSeedGivesIdenticalLogs) {
  auto g = build_topology(find_preset("D1").params);
  for (Method m : {Method::kPs, Method::kRing, Method::kGreedy}) {
    EXPECT_EQ(run_baseline(m, g, 7).state.log(), run_baseline(m, g, 7).state.log());
  }
}

TEST(Summary, MeanAndPopulationStd) {
  auto g = build_bcube(3, 1);
  const SeedSummary s = summarize_seeds(Method::kGreedy, g, 4, 10);
  ASSERT_EQ(s.rounds.size(), 4u);
  double mean = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s.rounds[i], greedy_schedule(g, 10 + i).total_rounds);
    mean += s.rounds[i] / 4.0;
  }
  double var = 0.0;
  for (int r : s.rounds) var += (r - mean) * (r - mean) / 4.0;
  EXPECT_DOUBLE_EQ(s.mean_rounds, mean);
  EXPECT_NEAR(s.std_rounds, std::sqrt(var), 1e-12);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kPs, Method::kRing, Method::kGreedy}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_THROW(method_from_string("rl"), std::invalid_argument);
}

#ifndef ALLREDUCE_BENCH_HPP_
#define ALLREDUCE_BENCH_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "allreduce/baselines.hpp"
#include "allreduce/io.hpp"

namespace allreduce {

inline constexpr int kBenchCsvVersion = 1;
inline constexpr int kBaselineCsvVersion = 1;

struct BenchRequest {
  std::vector<std::string> presets;  // labels, e.g. "B1"
  std::vector<std::string> methods;  // "ps", "ring", "greedy", "rl"
  int seeds = 10;
  std::uint64_t first_seed = 0;
  std::map<std::string, io::Checkpoint> checkpoints;  // by preset label, for "rl"
};

struct BenchRow {
  std::string method;
  std::string label;
  std::string topology;
  int nodes = 0;
  int edges = 0;
  int workloads = 0;  // size of the workload set the method executes
  int seeds = 0;
  double mean_rounds = 0.0;
  double std_rounds = 0.0;
  int lower_bound = 0;
};

// Rows in preset-then-method order. Throws std::invalid_argument for an
// unknown method or preset, or when "rl" is requested without a checkpoint.
std::vector<BenchRow> run_bench(const BenchRequest& request);

std::string bench_csv(const std::vector<BenchRow>& rows);
// Presets as columns, methods as rows, with node/edge and workload headers.
std::string bench_table(const std::vector<BenchRow>& rows);

struct BaselineCsvRow {
  std::string method;
  std::string topology;
  std::uint64_t seed = 0;
  int rounds = 0;
  double mean_utilization = 0.0;
};
std::string baseline_csv(const std::vector<BaselineCsvRow>& rows);

inline constexpr int kTrainingCsvVersion = 1;
std::string training_csv(const std::vector<rl::PhaseStats>& curve);

// Fixed-precision formatting used by every CSV writer.
std::string format_number(double value, int decimals = 4);

}  // namespace allreduce

#endif  // ALLREDUCE_BENCH_HPP_

// Command-line front end: topology generation, workload construction,
// simulation, baselines, RL training/evaluation, benchmarks, validation.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "allreduce/baselines.hpp"
#include "allreduce/bench.hpp"
#include "allreduce/io.hpp"
#include "allreduce/reference.hpp"
#include "allreduce/rl/trainer.hpp"
#include "allreduce/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace allreduce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run can be configured with. Config file first, flags win.
struct RunConfig {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool quiet = false;

  // topology selection
  std::string preset;  // label (B1) or family name (bcube, dcell, jellyfish)
  std::string topo_file;
  int n = 0, k = 1, switches = 0, degree = 0, servers = 0;

  std::string out;        // primary output file
  std::string workloads;  // workload dump (validate)
  bool unmerged = false;
  std::string scheduler = "greedy";
  std::string log_path;
  std::string method = "greedy";
  int seeds = 10;
  std::string csv;
  std::string table;
  std::vector<std::string> presets;
  std::vector<std::string> methods;
  std::vector<std::string> checkpoint_args;  // LABEL=path for bench, path for eval
  std::string checkpoint;
  std::string train_log;
  rl::TrainConfig train;
};

std::string resolve(const RunConfig& rc, const std::string& path) {
  if (path.empty() || path == "-" || fs::path(path).is_absolute()) return path;
  return (fs::path(rc.out_dir) / path).string();
}

void emit(const RunConfig& rc, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const std::string full = resolve(rc, path);
  const fs::path parent = fs::path(full).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  io::write_file(full, text);
  if (!rc.quiet) std::cerr << "wrote " << full << "\n";
}

void say(const RunConfig& rc, const std::string& text) {
  if (!rc.quiet) std::cout << text;
}

// Keys of the config file; each maps onto the flag of the same name.
void load_config_file(RunConfig& rc) {
  if (rc.config_path.empty()) return;
  json j;
  try {
    j = json::parse(io::read_file(rc.config_path));
  } catch (const json::exception& e) {
    throw UsageError("config " + rc.config_path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") rc.seed = v.get<std::uint64_t>();
      else if (key == "out_dir") rc.out_dir = v.get<std::string>();
      else if (key == "quiet") rc.quiet = v.get<bool>();
      else if (key == "preset") rc.preset = v.get<std::string>();
      else if (key == "topo") rc.topo_file = v.get<std::string>();
      else if (key == "n") rc.n = v.get<int>();
      else if (key == "k") rc.k = v.get<int>();
      else if (key == "switches") rc.switches = v.get<int>();
      else if (key == "degree") rc.degree = v.get<int>();
      else if (key == "servers") rc.servers = v.get<int>();
      else if (key == "scheduler") rc.scheduler = v.get<std::string>();
      else if (key == "method") rc.method = v.get<std::string>();
      else if (key == "seeds") rc.seeds = v.get<int>();
      else if (key == "presets") rc.presets = v.get<std::vector<std::string>>();
      else if (key == "methods") rc.methods = v.get<std::vector<std::string>>();
      else if (key == "checkpoints") {
        for (const auto& [label, path] : v.items()) {
          rc.checkpoint_args.push_back(label + "=" + path.get<std::string>());
        }
      } else if (key == "checkpoint") rc.checkpoint = v.get<std::string>();
      else if (key == "csv") rc.csv = v.get<std::string>();
      else if (key == "table") rc.table = v.get<std::string>();
      else if (key == "train") rc.train = io::train_config_from_json(v.dump());
      else throw UsageError("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError("config " + rc.config_path + ": " + e.what());
  } catch (const io::FormatError& e) {
    throw UsageError(e.what());
  }
}

TopologyParams params_for(const RunConfig& rc) {
  if (rc.preset.empty()) throw UsageError("give --preset or --topo");
  for (const Preset& p : table_presets()) {
    if (p.label == rc.preset) return p.params;
  }
  TopologyParams p;
  try {
    p.family = family_from_string(rc.preset);
  } catch (const std::exception&) {
    throw UsageError("unknown preset or family '" + rc.preset + "'");
  }
  p.n = rc.n;
  p.k = rc.k;
  if (p.family == Family::kJellyfish) {
    p.num_switches = rc.switches;
    p.switch_degree = rc.degree;
    p.num_servers = rc.servers;
    p.seed = rc.seed;
  }
  return p;
}

TopologyGraph load_topology(const RunConfig& rc) {
  if (!rc.topo_file.empty()) return io::topology_from_json(io::read_file(rc.topo_file));
  try {
    return build_topology(params_for(rc));
  } catch (const TopologyError& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------

int cmd_topo(const RunConfig& rc) {
  const TopologyGraph g = load_topology(rc);
  emit(rc, rc.out, io::topology_to_json(g, preset_label_for(g.params())) + "\n");
  if (!rc.out.empty()) {
    say(rc, g.name() + ": " + std::to_string(g.num_servers()) + " servers, " +
                std::to_string(g.num_switches()) + " switches, " + std::to_string(g.num_links()) +
                " links\n");
  }
  return kExitOk;
}

int cmd_trees(const RunConfig& rc) {
  const TopologyGraph g = load_topology(rc);
  const WorkloadSet set = rc.unmerged ? build_all_trees_unmerged(g) : build_all_trees(g);
  if (!rc.out.empty()) emit(rc, rc.out, io::workloads_to_json(g, set) + "\n");
  std::ostringstream s;
  s << g.name() << ": " << set.trees.size() << " trees, " << set.total()
    << (rc.unmerged ? " unmerged" : " merged") << " workloads, longest chain "
    << set.max_chain_length() << "\n";
  say(rc, s.str());
  return kExitOk;
}

int cmd_simulate(const RunConfig& rc) {
  const TopologyGraph g = load_topology(rc);
  Method method;
  try {
    method = method_from_string(rc.scheduler);
  } catch (const std::exception&) {
    throw UsageError("unknown scheduler '" + rc.scheduler + "'");
  }
  const BaselineRun run = run_baseline(method, g, rc.seed);
  if (!rc.log_path.empty()) {
    std::ostringstream log;
    io::write_round_log(log, run.state, g.name(), rc.scheduler, rc.seed);
    emit(rc, rc.log_path, log.str());
  }
  std::ostringstream s;
  s << g.name() << " " << rc.scheduler << " seed " << rc.seed << ": " << run.metrics.total_rounds
    << " rounds, " << run.metrics.workloads << " workloads, mean N_on/N_phy "
    << format_number(run.metrics.mean_utilization_links) << ", lower bound "
    << round_lower_bound(run.state.instance()) << "\n";
  say(rc, s.str());
  return kExitOk;
}

int cmd_baseline(const RunConfig& rc) {
  const TopologyGraph g = load_topology(rc);
  Method method;
  try {
    method = method_from_string(rc.method);
  } catch (const std::exception&) {
    throw UsageError("unknown method '" + rc.method + "'");
  }
  if (rc.seeds < 1) throw UsageError("--seeds must be >= 1");
  std::vector<BaselineCsvRow> rows;
  double total = 0.0;
  for (int i = 0; i < rc.seeds; ++i) {
    const std::uint64_t seed = rc.seed + static_cast<std::uint64_t>(i);
    const BaselineRun run = run_baseline(method, g, seed);
    rows.push_back({rc.method, g.name(), seed, run.metrics.total_rounds,
                    run.metrics.mean_utilization_links});
    total += run.metrics.total_rounds;
  }
  if (!rc.csv.empty()) {
    emit(rc, rc.csv, baseline_csv(rows));
  } else {
    std::cout << baseline_csv(rows);
  }
  if (!rc.csv.empty()) {
    say(rc, rc.method + " on " + g.name() + ": mean " + format_number(total / rc.seeds, 2) +
                " rounds over " + std::to_string(rc.seeds) + " seeds\n");
  }
  return kExitOk;
}

int cmd_train(const RunConfig& rc) {
  const TopologyGraph g = load_topology(rc);
  rl::TrainConfig cfg = rc.train;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string checkpoint = rc.checkpoint.empty() ? "checkpoint.json" : rc.checkpoint;
  rl::Trainer trainer(g, cfg);
  // Checkpoint after every outer iteration; the final write holds the kept iterate.
  auto on_iteration = [&](int i) {
    emit(rc, checkpoint, io::checkpoint_to_json(io::make_checkpoint(trainer, g.params(), i)) + "\n");
    const rl::EvalSummary e = trainer.evaluate({rc.seed});
    say(rc, "iteration " + std::to_string(i) + ": " + format_number(e.mean_rounds, 1) +
                " rounds" + (e.completed ? "" : " (capped)") + "\n");
  };
  const std::vector<rl::PhaseStats> curve = trainer.train(on_iteration);
  emit(rc, checkpoint,
       io::checkpoint_to_json(io::make_checkpoint(trainer, g.params(), cfg.outer_iterations)) + "\n");
  say(rc, "kept iterate: " + format_number(trainer.best_rounds(), 1) + " rounds\n");
  if (!rc.train_log.empty()) emit(rc, rc.train_log, training_csv(curve));
  return kExitOk;
}

int cmd_eval(const RunConfig& rc) {
  if (rc.checkpoint.empty()) throw UsageError("eval needs --checkpoint");
  const io::Checkpoint cp = io::checkpoint_from_json(io::read_file(rc.checkpoint));
  const rl::Trainer trainer = io::restore_trainer(cp);
  std::vector<std::uint64_t> seeds(std::max(rc.seeds, 1));
  std::iota(seeds.begin(), seeds.end(), rc.seed);
  const rl::EvalSummary e = trainer.evaluate(seeds);
  std::ostringstream s;
  s << build_topology(cp.topology).name() << " rl: mean " << format_number(e.mean_rounds, 2)
    << " rounds, std " << format_number(e.std_rounds, 2) << ", completed " << e.completed << "/"
    << seeds.size() << "\n";
  std::cout << (rc.quiet ? "" : s.str());
  return kExitOk;
}

int cmd_bench(const RunConfig& rc) {
  BenchRequest req;
  req.presets = rc.presets;
  req.methods = rc.methods;
  req.seeds = rc.seeds;
  req.first_seed = rc.seed;
  for (const std::string& arg : rc.checkpoint_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw UsageError("--checkpoint for bench takes LABEL=path");
    const std::string label = arg.substr(0, eq);
    req.checkpoints.emplace(label, io::checkpoint_from_json(io::read_file(arg.substr(eq + 1))));
  }
  std::vector<BenchRow> rows;
  try {
    rows = run_bench(req);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string csv = bench_csv(rows);
  if (!rc.csv.empty()) {
    emit(rc, rc.csv, csv);
  } else if (rc.quiet) {
    std::cout << csv;
  }
  const std::string table = bench_table(rows);
  if (!rc.table.empty()) emit(rc, rc.table, table);
  say(rc, table);
  return kExitOk;
}

int cmd_validate(const RunConfig& rc) {
  if (rc.topo_file.empty() || rc.workloads.empty()) {
    throw UsageError("validate needs --topo and --workloads");
  }
  const TopologyGraph g = io::topology_from_json(io::read_file(rc.topo_file));
  const WorkloadSet set = io::workloads_from_json(io::read_file(rc.workloads));
  const auto results = validate_artifacts(g, set);
  for (const CheckResult& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
  }
  return all_passed(results) ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AllReduce scheduling simulator, baselines, and hierarchical RL trainer"};
  app.require_subcommand(1);
  RunConfig rc;
  RunConfig flags;  // receives flag values; copied over the config file's

  app.add_option("--config", rc.config_path, "JSON run configuration; flags override it");
  auto* seed_opt = app.add_option("--seed", flags.seed, "root seed (first seed for multi-seed runs)");
  auto* outdir_opt = app.add_option("--out-dir", flags.out_dir, "directory for relative output paths");
  auto* quiet_opt = app.add_flag("--quiet", flags.quiet, "suppress progress and summaries");

  struct TopoOpts {
    CLI::Option *preset, *topo, *n, *k, *switches, *degree, *servers;
  };
  auto add_topology = [&](CLI::App* sub) {
    TopoOpts o;
    o.preset = sub->add_option("--preset", flags.preset, "preset label (B1..J3) or family (bcube, dcell, jellyfish)");
    o.topo = sub->add_option("--topo", flags.topo_file, "topology JSON file");
    o.n = sub->add_option("--n", flags.n, "BCube ports / DCell cell size");
    o.k = sub->add_option("--k", flags.k, "BCube / DCell level");
    o.switches = sub->add_option("--switches", flags.switches, "Jellyfish switch count");
    o.degree = sub->add_option("--degree", flags.degree, "Jellyfish inter-switch degree");
    o.servers = sub->add_option("--servers", flags.servers, "Jellyfish server count");
    return o;
  };

  auto* topo = app.add_subcommand("topo", "generate a topology and write it as JSON");
  TopoOpts topo_o = add_topology(topo);
  auto* topo_out = topo->add_option("--out", flags.out, "output file (stdout when omitted)");

  auto* trees = app.add_subcommand("trees", "build per-root workload trees");
  TopoOpts trees_o = add_topology(trees);
  auto* trees_out = trees->add_option("--out", flags.out, "workload dump file");
  trees->add_flag("--unmerged", rc.unmerged, "skip the merge step");

  auto* simulate = app.add_subcommand("simulate", "run one scheduler once and report metrics");
  TopoOpts sim_o = add_topology(simulate);
  auto* sched_opt = simulate->add_option("--scheduler", flags.scheduler, "ps, ring, or greedy");
  auto* log_opt = simulate->add_option("--log", flags.log_path, "round log (JSON lines)");

  auto* baseline = app.add_subcommand("baseline", "run a baseline over several seeds");
  TopoOpts base_o = add_topology(baseline);
  auto* method_opt = baseline->add_option("--method", flags.method, "ps, ring, or greedy");
  auto* base_seeds = baseline->add_option("--seeds", flags.seeds, "number of seeds");
  auto* base_csv = baseline->add_option("--csv", flags.csv, "CSV output (stdout when omitted)");

  auto* train = app.add_subcommand("train", "train the hierarchical policies on one topology");
  TopoOpts train_o = add_topology(train);
  auto* train_ckpt = train->add_option("--checkpoint", flags.checkpoint, "checkpoint file (default checkpoint.json)");
  auto* train_log = train->add_option("--log", flags.train_log, "training curve CSV");
  auto* iters = train->add_option("--iterations", flags.train.outer_iterations, "outer iterations");
  auto* fts_ph = train->add_option("--fts-phases", flags.train.fts_phases, "flow-tree phases per iteration");
  auto* ws_ph = train->add_option("--ws-phases", flags.train.ws_phases, "workload phases per iteration");
  auto* rollouts = train->add_option("--rollouts", flags.train.rollouts, "episodes per phase");
  auto* lr = train->add_option("--lr", flags.train.learning_rate, "learning rate");
  auto* workers = train->add_option("--workers", flags.train.workers, "rollout threads");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with mode actions");
  auto* eval_ckpt = eval->add_option("--checkpoint", flags.checkpoint, "checkpoint file");
  auto* eval_seeds = eval->add_option("--seeds", flags.seeds, "number of evaluation seeds");

  auto* bench = app.add_subcommand("bench", "benchmark methods over presets");
  auto* presets_opt = bench->add_option("--presets", flags.presets, "preset labels")->delimiter(',');
  auto* methods_opt = bench->add_option("--methods", flags.methods, "ps, ring, greedy, rl")->delimiter(',');
  auto* bench_seeds = bench->add_option("--seeds", flags.seeds, "seeds per method");
  auto* bench_ckpt = bench->add_option("--checkpoint", flags.checkpoint_args, "LABEL=path, repeatable");
  auto* bench_csv_opt = bench->add_option("--csv", flags.csv, "CSV output");
  auto* bench_table_opt = bench->add_option("--table", flags.table, "text table output");

  auto* validate = app.add_subcommand("validate", "re-check a topology and workload dump");
  auto* val_topo = validate->add_option("--topo", flags.topo_file, "topology JSON file");
  auto* val_work = validate->add_option("--workloads", flags.workloads, "workload dump file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    load_config_file(rc);
    auto take = [](CLI::Option* opt, auto& dst, const auto& src) {
      if (opt && opt->count() > 0) dst = src;
    };
    take(seed_opt, rc.seed, flags.seed);
    take(outdir_opt, rc.out_dir, flags.out_dir);
    take(quiet_opt, rc.quiet, flags.quiet);
    for (const TopoOpts& o : {topo_o, trees_o, sim_o, base_o, train_o}) {
      take(o.preset, rc.preset, flags.preset);
      take(o.topo, rc.topo_file, flags.topo_file);
      take(o.n, rc.n, flags.n);
      take(o.k, rc.k, flags.k);
      take(o.switches, rc.switches, flags.switches);
      take(o.degree, rc.degree, flags.degree);
      take(o.servers, rc.servers, flags.servers);
    }
    take(topo_out, rc.out, flags.out);
    take(trees_out, rc.out, flags.out);
    take(sched_opt, rc.scheduler, flags.scheduler);
    take(log_opt, rc.log_path, flags.log_path);
    take(method_opt, rc.method, flags.method);
    take(base_seeds, rc.seeds, flags.seeds);
    take(eval_seeds, rc.seeds, flags.seeds);
    take(bench_seeds, rc.seeds, flags.seeds);
    take(base_csv, rc.csv, flags.csv);
    take(bench_csv_opt, rc.csv, flags.csv);
    take(bench_table_opt, rc.table, flags.table);
    take(train_ckpt, rc.checkpoint, flags.checkpoint);
    take(eval_ckpt, rc.checkpoint, flags.checkpoint);
    take(train_log, rc.train_log, flags.train_log);
    take(iters, rc.train.outer_iterations, flags.train.outer_iterations);
    take(fts_ph, rc.train.fts_phases, flags.train.fts_phases);
    take(ws_ph, rc.train.ws_phases, flags.train.ws_phases);
    take(rollouts, rc.train.rollouts, flags.train.rollouts);
    take(lr, rc.train.learning_rate, flags.train.learning_rate);
    take(workers, rc.train.workers, flags.train.workers);
    take(presets_opt, rc.presets, flags.presets);
    take(methods_opt, rc.methods, flags.methods);
    take(bench_ckpt, rc.checkpoint_args, flags.checkpoint_args);
    take(val_topo, rc.topo_file, flags.topo_file);
    take(val_work, rc.workloads, flags.workloads);
    rc.train.seed = rc.seed;  // one root seed drives every stream

    if (*topo) return cmd_topo(rc);
    if (*trees) return cmd_trees(rc);
    if (*simulate) return cmd_simulate(rc);
    if (*baseline) return cmd_baseline(rc);
    if (*train) return cmd_train(rc);
    if (*eval) return cmd_eval(rc);
    if (*bench) return cmd_bench(rc);
    if (*validate) return cmd_validate(rc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

#include "allreduce/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "allreduce/reference.hpp"

namespace allreduce {

namespace {

const std::vector<std::string> kMethods = {"ps", "ring", "greedy", "rl"};

std::shared_ptr<const SimInstance> instance_for(const std::string& method,
                                                const TopologyGraph& g) {
  if (method == "ps") return ps_instance(g);
  if (method == "ring") return ring_instance(g);
  return greedy_instance(g);  // greedy and rl share the merged trees
}

std::string method_title(const std::string& m) {
  if (m == "ps") return "Parameter Server (PS)";
  if (m == "ring") return "Ring AllReduce";
  if (m == "greedy") return "Random greedy";
  if (m == "rl") return "Hierarchical RL";
  return m;
}

}  // namespace

std::string format_number(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::vector<BenchRow> run_bench(const BenchRequest& request) {
  for (const std::string& m : request.methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      throw std::invalid_argument("unknown method '" + m + "'");
    }
  }
  if (request.seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  const bool wants_rl =
      std::find(request.methods.begin(), request.methods.end(), "rl") != request.methods.end();
  for (const std::string& label : request.presets) {
    find_preset(label);  // throws for unknown labels
    if (wants_rl && !request.checkpoints.count(label)) {
      throw std::invalid_argument("method rl needs a checkpoint for preset " + label);
    }
  }

  std::vector<BenchRow> rows;
  for (const std::string& label : request.presets) {
    const Preset& preset = find_preset(label);
    const TopologyGraph g = build_topology(preset.params);
    for (const std::string& method : request.methods) {
      BenchRow row;
      row.method = method;
      row.label = label;
      row.topology = g.name();
      row.nodes = g.num_nodes();
      row.edges = g.num_links();
      const auto inst = instance_for(method, g);
      row.workloads = inst->num_workloads();
      row.lower_bound = round_lower_bound(*inst);
      row.seeds = request.seeds;
      if (method == "rl") {
        const io::Checkpoint& cp = request.checkpoints.at(label);
        if (!(cp.topology == preset.params)) {
          throw std::invalid_argument("checkpoint for " + label + " was trained on another topology");
        }
        const rl::Trainer trainer = io::restore_trainer(cp);
        std::vector<std::uint64_t> seeds(request.seeds);
        std::iota(seeds.begin(), seeds.end(), request.first_seed);
        const rl::EvalSummary eval = trainer.evaluate(seeds);
        row.mean_rounds = eval.mean_rounds;
        row.std_rounds = eval.std_rounds;
      } else {
        const SeedSummary s =
            summarize_seeds(method_from_string(method), g, request.seeds, request.first_seed);
        row.mean_rounds = s.mean_rounds;
        row.std_rounds = s.std_rounds;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "method,label,topology,nodes,edges,workloads,seeds,mean_rounds,std_rounds,lower_bound\n";
  for (const BenchRow& r : rows) {
    out << r.method << ',' << r.label << ',' << '"' << r.topology << '"' << ',' << r.nodes << ','
        << r.edges << ',' << r.workloads << ',' << r.seeds << ',' << format_number(r.mean_rounds)
        << ',' << format_number(r.std_rounds) << ',' << r.lower_bound << '\n';
  }
  return out.str();
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::vector<std::string> labels, methods;
  for (const BenchRow& r : rows) {
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  auto find_row = [&](const std::string& label, const std::string& method) -> const BenchRow* {
    for (const BenchRow& r : rows) {
      if (r.label == label && r.method == method) return &r;
    }
    return nullptr;
  };

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {""};
  std::vector<std::string> shape = {"(N_Node, N_Edge)"};
  std::vector<std::string> count = {"Number of Workloads"};
  for (const std::string& label : labels) {
    const BenchRow* any = nullptr;
    for (const BenchRow& r : rows) {
      if (r.label == label) {
        any = &r;
        break;
      }
    }
    header.push_back(label + " " + any->topology);
    shape.push_back("(" + std::to_string(any->nodes) + ", " + std::to_string(any->edges) + ")");
    // Merged-tree count, the set the greedy and RL schedulers run on.
    count.push_back(std::to_string(build_all_trees(build_topology(find_preset(label).params)).total()));
  }
  cells.push_back(header);
  cells.push_back(shape);
  cells.push_back(count);
  for (const std::string& m : methods) {
    std::vector<std::string> line = {method_title(m)};
    for (const std::string& label : labels) {
      const BenchRow* r = find_row(label, m);
      line.push_back(r ? format_number(r->mean_rounds, 1) : "-");
    }
    cells.push_back(line);
  }
  if (labels.empty()) cells.resize(1);

  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      if (c) out << " | ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << cells[i][c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << cells[i][c];
      }
    }
    out << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out << std::string(total + 3 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

std::string baseline_csv(const std::vector<BaselineCsvRow>& rows) {
  std::ostringstream out;
  out << "method,topology,seed,rounds,mean_utilization\n";
  for (const BaselineCsvRow& r : rows) {
    out << r.method << ',' << '"' << r.topology << '"' << ',' << r.seed << ',' << r.rounds << ','
        << format_number(r.mean_utilization) << '\n';
  }
  return out.str();
}

std::string training_csv(const std::vector<rl::PhaseStats>& curve) {
  std::ostringstream out;
  out << "phase,iteration,step,mean_rounds,mean_return,loss\n";
  for (const rl::PhaseStats& s : curve) {
    out << (s.evaluation ? "eval" : rl::to_string(s.flavor)) << ',' << s.iteration << ',' << s.phase << ','
        << format_number(s.mean_rounds) << ',' << format_number(s.mean_return, 6) << ','
        << format_number(s.loss, 6) << '\n';
  }
  return out.str();
}

}  // namespace allreduce

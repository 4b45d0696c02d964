#include "allreduce/io.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace allreduce::io {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

void expect_format(const json& doc, const char* format, int version) {
  if (!doc.is_object() || doc.value("format", "") != format) {
    throw FormatError(std::string("not a ") + format + " document");
  }
  if (doc.value("version", -1) != version) {
    throw FormatError(std::string(format) + ": unsupported version " +
                      doc.value("version", json(-1)).dump());
  }
}

// Wraps nlohmann type/key errors so callers see one exception type.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

json params_json(const TopologyParams& p) {
  json j = {{"family", to_string(p.family)}, {"n", p.n}, {"k", p.k}};
  if (p.family == Family::kJellyfish) {
    j["num_switches"] = p.num_switches;
    j["switch_degree"] = p.switch_degree;
    j["num_servers"] = p.num_servers;
    j["seed"] = p.seed;
  }
  return j;
}

TopologyParams params_from(const json& j) {
  TopologyParams p;
  p.family = family_from_string(j.at("family").get<std::string>());
  p.n = j.value("n", 0);
  p.k = j.value("k", 0);
  p.num_switches = j.value("num_switches", 0);
  p.switch_degree = j.value("switch_degree", 0);
  p.num_servers = j.value("num_servers", 0);
  p.seed = j.value("seed", std::uint64_t{0});
  return p;
}

json config_json(const rl::TrainConfig& c) {
  return {{"outer_iterations", c.outer_iterations},
          {"fts_phases", c.fts_phases},
          {"ws_phases", c.ws_phases},
          {"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"clip", c.clip},
          {"entropy_coef", c.entropy_coef},
          {"value_coef", c.value_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"rollouts", c.rollouts},
          {"epochs", c.epochs},
          {"minibatches", c.minibatches},
          {"hidden", c.hidden},
          {"terminate_logit", c.terminate_logit},
          {"episode_cap_factor", c.episode_cap_factor},
          {"workers", c.workers},
          {"keep_best", c.keep_best},
          {"seed", c.seed}};
}

rl::TrainConfig config_from(const json& j) {
  rl::TrainConfig c;
  const json defaults = config_json(c);
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw FormatError("train config: unknown key '" + key + "'");
  }
  c.outer_iterations = j.value("outer_iterations", c.outer_iterations);
  c.fts_phases = j.value("fts_phases", c.fts_phases);
  c.ws_phases = j.value("ws_phases", c.ws_phases);
  c.gamma = j.value("gamma", c.gamma);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.clip = j.value("clip", c.clip);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.value_coef = j.value("value_coef", c.value_coef);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.rollouts = j.value("rollouts", c.rollouts);
  c.epochs = j.value("epochs", c.epochs);
  c.minibatches = j.value("minibatches", c.minibatches);
  c.hidden = j.value("hidden", c.hidden);
  c.terminate_logit = j.value("terminate_logit", c.terminate_logit);
  c.episode_cap_factor = j.value("episode_cap_factor", c.episode_cap_factor);
  c.workers = j.value("workers", c.workers);
  c.keep_best = j.value("keep_best", c.keep_best);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string topology_to_json(const TopologyGraph& g, const std::string& preset) {
  json nodes = json::array();
  for (const NodeRef& n : g.nodes()) nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}});
  json links = json::array();
  for (const Link& l : g.links()) links.push_back({{"id", l.id}, {"a", l.a}, {"b", l.b}});
  json doc = {{"format", "allreduce-topology"},
              {"version", kTopologyVersion},
              {"name", g.name()},
              {"preset", preset},
              {"params", params_json(g.params())},
              {"seed", g.params().seed},
              {"nodes", nodes},
              {"links", links}};
  return doc.dump(1);
}

TopologyGraph topology_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_format(doc, "allreduce-topology", kTopologyVersion);
  return guarded("topology", [&] {
    int servers = 0, switches = 0;
    int expected = 0;
    for (const json& n : doc.at("nodes")) {
      if (n.at("id").get<int>() != expected++) throw FormatError("topology: node ids must be dense");
      const std::string kind = n.at("kind").get<std::string>();
      if (kind == "server") {
        if (switches > 0) throw FormatError("topology: servers must precede switches");
        ++servers;
      } else if (kind == "switch") {
        ++switches;
      } else {
        throw FormatError("topology: unknown node kind '" + kind + "'");
      }
    }
    std::vector<Link> links;
    for (const json& l : doc.at("links")) {
      links.push_back({l.at("id").get<int>(), l.at("a").get<int>(), l.at("b").get<int>()});
    }
    try {
      return TopologyGraph(doc.at("name").get<std::string>(), params_from(doc.at("params")),
                           servers, switches, std::move(links));
    } catch (const TopologyError& e) {
      throw FormatError(std::string("topology: ") + e.what());
    }
  });
}

// ---------------------------------------------------------------------------

std::string workloads_to_json(const TopologyGraph& g, const WorkloadSet& set) {
  json list = json::array();
  for (const WorkloadTree& t : set.trees) {
    for (const Workload& w : t.workloads) {
      list.push_back({{"id", w.id},
                      {"root", w.root},
                      {"tail", w.tail},
                      {"head", w.head},
                      {"link", w.hop.link},
                      {"dir", static_cast<int>(w.hop.dir)},
                      {"prefixes", w.prefixes},
                      {"merged_from", w.merged_from}});
    }
  }
  json doc = {{"format", "allreduce-workloads"},
              {"version", kWorkloadVersion},
              {"topology", g.name()},
              {"count", set.total()},
              {"workloads", list}};
  return doc.dump(1);
}

WorkloadSet workloads_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_format(doc, "allreduce-workloads", kWorkloadVersion);
  return guarded("workloads", [&] {
    WorkloadSet set;
    std::map<int, std::size_t> tree_of_root;
    for (const json& j : doc.at("workloads")) {
      Workload w;
      w.id = j.at("id").get<int>();
      w.root = j.at("root").get<int>();
      w.tail = j.at("tail").get<int>();
      w.head = j.at("head").get<int>();
      w.hop.link = j.at("link").get<int>();
      const int dir = j.at("dir").get<int>();
      if (dir != 0 && dir != 1) throw FormatError("workloads: dir must be 0 or 1");
      w.hop.dir = static_cast<Direction>(dir);
      w.prefixes = j.at("prefixes").get<std::vector<int>>();
      w.merged_from = j.value("merged_from", std::vector<int>{});
      auto [it, fresh] = tree_of_root.try_emplace(w.root, set.trees.size());
      if (fresh) set.trees.push_back(WorkloadTree{w.root, w.id, {}});
      set.trees[it->second].workloads.push_back(std::move(w));
    }
    return set;
  });
}

// ---------------------------------------------------------------------------

void write_round_log(std::ostream& out, const SimState& state, const std::string& topology,
                     const std::string& scheduler, std::uint64_t seed) {
  out << json{{"format", "allreduce-round-log"},
              {"version", kRoundLogVersion},
              {"topology", topology},
              {"scheduler", scheduler},
              {"seed", seed},
              {"workloads", state.instance().num_workloads()}}
             .dump()
      << '\n';
  const auto& log = state.log();
  for (std::size_t r = 0; r < log.size(); ++r) {
    out << json{{"round", r}, {"selected", log[r]}, {"n_on", log[r].size()}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string topology_params_to_json(const TopologyParams& p) { return params_json(p).dump(); }

TopologyParams topology_params_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded("topology params", [&] { return params_from(j); });
}

std::string train_config_to_json(const rl::TrainConfig& c) { return config_json(c).dump(1); }

rl::TrainConfig train_config_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.is_object()) throw FormatError("train config must be a JSON object");
  return guarded("train config", [&] { return config_from(j); });
}

std::string checkpoint_to_json(const Checkpoint& c) {
  json doc = {{"format", "allreduce-checkpoint"},
              {"version", kCheckpointVersion},
              {"topology", params_json(c.topology)},
              {"config", config_json(c.config)},
              {"iteration", c.iteration},
              {"fts",
               {{"observation_size", c.fts.observation_size()},
                {"num_trees", c.fts.num_trees()},
                {"hidden", c.fts.hidden()},
                {"params", c.fts.params()}}},
              {"ws", {{"hidden", c.ws.hidden()}, {"params", c.ws.params()}}},
              {"rng", c.rng_state}};
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_format(doc, "allreduce-checkpoint", kCheckpointVersion);
  return guarded("checkpoint", [&] {
    Checkpoint c;
    c.topology = params_from(doc.at("topology"));
    c.config = config_from(doc.at("config"));
    c.iteration = doc.at("iteration").get<int>();
    Rng scratch = make_rng(0, "checkpoint");
    const json& f = doc.at("fts");
    c.fts = rl::FtsPolicy(f.at("observation_size").get<int>(), f.at("num_trees").get<int>(),
                          f.at("hidden").get<int>(), scratch);
    const auto fp = f.at("params").get<std::vector<double>>();
    if (fp.size() != c.fts.num_params()) throw FormatError("checkpoint: fts parameter count");
    std::copy(fp.begin(), fp.end(), c.fts.mutable_params().begin());
    const json& w = doc.at("ws");
    c.ws = rl::WsPolicy(w.at("hidden").get<int>(), scratch);
    const auto wp = w.at("params").get<std::vector<double>>();
    if (wp.size() != c.ws.num_params()) throw FormatError("checkpoint: ws parameter count");
    std::copy(wp.begin(), wp.end(), c.ws.mutable_params().begin());
    c.rng_state = doc.at("rng").get<std::string>();
    return c;
  });
}

Checkpoint make_checkpoint(const rl::Trainer& trainer, const TopologyParams& topology,
                           int iteration) {
  return {topology,           trainer.config(),     iteration,
          trainer.fts_policy(), trainer.ws_policy(), serialize_rng(trainer.rng())};
}

rl::Trainer restore_trainer(const Checkpoint& c) {
  rl::Trainer trainer(build_topology(c.topology), c.config);
  auto copy_into = [](std::span<const double> from, std::span<double> to, const char* what) {
    if (from.size() != to.size()) {
      throw FormatError(std::string("checkpoint: ") + what + " shape does not match topology");
    }
    std::copy(from.begin(), from.end(), to.begin());
  };
  copy_into(c.fts.params(), trainer.fts_policy().mutable_params(), "fts policy");
  copy_into(c.ws.params(), trainer.ws_policy().mutable_params(), "ws policy");
  if (!c.rng_state.empty()) trainer.set_rng(deserialize_rng(c.rng_state));
  return trainer;
}

// ---------------------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace allreduce::io

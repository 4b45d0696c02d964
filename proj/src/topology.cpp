#include "allreduce/topology.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <utility>

#include "allreduce/rng.hpp"

namespace allreduce {

const char* to_string(NodeKind kind) {
  return kind == NodeKind::kServer ? "server" : "switch";
}

const char* to_string(Family family) {
  switch (family) {
    case Family::kBCube: return "bcube";
    case Family::kDCell: return "dcell";
    case Family::kJellyfish: return "jellyfish";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "bcube") return Family::kBCube;
  if (name == "dcell") return Family::kDCell;
  if (name == "jellyfish") return Family::kJellyfish;
  throw TopologyError("unknown topology family '" + name + "'");
}

TopologyGraph::TopologyGraph(std::string name, TopologyParams params,
                             int num_servers, int num_switches,
                             std::vector<Link> links)
    : name_(std::move(name)),
      params_(params),
      num_servers_(num_servers),
      links_(std::move(links)) {
  if (num_servers < 0 || num_switches < 0) {
    throw TopologyError("negative node count");
  }
  const int total = num_servers + num_switches;
  nodes_.reserve(total);
  for (int i = 0; i < total; ++i) {
    nodes_.push_back({i, i < num_servers ? NodeKind::kServer : NodeKind::kSwitch});
  }
  adjacency_.resize(total);
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (l.id != static_cast<int>(i)) throw TopologyError("link ids must be dense");
    if (l.a < 0 || l.b < 0 || l.a >= total || l.b >= total) {
      throw TopologyError("link endpoint out of range");
    }
    if (l.a == l.b) throw TopologyError("self-loop on node " + std::to_string(l.a));
    if (!seen.insert(std::minmax(l.a, l.b)).second) {
      throw TopologyError("duplicate link between " + std::to_string(l.a) +
                          " and " + std::to_string(l.b));
    }
    adjacency_[l.a].push_back({l.b, l.id});
    adjacency_[l.b].push_back({l.a, l.id});
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end(),
              [](const Adjacent& x, const Adjacent& y) { return x.neighbor < y.neighbor; });
  }
}

int TopologyGraph::tail_of(const Hop& hop) const {
  const Link& l = links_.at(hop.link);
  return hop.dir == Direction::kForward ? l.a : l.b;
}

int TopologyGraph::head_of(const Hop& hop) const {
  const Link& l = links_.at(hop.link);
  return hop.dir == Direction::kForward ? l.b : l.a;
}

Hop TopologyGraph::hop_from(int link, int from) const {
  const Link& l = links_.at(link);
  if (l.a == from) return {link, Direction::kForward};
  if (l.b == from) return {link, Direction::kReverse};
  throw TopologyError("node " + std::to_string(from) + " is not an endpoint of link " +
                      std::to_string(link));
}

bool TopologyGraph::is_connected() const {
  if (nodes_.empty()) return true;
  const auto dist = distances_to(*this, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

namespace {

long long checked_pow(int base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > kMaxTopologyNodes) throw TopologyError("topology exceeds node limit");
  }
  return r;
}

}  // namespace

TopologyGraph build_bcube(int n, int k) {
  if (n < 2) throw TopologyError("bcube: n must be >= 2");
  if (k < 0) throw TopologyError("bcube: k must be >= 0");
  const long long servers = checked_pow(n, k + 1);
  const long long per_level = servers / n;
  const long long switches = (k + 1) * per_level;
  if (servers + switches > kMaxTopologyNodes) {
    throw TopologyError("bcube: topology exceeds node limit");
  }

  // Level-l switch joins the n servers whose addresses differ only in digit l.
  std::vector<Link> links;
  links.reserve(static_cast<std::size_t>((k + 1) * servers));
  long long low = 1;  // n^l
  for (int level = 0; level <= k; ++level) {
    for (long long s = 0; s < servers; ++s) {
      const long long index = (s / (low * n)) * low + s % low;
      const int sw = static_cast<int>(servers + level * per_level + index);
      links.push_back({static_cast<int>(links.size()), static_cast<int>(s), sw});
    }
    low *= n;
  }
  TopologyParams params{.family = Family::kBCube, .n = n, .k = k};
  return TopologyGraph("bcube(" + std::to_string(n) + "," + std::to_string(k) + ")",
                       params, static_cast<int>(servers), static_cast<int>(switches),
                       std::move(links));
}

TopologyGraph build_dcell(int n, int level) {
  if (level != 1) throw TopologyError("dcell: only level 1 is supported");
  if (n < 2) throw TopologyError("dcell: n must be >= 2");
  const int cells = n + 1;
  const int servers = n * cells;
  if (servers + cells > kMaxTopologyNodes) {
    throw TopologyError("dcell: topology exceeds node limit");
  }
  auto server = [n](int cell, int index) { return cell * n + index; };

  std::vector<Link> links;
  for (int c = 0; c < cells; ++c) {
    for (int j = 0; j < n; ++j) {
      links.push_back({static_cast<int>(links.size()), server(c, j), servers + c});
    }
  }
  // Standard DCell_1 wiring: server [i, j-1] <-> server [j, i] for i < j.
  for (int i = 0; i < cells; ++i) {
    for (int j = i + 1; j < cells; ++j) {
      links.push_back({static_cast<int>(links.size()), server(i, j - 1), server(j, i)});
    }
  }
  TopologyParams params{.family = Family::kDCell, .n = n, .k = 1};
  return TopologyGraph("dcell(" + std::to_string(n) + ",1)", params, servers, cells,
                       std::move(links));
}

namespace {

// Random simple d-regular graph on `count` vertices by stub pairing; returns
// false when the pairing produced a self-loop or a parallel edge.
bool try_regular_pairing(int count, int degree, Rng& rng,
                         std::vector<std::pair<int, int>>& edges) {
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(count) * degree);
  for (int v = 0; v < count; ++v) {
    for (int d = 0; d < degree; ++d) stubs.push_back(v);
  }
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::set<std::pair<int, int>> seen;
  edges.clear();
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    auto e = std::minmax(stubs[i], stubs[i + 1]);
    if (e.first == e.second || !seen.insert(e).second) return false;
    edges.emplace_back(e);
  }
  return true;
}

bool edges_connected(int count, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = count;
  for (auto [a, b] : edges) {
    int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

}  // namespace

TopologyGraph build_jellyfish(int num_switches, int switch_degree, int num_servers,
                              std::uint64_t seed) {
  if (num_switches < 2) throw TopologyError("jellyfish: need at least 2 switches");
  if (switch_degree < 1 || switch_degree >= num_switches) {
    throw TopologyError("jellyfish: switch degree must be in [1, num_switches)");
  }
  if ((static_cast<long long>(num_switches) * switch_degree) % 2 != 0) {
    throw TopologyError("jellyfish: num_switches * switch_degree must be even");
  }
  if (num_servers < 1) throw TopologyError("jellyfish: need at least one server");
  if (num_switches + num_servers > kMaxTopologyNodes) {
    throw TopologyError("jellyfish: topology exceeds node limit");
  }
  if (switch_degree == 1 && num_switches > 2) {
    throw TopologyError("jellyfish: degree-1 switch graph cannot be connected");
  }

  std::vector<std::pair<int, int>> edges;
  bool found = false;
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts && !found; ++attempt) {
    Rng rng = make_rng(seed, "jellyfish/" + std::to_string(attempt));
    found = try_regular_pairing(num_switches, switch_degree, rng, edges) &&
            edges_connected(num_switches, edges);
  }
  if (!found) throw TopologyError("jellyfish: could not realize a connected regular graph");
  std::sort(edges.begin(), edges.end());

  // Servers first, each attached round-robin to one switch; then the switch mesh.
  std::vector<Link> links;
  for (int s = 0; s < num_servers; ++s) {
    links.push_back({static_cast<int>(links.size()), s, num_servers + s % num_switches});
  }
  for (auto [a, b] : edges) {
    links.push_back({static_cast<int>(links.size()), num_servers + a, num_servers + b});
  }
  TopologyParams params{.family = Family::kJellyfish,
                        .num_switches = num_switches,
                        .switch_degree = switch_degree,
                        .num_servers = num_servers,
                        .seed = seed};
  return TopologyGraph("jellyfish(" + std::to_string(num_switches) + "," +
                           std::to_string(switch_degree) + "," +
                           std::to_string(num_servers) + ")",
                       params, num_servers, num_switches, std::move(links));
}

TopologyGraph build_topology(const TopologyParams& p) {
  switch (p.family) {
    case Family::kBCube: return build_bcube(p.n, p.k);
    case Family::kDCell: return build_dcell(p.n, p.k);
    case Family::kJellyfish:
      return build_jellyfish(p.num_switches, p.switch_degree, p.num_servers, p.seed);
  }
  throw TopologyError("unknown family");
}

const std::vector<Preset>& table_presets() {
  static const std::vector<Preset> presets = [] {
    auto bcube = [](int n, int k) {
      return TopologyParams{.family = Family::kBCube, .n = n, .k = k};
    };
    auto dcell = [](int n) {
      return TopologyParams{.family = Family::kDCell, .n = n, .k = 1};
    };
    auto jelly = [](int sw, int deg, int servers) {
      return TopologyParams{.family = Family::kJellyfish,
                            .num_switches = sw,
                            .switch_degree = deg,
                            .num_servers = servers,
                            .seed = 0};
    };
    return std::vector<Preset>{
        {"B1", bcube(3, 1)},      {"B2", bcube(4, 1)},      {"B3", bcube(5, 1)},
        {"D1", dcell(4)},         {"D2", dcell(5)},         {"D3", dcell(6)},
        {"J1", jelly(10, 4, 10)}, {"J2", jelly(15, 4, 15)}, {"J3", jelly(19, 4, 21)},
    };
  }();
  return presets;
}

const Preset& find_preset(const std::string& label) {
  for (const auto& p : table_presets()) {
    if (p.label == label) return p;
  }
  throw TopologyError("unknown preset '" + label + "'");
}

std::vector<int> distances_to(const TopologyGraph& g, int dst) {
  std::vector<int> dist(g.num_nodes(), -1);
  std::deque<int> queue{dst};
  dist.at(dst) = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& adj : g.neighbors(u)) {
      if (dist[adj.neighbor] < 0) {
        dist[adj.neighbor] = dist[u] + 1;
        queue.push_back(adj.neighbor);
      }
    }
  }
  return dist;
}

Route shortest_route(const TopologyGraph& g, int src, int dst) {
  if (src < 0 || src >= g.num_nodes() || dst < 0 || dst >= g.num_nodes()) {
    throw TopologyError("route endpoint out of range");
  }
  Route route{src, dst, {}};
  if (src == dst) return route;
  const auto dist = distances_to(g, dst);
  if (dist[src] < 0) {
    throw std::logic_error("internal: no route from " + std::to_string(src) + " to " +
                           std::to_string(dst));
  }
  int cur = src;
  while (cur != dst) {
    // Neighbors are sorted by id, so the first closer neighbor is the smallest.
    for (const auto& adj : g.neighbors(cur)) {
      if (dist[adj.neighbor] == dist[cur] - 1) {
        route.hops.push_back(g.hop_from(adj.link, cur));
        cur = adj.neighbor;
        break;
      }
    }
  }
  return route;
}

}  // namespace allreduce

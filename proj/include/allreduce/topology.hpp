#ifndef ALLREDUCE_TOPOLOGY_HPP_
#define ALLREDUCE_TOPOLOGY_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace allreduce {

enum class NodeKind : std::uint8_t { kServer, kSwitch };

const char* to_string(NodeKind kind);

struct NodeRef {
  int id = 0;
  NodeKind kind = NodeKind::kServer;

  bool is_server() const { return kind == NodeKind::kServer; }
  bool operator==(const NodeRef&) const = default;
};

// Undirected, unit-capacity physical link. Capacity is one workload per round
// in each direction, so the schedulable resource is (link, direction).
struct Link {
  int id = 0;
  int a = 0;
  int b = 0;

  bool operator==(const Link&) const = default;
};

// kForward travels a -> b, kReverse travels b -> a.
enum class Direction : std::uint8_t { kForward = 0, kReverse = 1 };

struct Hop {
  int link = 0;
  Direction dir = Direction::kForward;

  bool operator==(const Hop&) const = default;
};

// Dense index of a directed link slot: 2 * link + dir.
inline int slot_index(const Hop& hop) {
  return 2 * hop.link + static_cast<int>(hop.dir);
}

struct Route {
  int src = 0;
  int dst = 0;
  std::vector<Hop> hops;

  std::size_t length() const { return hops.size(); }
  bool empty() const { return hops.empty(); }
};

class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Family : std::uint8_t { kBCube, kDCell, kJellyfish };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

// Generator parameters. Only the fields relevant to the family are meaningful.
struct TopologyParams {
  Family family = Family::kBCube;
  int n = 0;                // BCube port count / DCell servers per cell
  int k = 0;                // BCube level / DCell level (must be 1)
  int num_switches = 0;     // Jellyfish
  int switch_degree = 0;    // Jellyfish
  int num_servers = 0;      // Jellyfish
  std::uint64_t seed = 0;   // Jellyfish

  bool operator==(const TopologyParams&) const = default;
};

// Nodes are numbered servers first, then switches. Immutable once built.
class TopologyGraph {
 public:
  TopologyGraph() = default;
  TopologyGraph(std::string name, TopologyParams params, int num_servers,
                int num_switches, std::vector<Link> links);

  const std::string& name() const { return name_; }
  const TopologyParams& params() const { return params_; }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_servers() const { return num_servers_; }
  int num_switches() const { return num_nodes() - num_servers_; }
  int num_links() const { return static_cast<int>(links_.size()); }

  const std::vector<NodeRef>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const NodeRef& node(int id) const { return nodes_.at(id); }
  const Link& link(int id) const { return links_.at(id); }

  // (neighbor, link id) pairs sorted by neighbor id.
  struct Adjacent {
    int neighbor;
    int link;
  };
  std::span<const Adjacent> neighbors(int node) const {
    return adjacency_.at(node);
  }

  // Node a hop departs from / arrives at.
  int tail_of(const Hop& hop) const;
  int head_of(const Hop& hop) const;
  // The hop traversing `link` starting at `from`.
  Hop hop_from(int link, int from) const;

  bool is_connected() const;

 private:
  std::string name_;
  TopologyParams params_;
  int num_servers_ = 0;
  std::vector<NodeRef> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<Adjacent>> adjacency_;
};

// Upper bound on nodes any generator will produce.
inline constexpr int kMaxTopologyNodes = 4096;

TopologyGraph build_bcube(int n, int k);
TopologyGraph build_dcell(int n, int level = 1);
TopologyGraph build_jellyfish(int num_switches, int switch_degree,
                              int num_servers, std::uint64_t seed);
TopologyGraph build_topology(const TopologyParams& params);

// Named presets used by the benchmark harness: B1..B3, D1..D3, J1..J3.
struct Preset {
  std::string label;
  TopologyParams params;
};
const std::vector<Preset>& table_presets();
const Preset& find_preset(const std::string& label);

// Breadth-first shortest path. Among equal-length paths the one taking the
// smallest-id next hop at every step is returned, so routes are unique.
Route shortest_route(const TopologyGraph& g, int src, int dst);

// Hop distances from every node to `dst`; -1 where unreachable.
std::vector<int> distances_to(const TopologyGraph& g, int dst);

}  // namespace allreduce

#endif  // ALLREDUCE_TOPOLOGY_HPP_

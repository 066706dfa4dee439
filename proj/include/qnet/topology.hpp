#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnet/types.hpp"

namespace qnet {

using NodeIndex = int;

/// Unordered node pair, stored with u < v.
struct NodePair {
  NodeIndex u{0};
  NodeIndex v{0};

  NodePair() = default;
  NodePair(NodeIndex a, NodeIndex b) : u(a < b ? a : b), v(a < b ? b : a) {}

  [[nodiscard]] bool contains(NodeIndex n) const { return u == n || v == n; }
  auto operator<=>(const NodePair&) const = default;
};

struct Edge {
  NodePair nodes;
  double alpha{0.0};  // ebits per time step
};

/// Undirected simple graph with per-edge generation rates.
///
/// Node names are kept sorted; a node's index is its position in that order,
/// so every ordering derived from indices is lexicographic in the names.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  explicit NetworkGraph(std::vector<std::string> node_names);

  void add_edge(NodeIndex a, NodeIndex b, double alpha);
  void add_edge(const std::string& a, const std::string& b, double alpha);

  [[nodiscard]] int node_count() const { return static_cast<int>(names_.size()); }
  [[nodiscard]] int edge_count() const { return static_cast<int>(edges_.size()); }
  [[nodiscard]] const std::string& name(NodeIndex i) const { return names_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] NodeIndex index(const std::string& name) const;
  [[nodiscard]] std::optional<NodeIndex> find(const std::string& name) const;

  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] const std::vector<NodeIndex>& neighbors(NodeIndex i) const {
    return adjacency_.at(static_cast<std::size_t>(i));
  }
  [[nodiscard]] bool has_edge(NodeIndex a, NodeIndex b) const;
  [[nodiscard]] std::optional<double> edge_rate(NodeIndex a, NodeIndex b) const;
  void set_uniform_rate(double alpha);
  void set_edge_rate(NodeIndex a, NodeIndex b, double alpha);

  [[nodiscard]] bool is_connected() const;

  /// Induced subgraph on the given nodes; rates are kept.
  [[nodiscard]] NetworkGraph induced(const std::vector<NodeIndex>& keep) const;
  void remove_edge(NodeIndex a, NodeIndex b);

  [[nodiscard]] std::string pair_name(NodePair p) const { return name(p.u) + "-" + name(p.v); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, NodeIndex> by_name_;
  std::vector<Edge> edges_;
  std::map<NodePair, std::size_t> edge_slot_;
  std::vector<std::vector<NodeIndex>> adjacency_;
};

enum class TopologyKind { grid, holed_grid, erdos_renyi, watts_strogatz, custom };

struct TopologyParams {
  int rows{0};
  int cols{0};
  int nodes{0};
  double probability{0.0};
  int neighbors{0};
  std::string edge_list_path;
  double alpha{1.0};  // uniform rate for generated kinds
};

// Random kinds resample with seed, seed+1, ... this many times before failing.
inline constexpr int kMaxGenerationAttempts = 100;

NetworkGraph grid_graph(int rows, int cols, double alpha);
NetworkGraph holed_grid_graph(int rows, int cols, double removal_prob, std::uint64_t seed, double alpha);
NetworkGraph erdos_renyi_graph(int n, double p, std::uint64_t seed, double alpha);
NetworkGraph watts_strogatz_graph(int n, int neighbors, double p, std::uint64_t seed, double alpha);

/// Dispatches on `kind`. Random kinds require a seed; `custom` reads the
/// edge list at `params.edge_list_path`.
NetworkGraph generate_topology(TopologyKind kind, const TopologyParams& params,
                               std::optional<std::uint64_t> seed);

/// Edge-list format: one `node_a node_b alpha` triple per line. Blank lines
/// and lines starting with '#' are ignored.
NetworkGraph read_edge_list(std::istream& in);
NetworkGraph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const NetworkGraph& graph);

using Route = std::vector<NodeIndex>;

void validate_route(const NetworkGraph& graph, const Route& route);

/// BFS shortest path with neighbors visited in index order. Edges listed in
/// `removed` are treated as absent.
std::optional<Route> shortest_path(const NetworkGraph& graph, NodeIndex from, NodeIndex to,
                                   const std::vector<NodePair>& removed = {});

/// First route: a shortest path. Second route: a shortest path after removing
/// each first-route edge independently with `removal_prob`; dropped when it
/// duplicates the first or the endpoints become disconnected.
std::vector<Route> compute_routes(const NetworkGraph& graph, NodeIndex a, NodeIndex b,
                                  double removal_prob, std::uint64_t seed);

enum class PairKind { fixed, parasitic };

struct UserPair {
  NodePair endpoints;
  double beta{0.0};  // demands per time step
  std::vector<Route> routes;
  PairKind kind{PairKind::fixed};
};

/// Swap at `swap` from queues (left, swap) and (swap, right) into (left, right).
/// Stored with left < right.
struct Transition {
  NodeIndex left{0};
  NodeIndex swap{0};
  NodeIndex right{0};

  Transition() = default;
  Transition(NodeIndex a, NodeIndex middle, NodeIndex b)
      : left(a < b ? a : b), swap(middle), right(a < b ? b : a) {}

  [[nodiscard]] NodePair first_parent() const { return {left, swap}; }
  [[nodiscard]] NodePair second_parent() const { return {swap, right}; }
  [[nodiscard]] NodePair child() const { return {left, right}; }
  auto operator<=>(const Transition&) const = default;
};

/// One transition per ordered triple on each route, deduplicated, sorted.
std::vector<Transition> enumerate_transitions(std::span<const Route> routes);

/// Every unordered pair of nodes that co-occur on some route.
std::vector<NodePair> route_pairs(std::span<const Route> routes);

/// Dense index over the queues of a model.
class QueueIndex {
 public:
  QueueIndex() = default;
  /// Keeps the given order. A queue is physical iff its pair is a graph edge.
  QueueIndex(std::vector<NodePair> pairs, const NetworkGraph& graph);

  [[nodiscard]] int size() const { return static_cast<int>(pairs_.size()); }
  [[nodiscard]] const NodePair& pair(int q) const { return pairs_.at(static_cast<std::size_t>(q)); }
  [[nodiscard]] const std::vector<NodePair>& pairs() const { return pairs_; }
  [[nodiscard]] bool is_physical(int q) const { return physical_.at(static_cast<std::size_t>(q)); }
  [[nodiscard]] std::optional<int> find(NodePair p) const;
  /// Throws ModelError when the pair is not indexed.
  [[nodiscard]] int at(NodePair p) const;
  /// Queues with `node` as an endpoint (the connected-queue set of that node).
  [[nodiscard]] std::vector<int> incident(NodeIndex node) const;

 private:
  std::vector<NodePair> pairs_;
  std::vector<bool> physical_;
  std::map<NodePair, int> slot_;
};

struct ModelMatrices {
  IncidenceMatrix m;        // N_queues x N_transitions
  IncidenceMatrix m_tilde;  // [M | -I]
  IncidenceMatrix n_tilde;  // [0 | -I]
};

ModelMatrices build_matrices(const QueueIndex& queues, std::span<const Transition> transitions);

/// Span of each queue: its level in the swap dependency graph. Queues without
/// producing transitions have span 1; a produced queue sits one level above
/// the deepest parent feeding it. On single-route models this equals the hop
/// count the pair covers along the route. Throws ModelError for a queue that
/// is neither physical nor on any route.
std::vector<int> queue_spans(const QueueIndex& queues, std::span<const Transition> transitions,
                             std::span<const Route> routes);

struct OperationRanks {
  std::vector<int> transition;   // per transition
  std::vector<int> consumption;  // per queue
  int max_rank{0};
};

/// Consumption on a span-s queue gets rank 2(s-1); a transition whose child
/// has span s gets 2s-3.
OperationRanks assign_ranks(const QueueIndex& queues, std::span<const Transition> transitions,
                            std::span<const Route> routes);

struct NetworkModel {
  NetworkGraph graph;
  std::vector<UserPair> pairs;
  QueueIndex queues;
  std::vector<Transition> transitions;
  std::map<Transition, int> transition_slot;
  std::vector<std::array<int, 3>> transition_queues;  // first parent, second parent, child
  ModelMatrices matrices;
  std::vector<int> span;
  OperationRanks ranks;
  RealVector arrival_rate;  // alpha per queue, zero on virtual queues
  RealVector demand_rate;   // beta per queue, zero off user pairs
  std::vector<bool> user_pair_queue;
  double eta{1.0};

  [[nodiscard]] int n_queues() const { return queues.size(); }
  [[nodiscard]] int n_transitions() const { return static_cast<int>(transitions.size()); }
  [[nodiscard]] int n_operations() const { return n_transitions() + n_queues(); }
  [[nodiscard]] int consumption_op(int queue) const { return n_transitions() + queue; }
  [[nodiscard]] int operation_rank(int op) const;
  [[nodiscard]] std::optional<int> transition_index(const Transition& t) const;
  [[nodiscard]] int queue(const std::string& a, const std::string& b) const {
    return queues.at(NodePair(graph.index(a), graph.index(b)));
  }
  [[nodiscard]] int transition(const std::string& a, const std::string& middle, const std::string& b) const;
  [[nodiscard]] std::string operation_name(int op) const;
};

/// Builds the full model. Queues are ordered by (span, pair) and transitions
/// by (child span, left, swap, right).
NetworkModel build_network_model(NetworkGraph graph, std::vector<UserPair> pairs, double eta);

/// Replaces the demand rates of the user pairs (same order as model.pairs).
void set_demand_rates(NetworkModel& model, const std::vector<double>& betas);

/// Canonical text form; identical models serialize to identical bytes.
std::string serialize_model(const NetworkModel& model);

}  // namespace qnet

#include "qnet/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "qnet/errors.hpp"
#include "qnet/rng.hpp"

namespace qnet {

// ---------------------------------------------------------------------------
// NetworkGraph

NetworkGraph::NetworkGraph(std::vector<std::string> node_names) : names_(std::move(node_names)) {
  std::sort(names_.begin(), names_.end());
  if (std::adjacent_find(names_.begin(), names_.end()) != names_.end()) {
    throw ModelError("duplicate node name");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    by_name_.emplace(names_[i], static_cast<NodeIndex>(i));
  }
  adjacency_.resize(names_.size());
}

NodeIndex NetworkGraph::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ModelError("unknown node '" + name + "'");
  return it->second;
}

std::optional<NodeIndex> NetworkGraph::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

void NetworkGraph::add_edge(NodeIndex a, NodeIndex b, double alpha) {
  if (a == b) throw ModelError("self-loop on node '" + name(a) + "'");
  if (a < 0 || b < 0 || a >= node_count() || b >= node_count()) throw ModelError("edge endpoint out of range");
  if (!(alpha >= 0.0)) throw ModelError("negative generation rate on edge " + name(a) + "-" + name(b));
  const NodePair p(a, b);
  if (edge_slot_.count(p) != 0) throw ModelError("duplicate edge " + pair_name(p));
  edge_slot_.emplace(p, edges_.size());
  edges_.push_back({p, alpha});
  auto insert_sorted = [](std::vector<NodeIndex>& v, NodeIndex x) {
    v.insert(std::lower_bound(v.begin(), v.end(), x), x);
  };
  insert_sorted(adjacency_[static_cast<std::size_t>(a)], b);
  insert_sorted(adjacency_[static_cast<std::size_t>(b)], a);
}

void NetworkGraph::add_edge(const std::string& a, const std::string& b, double alpha) {
  add_edge(index(a), index(b), alpha);
}

void NetworkGraph::remove_edge(NodeIndex a, NodeIndex b) {
  const NodePair p(a, b);
  auto it = edge_slot_.find(p);
  if (it == edge_slot_.end()) return;
  edges_.erase(edges_.begin() + static_cast<std::ptrdiff_t>(it->second));
  edge_slot_.clear();
  for (std::size_t i = 0; i < edges_.size(); ++i) edge_slot_.emplace(edges_[i].nodes, i);
  auto drop = [](std::vector<NodeIndex>& v, NodeIndex x) { v.erase(std::find(v.begin(), v.end(), x)); };
  drop(adjacency_[static_cast<std::size_t>(a)], b);
  drop(adjacency_[static_cast<std::size_t>(b)], a);
}

bool NetworkGraph::has_edge(NodeIndex a, NodeIndex b) const {
  return a != b && edge_slot_.count(NodePair(a, b)) != 0;
}

std::optional<double> NetworkGraph::edge_rate(NodeIndex a, NodeIndex b) const {
  if (a == b) return std::nullopt;
  auto it = edge_slot_.find(NodePair(a, b));
  if (it == edge_slot_.end()) return std::nullopt;
  return edges_[it->second].alpha;
}

void NetworkGraph::set_uniform_rate(double alpha) {
  if (!(alpha >= 0.0)) throw ModelError("negative generation rate");
  for (auto& e : edges_) e.alpha = alpha;
}

void NetworkGraph::set_edge_rate(NodeIndex a, NodeIndex b, double alpha) {
  if (!(alpha >= 0.0)) throw ModelError("negative generation rate");
  auto it = edge_slot_.find(NodePair(a, b));
  if (it == edge_slot_.end()) throw ModelError("no edge between " + name(a) + " and " + name(b));
  edges_[it->second].alpha = alpha;
}

bool NetworkGraph::is_connected() const {
  if (names_.empty()) return false;
  std::vector<char> seen(names_.size(), 0);
  std::vector<NodeIndex> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeIndex n = stack.back();
    stack.pop_back();
    for (NodeIndex m : neighbors(n)) {
      if (!seen[static_cast<std::size_t>(m)]) {
        seen[static_cast<std::size_t>(m)] = 1;
        ++reached;
        stack.push_back(m);
      }
    }
  }
  return reached == names_.size();
}

NetworkGraph NetworkGraph::induced(const std::vector<NodeIndex>& keep) const {
  std::vector<std::string> kept_names;
  std::vector<char> kept(names_.size(), 0);
  for (NodeIndex n : keep) {
    kept[static_cast<std::size_t>(n)] = 1;
    kept_names.push_back(name(n));
  }
  NetworkGraph sub(std::move(kept_names));
  for (const auto& e : edges_) {
    if (kept[static_cast<std::size_t>(e.nodes.u)] && kept[static_cast<std::size_t>(e.nodes.v)]) {
      sub.add_edge(name(e.nodes.u), name(e.nodes.v), e.alpha);
    }
  }
  return sub;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::string padded(const std::string& prefix, int value, int width) {
  std::ostringstream os;
  os << prefix << std::setw(width) << std::setfill('0') << value;
  return os.str();
}

int digits(int n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

std::vector<std::string> grid_names(int rows, int cols) {
  const int rw = digits(std::max(rows - 1, 0));
  const int cw = digits(std::max(cols - 1, 0));
  std::vector<std::string> names;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) names.push_back(padded("r", r, rw) + padded("c", c, cw));
  }
  return names;
}

std::vector<std::string> numbered_names(int n) {
  const int w = digits(std::max(n - 1, 0));
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(padded("n", i, w));
  return names;
}

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string(what) + " must lie in [0, 1]");
}

template <typename Sample>
NetworkGraph resample_until_connected(std::uint64_t seed, const char* kind, Sample sample) {
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    NetworkGraph g = sample(seed + static_cast<std::uint64_t>(attempt));
    if (g.node_count() >= 2 && g.is_connected()) return g;
  }
  throw GenerationError(std::string(kind) + ": no connected graph after " +
                        std::to_string(kMaxGenerationAttempts) + " attempts");
}

}  // namespace

NetworkGraph grid_graph(int rows, int cols, double alpha) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ParameterError("grid needs at least two nodes");
  NetworkGraph g(grid_names(rows, cols));
  // Names are zero-padded row-major, so index = r * cols + c.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int n = r * cols + c;
      if (c + 1 < cols) g.add_edge(n, n + 1, alpha);
      if (r + 1 < rows) g.add_edge(n, n + cols, alpha);
    }
  }
  return g;
}

NetworkGraph holed_grid_graph(int rows, int cols, double removal_prob, std::uint64_t seed, double alpha) {
  require_probability(removal_prob, "holed grid removal probability");
  const NetworkGraph full = grid_graph(rows, cols, alpha);
  return resample_until_connected(seed, "holed_grid", [&](std::uint64_t s) {
    RngStream rng = RngStream(s).derive(Purpose::topology);
    std::vector<NodeIndex> keep;
    for (NodeIndex n = 0; n < full.node_count(); ++n) {
      if (!(rng.uniform() < removal_prob)) keep.push_back(n);
    }
    return full.induced(keep);
  });
}

NetworkGraph erdos_renyi_graph(int n, double p, std::uint64_t seed, double alpha) {
  if (n < 2) throw ParameterError("erdos_renyi needs at least two nodes");
  require_probability(p, "erdos_renyi edge probability");
  return resample_until_connected(seed, "erdos_renyi", [&](std::uint64_t s) {
    RngStream rng = RngStream(s).derive(Purpose::topology);
    NetworkGraph g(numbered_names(n));
    for (NodeIndex a = 0; a < n; ++a) {
      for (NodeIndex b = a + 1; b < n; ++b) {
        if (rng.uniform() < p) g.add_edge(a, b, alpha);
      }
    }
    return g;
  });
}

NetworkGraph watts_strogatz_graph(int n, int neighbors, double p, std::uint64_t seed, double alpha) {
  if (neighbors < 2 || neighbors % 2 != 0) throw ParameterError("watts_strogatz neighbors must be even and >= 2");
  if (neighbors >= n) throw ParameterError("watts_strogatz neighbors must be smaller than the node count");
  require_probability(p, "watts_strogatz rewiring probability");
  return resample_until_connected(seed, "watts_strogatz", [&](std::uint64_t s) {
    RngStream rng = RngStream(s).derive(Purpose::topology);
    NetworkGraph g(numbered_names(n));
    for (int j = 1; j <= neighbors / 2; ++j) {
      for (NodeIndex u = 0; u < n; ++u) g.add_edge(u, (u + j) % n, alpha);
    }
    // Ring-lattice rewiring, one lattice offset at a time.
    for (int j = 1; j <= neighbors / 2; ++j) {
      for (NodeIndex u = 0; u < n; ++u) {
        const NodeIndex v = (u + j) % n;
        if (!(rng.uniform() < p)) continue;
        if (!g.has_edge(u, v) || static_cast<int>(g.neighbors(u).size()) >= n - 1) continue;
        NodeIndex w;
        do {
          w = static_cast<NodeIndex>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        } while (w == u || g.has_edge(u, w));
        g.remove_edge(u, v);
        g.add_edge(u, w, alpha);
      }
    }
    return g;
  });
}

NetworkGraph generate_topology(TopologyKind kind, const TopologyParams& params,
                               std::optional<std::uint64_t> seed) {
  auto need_seed = [&]() {
    if (!seed) throw ParameterError("random topology kinds require a seed");
    return *seed;
  };
  switch (kind) {
    case TopologyKind::grid:
      return grid_graph(params.rows, params.cols, params.alpha);
    case TopologyKind::holed_grid:
      return holed_grid_graph(params.rows, params.cols, params.probability, need_seed(), params.alpha);
    case TopologyKind::erdos_renyi:
      return erdos_renyi_graph(params.nodes, params.probability, need_seed(), params.alpha);
    case TopologyKind::watts_strogatz:
      return watts_strogatz_graph(params.nodes, params.neighbors, params.probability, need_seed(), params.alpha);
    case TopologyKind::custom: {
      NetworkGraph g = read_edge_list_file(params.edge_list_path);
      if (!g.is_connected()) throw GenerationError("custom topology is not connected");
      return g;
    }
  }
  throw ParameterError("unknown topology kind");
}

NetworkGraph read_edge_list(std::istream& in) {
  struct Row {
    std::string a, b;
    double alpha;
  };
  std::vector<Row> rows;
  std::set<std::string> names;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Row r;
    if (!(ls >> r.a >> r.b >> r.alpha)) {
      throw ModelError("edge list line " + std::to_string(line_no) + ": expected 'node_a node_b alpha'");
    }
    std::string extra;
    if (ls >> extra) throw ModelError("edge list line " + std::to_string(line_no) + ": trailing tokens");
    names.insert(r.a);
    names.insert(r.b);
    rows.push_back(std::move(r));
  }
  NetworkGraph g(std::vector<std::string>(names.begin(), names.end()));
  for (const auto& r : rows) g.add_edge(r.a, r.b, r.alpha);
  return g;
}

NetworkGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const NetworkGraph& graph) {
  for (const auto& e : graph.edges()) {
    out << graph.name(e.nodes.u) << ' ' << graph.name(e.nodes.v) << ' ' << std::setprecision(17) << e.alpha
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Routing

void validate_route(const NetworkGraph& graph, const Route& route) {
  if (route.size() < 2) throw RoutingError("route needs at least two nodes");
  std::set<NodeIndex> seen;
  for (std::size_t i = 0; i < route.size(); ++i) {
    if (route[i] < 0 || route[i] >= graph.node_count()) throw RoutingError("route node out of range");
    if (!seen.insert(route[i]).second) throw RoutingError("route repeats node " + graph.name(route[i]));
    if (i > 0 && !graph.has_edge(route[i - 1], route[i])) {
      throw RoutingError("route hop " + graph.name(route[i - 1]) + "-" + graph.name(route[i]) +
                         " is not a physical edge");
    }
  }
}

std::optional<Route> shortest_path(const NetworkGraph& graph, NodeIndex from, NodeIndex to,
                                   const std::vector<NodePair>& removed) {
  const std::set<NodePair> blocked(removed.begin(), removed.end());
  std::vector<NodeIndex> parent(static_cast<std::size_t>(graph.node_count()), -1);
  std::vector<char> seen(static_cast<std::size_t>(graph.node_count()), 0);
  std::deque<NodeIndex> frontier{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!frontier.empty()) {
    const NodeIndex n = frontier.front();
    frontier.pop_front();
    if (n == to) break;
    for (NodeIndex m : graph.neighbors(n)) {
      if (seen[static_cast<std::size_t>(m)] || blocked.count(NodePair(n, m)) != 0) continue;
      seen[static_cast<std::size_t>(m)] = 1;
      parent[static_cast<std::size_t>(m)] = n;
      frontier.push_back(m);
    }
  }
  if (!seen[static_cast<std::size_t>(to)]) return std::nullopt;
  Route path;
  for (NodeIndex n = to; n != -1; n = parent[static_cast<std::size_t>(n)]) path.push_back(n);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Route> compute_routes(const NetworkGraph& graph, NodeIndex a, NodeIndex b, double removal_prob,
                                  std::uint64_t seed) {
  if (a == b) throw RoutingError("route endpoints must be distinct");
  if (a < 0 || b < 0 || a >= graph.node_count() || b >= graph.node_count()) {
    throw RoutingError("route endpoint out of range");
  }
  require_probability(removal_prob, "route removal probability");
  auto first = shortest_path(graph, a, b);
  if (!first) throw RoutingError("endpoints " + graph.name(a) + " and " + graph.name(b) + " are disconnected");
  std::vector<Route> routes{*first};

  RngStream rng = RngStream(seed).derive(Purpose::routing);
  std::vector<NodePair> removed;
  for (std::size_t i = 1; i < first->size(); ++i) {
    if (rng.uniform() < removal_prob) removed.emplace_back((*first)[i - 1], (*first)[i]);
  }
  if (!removed.empty()) {
    auto second = shortest_path(graph, a, b, removed);
    if (second && *second != *first) routes.push_back(std::move(*second));
  }
  return routes;
}

// ---------------------------------------------------------------------------
// Transitions and queues

std::vector<Transition> enumerate_transitions(std::span<const Route> routes) {
  std::set<Transition> out;
  for (const auto& route : routes) {
    const std::size_t n = route.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        for (std::size_t c = b + 1; c < n; ++c) out.emplace(route[a], route[b], route[c]);
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<NodePair> route_pairs(std::span<const Route> routes) {
  std::set<NodePair> out;
  for (const auto& route : routes) {
    for (std::size_t a = 0; a < route.size(); ++a) {
      for (std::size_t b = a + 1; b < route.size(); ++b) out.emplace(route[a], route[b]);
    }
  }
  return {out.begin(), out.end()};
}

QueueIndex::QueueIndex(std::vector<NodePair> pairs, const NetworkGraph& graph) : pairs_(std::move(pairs)) {
  physical_.reserve(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (!slot_.emplace(pairs_[i], static_cast<int>(i)).second) throw ModelError("duplicate queue pair");
    physical_.push_back(graph.has_edge(pairs_[i].u, pairs_[i].v));
  }
}

std::optional<int> QueueIndex::find(NodePair p) const {
  auto it = slot_.find(p);
  if (it == slot_.end()) return std::nullopt;
  return it->second;
}

int QueueIndex::at(NodePair p) const {
  auto it = slot_.find(p);
  if (it == slot_.end()) {
    throw ModelError("queue (" + std::to_string(p.u) + "," + std::to_string(p.v) + ") is not indexed");
  }
  return it->second;
}

std::vector<int> QueueIndex::incident(NodeIndex node) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (pairs_[i].contains(node)) out.push_back(static_cast<int>(i));
  }
  return out;
}

ModelMatrices build_matrices(const QueueIndex& queues, std::span<const Transition> transitions) {
  const auto nq = static_cast<Eigen::Index>(queues.size());
  const auto nt = static_cast<Eigen::Index>(transitions.size());
  ModelMatrices out;
  out.m = IncidenceMatrix::Zero(nq, nt);
  for (Eigen::Index j = 0; j < nt; ++j) {
    const auto& t = transitions[static_cast<std::size_t>(j)];
    out.m(queues.at(t.first_parent()), j) = -1;
    out.m(queues.at(t.second_parent()), j) = -1;
    out.m(queues.at(t.child()), j) = 1;
  }
  out.m_tilde.resize(nq, nt + nq);
  out.m_tilde << out.m, -IncidenceMatrix::Identity(nq, nq);
  out.n_tilde.resize(nq, nt + nq);
  out.n_tilde << IncidenceMatrix::Zero(nq, nt), -IncidenceMatrix::Identity(nq, nq);
  return out;
}

namespace {

// Tarjan's SCC over the queue dependency graph (parent -> child). Returns the
// component id per queue; ids come out in reverse topological order.
std::vector<int> strongly_connected(int n, const std::vector<std::vector<int>>& succ, int& n_components) {
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  int counter = 0;
  n_components = 0;
  std::function<void(int)> visit = [&](int v) {
    const auto sv = static_cast<std::size_t>(v);
    index[sv] = low[sv] = counter++;
    stack.push_back(v);
    on_stack[sv] = 1;
    for (int w : succ[sv]) {
      const auto sw = static_cast<std::size_t>(w);
      if (index[sw] < 0) {
        visit(w);
        low[sv] = std::min(low[sv], low[sw]);
      } else if (on_stack[sw]) {
        low[sv] = std::min(low[sv], index[sw]);
      }
    }
    if (low[sv] == index[sv]) {
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[static_cast<std::size_t>(w)] = 0;
        comp[static_cast<std::size_t>(w)] = n_components;
      } while (w != v);
      ++n_components;
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[static_cast<std::size_t>(v)] < 0) visit(v);
  }
  return comp;
}

}  // namespace

std::vector<int> queue_spans(const QueueIndex& queues, std::span<const Transition> transitions,
                             std::span<const Route> routes) {
  const int nq = queues.size();
  const auto on_route = route_pairs(routes);
  const std::set<NodePair> routed(on_route.begin(), on_route.end());
  for (int q = 0; q < nq; ++q) {
    if (!queues.is_physical(q) && routed.count(queues.pair(q)) == 0) {
      throw ModelError("queue " + std::to_string(queues.pair(q).u) + "-" + std::to_string(queues.pair(q).v) +
                       " is neither physical nor on any route; its span is undefined");
    }
  }

  std::vector<std::vector<int>> succ(static_cast<std::size_t>(nq));
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(nq));
  for (const auto& t : transitions) {
    const int child = queues.at(t.child());
    for (NodePair p : {t.first_parent(), t.second_parent()}) {
      const int parent = queues.at(p);
      succ[static_cast<std::size_t>(parent)].push_back(child);
      pred[static_cast<std::size_t>(child)].push_back(parent);
    }
  }
  int n_comp = 0;
  const auto comp = strongly_connected(nq, succ, n_comp);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_comp));
  for (int q = 0; q < nq; ++q) members[static_cast<std::size_t>(comp[static_cast<std::size_t>(q)])].push_back(q);

  std::vector<int> level(static_cast<std::size_t>(n_comp), 1);
  // Highest id first = topological order.
  for (int c = n_comp - 1; c >= 0; --c) {
    int best = 1;
    for (int q : members[static_cast<std::size_t>(c)]) {
      for (int p : pred[static_cast<std::size_t>(q)]) {
        const int pc = comp[static_cast<std::size_t>(p)];
        if (pc != c) best = std::max(best, level[static_cast<std::size_t>(pc)] + 1);
      }
    }
    level[static_cast<std::size_t>(c)] = best;
  }
  std::vector<int> span(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) span[static_cast<std::size_t>(q)] = level[static_cast<std::size_t>(comp[static_cast<std::size_t>(q)])];
  return span;
}

OperationRanks assign_ranks(const QueueIndex& queues, std::span<const Transition> transitions,
                            std::span<const Route> routes) {
  const auto span = queue_spans(queues, transitions, routes);
  OperationRanks ranks;
  ranks.consumption.reserve(span.size());
  for (int s : span) ranks.consumption.push_back(2 * (s - 1));
  ranks.transition.reserve(transitions.size());
  for (const auto& t : transitions) {
    const int s = span[static_cast<std::size_t>(queues.at(t.child()))];
    ranks.transition.push_back(std::max(0, 2 * s - 3));
  }
  for (int r : ranks.consumption) ranks.max_rank = std::max(ranks.max_rank, r);
  for (int r : ranks.transition) ranks.max_rank = std::max(ranks.max_rank, r);
  return ranks;
}

// ---------------------------------------------------------------------------
// NetworkModel

int NetworkModel::operation_rank(int op) const {
  return op < n_transitions() ? ranks.transition.at(static_cast<std::size_t>(op))
                              : ranks.consumption.at(static_cast<std::size_t>(op - n_transitions()));
}

std::optional<int> NetworkModel::transition_index(const Transition& t) const {
  auto it = transition_slot.find(t);
  if (it == transition_slot.end()) return std::nullopt;
  return it->second;
}

int NetworkModel::transition(const std::string& a, const std::string& middle, const std::string& b) const {
  auto idx = transition_index(Transition(graph.index(a), graph.index(middle), graph.index(b)));
  if (!idx) throw ModelError("transition " + a + "[" + middle + "]" + b + " is not routed");
  return *idx;
}

std::string NetworkModel::operation_name(int op) const {
  if (op < n_transitions()) {
    const auto& t = transitions.at(static_cast<std::size_t>(op));
    return graph.name(t.left) + "[" + graph.name(t.swap) + "]" + graph.name(t.right);
  }
  return "consume:" + graph.pair_name(queues.pair(op - n_transitions()));
}

NetworkModel build_network_model(NetworkGraph graph, std::vector<UserPair> pairs, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ParameterError("eta must lie in (0, 1]");
  std::set<NodePair> seen_pairs;
  std::vector<Route> all_routes;
  for (auto& p : pairs) {
    if (p.endpoints.u == p.endpoints.v) throw RoutingError("user pair endpoints must be distinct");
    if (!seen_pairs.insert(p.endpoints).second) throw ModelError("duplicate user pair " + graph.pair_name(p.endpoints));
    if (!(p.beta >= 0.0)) throw ParameterError("negative demand rate on pair " + graph.pair_name(p.endpoints));
    if (p.routes.empty()) throw RoutingError("user pair " + graph.pair_name(p.endpoints) + " has no route");
    for (const auto& r : p.routes) {
      validate_route(graph, r);
      if (NodePair(r.front(), r.back()) != p.endpoints) {
        throw RoutingError("route does not connect the endpoints of pair " + graph.pair_name(p.endpoints));
      }
      all_routes.push_back(r);
    }
  }

  std::set<NodePair> pair_set;
  for (const auto& e : graph.edges()) pair_set.insert(e.nodes);
  for (const auto& p : route_pairs(all_routes)) pair_set.insert(p);
  auto transitions = enumerate_transitions(all_routes);

  // Spans are order independent; compute on the lexicographic order, then
  // reorder by (span, pair).
  const QueueIndex lex_index(std::vector<NodePair>(pair_set.begin(), pair_set.end()), graph);
  const auto lex_span = queue_spans(lex_index, transitions, all_routes);
  std::vector<int> order(static_cast<std::size_t>(lex_index.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return lex_span[static_cast<std::size_t>(a)] < lex_span[static_cast<std::size_t>(b)];
  });
  std::vector<NodePair> ordered;
  ordered.reserve(order.size());
  for (int i : order) ordered.push_back(lex_index.pair(i));

  NetworkModel model;
  model.queues = QueueIndex(std::move(ordered), graph);
  model.span.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) model.span[i] = lex_span[static_cast<std::size_t>(order[i])];

  std::stable_sort(transitions.begin(), transitions.end(), [&](const Transition& a, const Transition& b) {
    return model.span[static_cast<std::size_t>(model.queues.at(a.child()))] <
           model.span[static_cast<std::size_t>(model.queues.at(b.child()))];
  });
  model.transitions = std::move(transitions);
  for (std::size_t i = 0; i < model.transitions.size(); ++i) {
    const auto& t = model.transitions[i];
    model.transition_slot.emplace(t, static_cast<int>(i));
    model.transition_queues.push_back(
        {model.queues.at(t.first_parent()), model.queues.at(t.second_parent()), model.queues.at(t.child())});
  }
  model.matrices = build_matrices(model.queues, model.transitions);
  model.ranks = assign_ranks(model.queues, model.transitions, all_routes);

  const int nq = model.queues.size();
  model.arrival_rate = RealVector::Zero(nq);
  for (const auto& e : graph.edges()) model.arrival_rate(model.queues.at(e.nodes)) = e.alpha;
  model.demand_rate = RealVector::Zero(nq);
  model.user_pair_queue.assign(static_cast<std::size_t>(nq), false);
  for (const auto& p : pairs) {
    const int q = model.queues.at(p.endpoints);
    model.demand_rate(q) = p.beta;
    model.user_pair_queue[static_cast<std::size_t>(q)] = true;
  }
  model.graph = std::move(graph);
  model.pairs = std::move(pairs);
  model.eta = eta;
  return model;
}

void set_demand_rates(NetworkModel& model, const std::vector<double>& betas) {
  if (betas.size() != model.pairs.size()) throw ModelError("demand rate count does not match user pairs");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] >= 0.0)) throw ParameterError("negative demand rate");
    model.pairs[i].beta = betas[i];
    model.demand_rate(model.queues.at(model.pairs[i].endpoints)) = betas[i];
  }
}

std::string serialize_model(const NetworkModel& model) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "nodes";
  for (const auto& n : model.graph.names()) os << ' ' << n;
  os << "\nedges\n";
  write_edge_list(os, model.graph);
  os << "eta " << model.eta << "\npairs\n";
  for (const auto& p : model.pairs) {
    os << model.graph.pair_name(p.endpoints) << ' ' << (p.kind == PairKind::fixed ? "fixed" : "parasitic") << ' '
       << p.beta;
    for (const auto& r : p.routes) {
      os << " |";
      for (NodeIndex n : r) os << ' ' << model.graph.name(n);
    }
    os << '\n';
  }
  os << "queues\n";
  for (int q = 0; q < model.n_queues(); ++q) {
    os << model.graph.pair_name(model.queues.pair(q)) << ' ' << (model.queues.is_physical(q) ? 'P' : 'V') << ' '
       << model.span[static_cast<std::size_t>(q)] << ' ' << model.ranks.consumption[static_cast<std::size_t>(q)]
       << '\n';
  }
  os << "transitions\n";
  for (int t = 0; t < model.n_transitions(); ++t) {
    os << model.operation_name(t) << ' ' << model.ranks.transition[static_cast<std::size_t>(t)] << '\n';
  }
  os << "M\n" << model.matrices.m << '\n';
  return os.str();
}

}  // namespace qnet

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qnet/topology.hpp"

namespace fixture {

/// Path graph over `names` with rate `alpha` on every edge.
inline qnet::NetworkGraph chain_graph(const std::vector<std::string>& names, double alpha = 1.0) {
  qnet::NetworkGraph g(names);
  for (std::size_t k = 0; k + 1 < names.size(); ++k) g.add_edge(names[k], names[k + 1], alpha);
  return g;
}

inline qnet::Route route_of(const qnet::NetworkGraph& g, const std::vector<std::string>& names) {
  qnet::Route r;
  for (const auto& n : names) r.push_back(g.index(n));
  return r;
}

/// One user pair per entry: (route by names, beta). Endpoints are the route ends.
inline qnet::NetworkModel model(qnet::NetworkGraph g,
                                const std::vector<std::pair<std::vector<std::vector<std::string>>, double>>& pairs,
                                double eta = 1.0) {
  std::vector<qnet::UserPair> users;
  for (const auto& [routes, beta] : pairs) {
    qnet::UserPair u;
    for (const auto& r : routes) u.routes.push_back(route_of(g, r));
    u.endpoints = qnet::NodePair(u.routes.front().front(), u.routes.front().back());
    u.beta = beta;
    users.push_back(std::move(u));
  }
  return qnet::build_network_model(std::move(g), std::move(users), eta);
}

/// The linear ABCD network with the single user pair (A, D).
inline qnet::NetworkModel abcd(double beta = 0.0, double eta = 1.0) {
  return model(chain_graph({"A", "B", "C", "D"}), {{{{"A", "B", "C", "D"}}, beta}}, eta);
}

/// The 4-node chain benchmark: pairs (A, D) and (B, D).
inline qnet::NetworkModel chain4_benchmark(double beta_ad, double beta_bd, double eta = 0.9) {
  return model(chain_graph({"A", "B", "C", "D"}),
               {{{{"A", "B", "C", "D"}}, beta_ad}, {{{"B", "C", "D"}}, beta_bd}}, eta);
}

}  // namespace fixture

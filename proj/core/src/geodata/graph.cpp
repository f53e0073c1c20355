#include "tractflow/geodata/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

#include "tractflow/error.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

std::string AdjacencyPolicy::describe() const {
  if (kind == Kind::KNearest) return "knn:" + std::to_string(k);
  return "radius:" + format_double(radius_km);
}

AdjacencyPolicy AdjacencyPolicy::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(Errc::InvalidArgument, "adjacency policy must look like knn:8 or radius:1.5");
  }
  const std::string_view head = text.substr(0, colon);
  const double value = parse_number(text.substr(colon + 1), "adjacency policy", 0, head);
  if (head == "knn") {
    if (value < 1 || value != std::floor(value)) throw Error(Errc::InvalidArgument, "knn needs an integer k >= 1");
    return k_nearest(static_cast<int>(value));
  }
  if (head == "radius") {
    if (!(value > 0.0)) throw Error(Errc::InvalidArgument, "radius must be > 0 km");
    return radius(value);
  }
  throw Error(Errc::InvalidArgument, "unknown adjacency policy '" + std::string(head) + "'");
}

TractGraph::TractGraph(std::vector<Tract> tracts, std::vector<GraphEdge> edges, AdjacencyPolicy policy,
                       std::shared_ptr<const DistanceProvider> distance)
    : tracts_(std::move(tracts)), edges_(std::move(edges)), policy_(policy), distance_(std::move(distance)) {
  if (!distance_) distance_ = default_distance_provider();
  for (std::size_t i = 0; i < tracts_.size(); ++i) {
    if (!by_id_.emplace(tracts_[i].id, i).second) {
      throw Error(Errc::DuplicateId, "tract id '" + tracts_[i].id + "' appears twice");
    }
  }
  adjacency_.resize(tracts_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto& e : edges_) {
    if (e.a > e.b) std::swap(e.a, e.b);
    if (e.a == e.b) throw Error(Errc::InvalidArgument, "self-loop on tract " + tracts_.at(e.a).id);
    if (e.b >= tracts_.size()) throw Error(Errc::InvalidArgument, "edge endpoint out of range");
    if (!std::isfinite(e.km) || !(e.km > 0.0)) {
      throw Error(Errc::DegenerateGeometry, "edge " + tracts_[e.a].id + " - " + tracts_[e.b].id +
                                                " has non-positive distance");
    }
    if (!seen.emplace(e.a, e.b).second) throw Error(Errc::InvalidArgument, "duplicate edge");
    adjacency_[e.a].push_back({e.b, e.km});
    adjacency_[e.b].push_back({e.a, e.km});
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end(),
              [this](const Neighbor& x, const Neighbor& y) { return tracts_[x.node].id < tracts_[y.node].id; });
  }
  if (!is_connected()) throw Error(Errc::InvalidArgument, "tract graph is not connected");
}

std::optional<std::size_t> TractGraph::index_of(std::string_view id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t TractGraph::require_index(std::string_view id) const {
  auto idx = index_of(id);
  if (!idx) throw Error(Errc::UnknownTract, "unknown tract '" + std::string(id) + "'");
  return *idx;
}

std::optional<double> TractGraph::edge_km(std::size_t a, std::size_t b) const {
  for (const auto& n : adjacency_.at(a)) {
    if (n.node == b) return n.km;
  }
  return std::nullopt;
}

double TractGraph::pair_km(std::size_t a, std::size_t b) const { return distance_->km(tracts_.at(a), tracts_.at(b)); }

bool TractGraph::is_connected() const {
  if (tracts_.empty()) return true;
  const std::size_t zero = 0;
  return within_hops(std::span(&zero, 1), std::numeric_limits<int>::max()).size() == tracts_.size();
}

std::vector<std::size_t> TractGraph::within_hops(std::span<const std::size_t> seeds, int hops) const {
  std::vector<int> depth(tracts_.size(), -1);
  std::queue<std::size_t> q;
  for (std::size_t s : seeds) {
    if (depth.at(s) < 0) {
      depth[s] = 0;
      q.push(s);
    }
  }
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    if (depth[u] >= hops) continue;
    for (const auto& n : adjacency_[u]) {
      if (depth[n.node] < 0) {
        depth[n.node] = depth[u] + 1;
        q.push(n.node);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth[i] >= 0) out.push_back(i);
  }
  return out;
}

TractGraph TractGraph::with_tracts(std::vector<Tract> tracts) const {
  if (tracts.size() != tracts_.size()) throw Error(Errc::SchemaMismatch, "tract count changed");
  for (std::size_t i = 0; i < tracts.size(); ++i) {
    if (tracts[i].id != tracts_[i].id) throw Error(Errc::SchemaMismatch, "tract order changed");
  }
  TractGraph copy = *this;
  copy.tracts_ = std::move(tracts);
  return copy;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

TractGraph build_graph(std::vector<Tract> tracts, const AdjacencyPolicy& policy,
                       std::shared_ptr<const DistanceProvider> distance) {
  const std::size_t n = tracts.size();
  if (n < 2) throw Error(Errc::InvalidArgument, "need at least 2 tracts to build a graph");
  if (policy.kind == AdjacencyPolicy::Kind::KNearest && policy.k < 1) {
    throw Error(Errc::InvalidArgument, "k must be >= 1");
  }
  if (policy.kind == AdjacencyPolicy::Kind::Radius && !(policy.radius_km > 0.0)) {
    throw Error(Errc::InvalidArgument, "radius must be > 0 km");
  }
  if (!distance) distance = default_distance_provider();

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance->km(tracts[i], tracts[j]);
      if (!std::isfinite(d) || !(d > 0.0)) {
        throw Error(Errc::DegenerateGeometry,
                    "tracts '" + tracts[i].id + "' and '" + tracts[j].id + "' share a centroid");
      }
      dist[i * n + j] = dist[j * n + i] = d;
    }
  }

  std::set<std::pair<std::size_t, std::size_t>> edge_set;
  auto add_edge = [&](std::size_t a, std::size_t b) { edge_set.emplace(std::min(a, b), std::max(a, b)); };

  std::vector<std::size_t> order(n);
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (policy.kind == AdjacencyPolicy::Kind::KNearest) {
      std::iota(order.begin(), order.end(), 0);
      std::erase(order, i);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(policy.k), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          const double da = dist[i * n + a];
                          const double db = dist[i * n + b];
                          return da != db ? da < db : a < b;
                        });
      for (std::size_t m = 0; m < k; ++m) add_edge(i, order[m]);
      order.resize(n);
    } else {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (dist[i * n + j] <= policy.radius_km) add_edge(i, j);
      }
    }
  }
  for (const auto& [a, b] : edge_set) {
    ++degree[a];
    ++degree[b];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] != 0) continue;
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && dist[i * n + j] < dist[i * n + best]) best = j;
    }
    add_edge(i, best);
    ++degree[i];
    ++degree[best];
  }

  DisjointSets sets(n);
  std::size_t components = n;
  for (const auto& [a, b] : edge_set) {
    if (sets.unite(a, b)) --components;
  }
  while (components > 1) {
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (dist[i * n + j] < best && sets.find(i) != sets.find(j)) {
          best = dist[i * n + j];
          best_a = i;
          best_b = j;
        }
      }
    }
    add_edge(best_a, best_b);
    sets.unite(best_a, best_b);
    --components;
  }

  std::vector<GraphEdge> edges;
  edges.reserve(edge_set.size());
  for (const auto& [a, b] : edge_set) edges.push_back(GraphEdge{a, b, dist[a * n + b], std::nullopt});
  return TractGraph(std::move(tracts), std::move(edges), policy, std::move(distance));
}

}  // namespace tractflow

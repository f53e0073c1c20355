#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tractflow/geodata/distance.hpp"
#include "tractflow/geodata/tract.hpp"

namespace tractflow {

struct AdjacencyPolicy {
  enum class Kind { KNearest, Radius };

  Kind kind = Kind::KNearest;
  int k = 8;
  double radius_km = 0.0;

  static AdjacencyPolicy k_nearest(int k) { return {Kind::KNearest, k, 0.0}; }
  static AdjacencyPolicy radius(double km) { return {Kind::Radius, 0, km}; }

  /// "knn:8" or "radius:1.5".
  std::string describe() const;
  static AdjacencyPolicy parse(std::string_view text);

  friend bool operator==(const AdjacencyPolicy&, const AdjacencyPolicy&) = default;
};

struct GraphEdge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;
  double km = 0.0;
  std::optional<double> minutes;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Undirected weighted geo-adjacency network over tracts. Immutable once built;
/// with_tracts() produces an edited copy sharing topology and distances.
class TractGraph {
 public:
  struct Neighbor {
    std::size_t node;
    double km;
  };

  /// Validates the invariants (no self-loops, positive finite weights, no
  /// duplicate edges, connected) and indexes the adjacency.
  TractGraph(std::vector<Tract> tracts, std::vector<GraphEdge> edges, AdjacencyPolicy policy,
             std::shared_ptr<const DistanceProvider> distance);

  std::size_t size() const noexcept { return tracts_.size(); }
  std::span<const Tract> tracts() const noexcept { return tracts_; }
  const Tract& tract(std::size_t i) const { return tracts_[i]; }
  std::span<const GraphEdge> edges() const noexcept { return edges_; }
  const AdjacencyPolicy& policy() const noexcept { return policy_; }
  const DistanceProvider& distance() const noexcept { return *distance_; }
  const std::shared_ptr<const DistanceProvider>& distance_provider() const noexcept { return distance_; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Throws UnknownTract.
  std::size_t require_index(std::string_view id) const;

  /// Neighbors sorted by tract id (not index), so per-node arithmetic order is
  /// independent of tract ordering.
  std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_[i]; }
  std::optional<double> edge_km(std::size_t a, std::size_t b) const;

  /// Travel distance between any two tracts from the distance provider.
  double pair_km(std::size_t a, std::size_t b) const;

  bool is_connected() const;
  /// Nodes within `hops` edges of any seed (including the seeds), sorted.
  std::vector<std::size_t> within_hops(std::span<const std::size_t> seeds, int hops) const;

  /// Copy with replaced tract list (same ids in the same order).
  TractGraph with_tracts(std::vector<Tract> tracts) const;

 private:
  std::vector<Tract> tracts_;
  std::vector<GraphEdge> edges_;
  AdjacencyPolicy policy_;
  std::shared_ptr<const DistanceProvider> distance_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Builds the adjacency by brute-force pairwise distances. Isolated tracts are
/// attached to their nearest neighbor, and any remaining components are joined
/// through their shortest connecting pair so the result is connected.
TractGraph build_graph(std::vector<Tract> tracts, const AdjacencyPolicy& policy,
                       std::shared_ptr<const DistanceProvider> distance = default_distance_provider());

}  // namespace tractflow

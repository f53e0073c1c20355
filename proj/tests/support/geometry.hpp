#pragma once

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "tractflow/geodata/distance.hpp"
#include "tractflow/geodata/graph.hpp"
#include "tractflow/geodata/tract.hpp"

namespace tractflow::testing {

/// Kilometres per degree of longitude on the equator for the haversine radius.
inline double km_per_degree() { return kEarthRadiusKm * std::numbers::pi / 180.0; }

/// Tracts on the equator, `spacing_km` apart, ids "a00", "a01", ...
inline std::vector<Tract> line_tracts(std::size_t n, double spacing_km, std::size_t features = 2) {
  std::vector<Tract> out;
  for (std::size_t i = 0; i < n; ++i) {
    Tract t;
    char id[16];
    std::snprintf(id, sizeof id, "a%02zu", i);
    t.id = id;
    t.centroid = {0.0, static_cast<double>(i) * spacing_km / km_per_degree()};
    for (std::size_t f = 0; f < features; ++f) t.features.push_back(1.0 + 0.5 * static_cast<double>(i) + f);
    out.push_back(std::move(t));
  }
  return out;
}

/// Path graph 0 - 1 - ... - n-1 with explicit unit edges.
inline TractGraph path_graph(std::vector<Tract> tracts, double km = 1.0) {
  std::vector<GraphEdge> edges;
  for (std::size_t i = 0; i + 1 < tracts.size(); ++i) edges.push_back({i, i + 1, km, std::nullopt});
  return TractGraph(std::move(tracts), std::move(edges), AdjacencyPolicy::k_nearest(1), default_distance_provider());
}

inline FeatureSchema schema_of(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));
  return FeatureSchema::from_names(names);
}

}  // namespace tractflow::testing

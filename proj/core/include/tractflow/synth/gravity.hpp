#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tractflow/geodata/flows.hpp"
#include "tractflow/geodata/tract.hpp"

namespace tractflow {

/// Parameters of a synthetic city whose commuting follows a gravity law
/// T_ij ~ Poisson(c * m_i * m_j / d_ij^2).
struct GravityWorldConfig {
  std::size_t tracts = 200;
  double extent_km = 20.0;           // side of the square the centroids occupy
  double min_separation_km = 0.4;    // rejection radius between centroids
  LatLon center{-8.05, -34.90};
  double gravity_c = 4.0;
  double min_pair_km = 0.5;          // distance floor inside the gravity law
  int hotspots = 5;                  // Gaussian bumps shaping the mass field
  double hotspot_sigma_km = 4.0;
  double mass_noise = 0.1;           // multiplicative log-normal noise on m
  std::size_t noise_indicators = 2;
  std::uint64_t seed = 1;
};

struct GravityWorld {
  FeatureSchema schema;  // mass, bike_lane_km, noise_*; not normalized
  std::vector<Tract> tracts;
  std::vector<RawFlow> flows;  // pairs with T_ij > 0 only
  std::vector<double> mass;    // tract order
};

inline constexpr const char* kMassIndicator = "mass";
inline constexpr const char* kBikeLaneIndicator = "bike_lane_km";

/// Deterministic for a fixed config.
GravityWorld make_gravity_world(const GravityWorldConfig& config);

/// Expected flow c * m_o * m_d / max(d, floor)^2.
double gravity_expected_flow(const GravityWorldConfig& config, double mass_origin, double mass_destination, double km);

}  // namespace tractflow

#include "tractflow/synth/gravity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "tractflow/error.hpp"
#include "tractflow/geodata/distance.hpp"
#include "tractflow/numeric/random.hpp"

namespace tractflow {

double gravity_expected_flow(const GravityWorldConfig& config, double mass_origin, double mass_destination,
                             double km) {
  const double d = std::max(km, config.min_pair_km);
  return config.gravity_c * mass_origin * mass_destination / (d * d);
}

GravityWorld make_gravity_world(const GravityWorldConfig& config) {
  if (config.tracts < 2) throw Error(Errc::InvalidArgument, "a synthetic world needs at least 2 tracts");
  if (!(config.extent_km > 0.0) || !(config.gravity_c > 0.0) || config.hotspots < 1) {
    throw Error(Errc::InvalidArgument, "extent, gravity constant and hotspot count must be positive");
  }
  Rng rng(config.seed);
  const double km_per_deg_lat = kEarthRadiusKm * std::numbers::pi / 180.0;
  const double km_per_deg_lon = km_per_deg_lat * std::cos(config.center.lat * std::numbers::pi / 180.0);

  struct Point {
    double x, y;
  };
  std::vector<Point> pts;
  const double min_sq = config.min_separation_km * config.min_separation_km;
  for (int attempts = 0; pts.size() < config.tracts; ++attempts) {
    if (attempts > 1000000) throw Error(Errc::InvalidArgument, "cannot place tracts at the requested separation");
    const Point p{rng.uniform(0.0, config.extent_km), rng.uniform(0.0, config.extent_km)};
    const bool clear = std::none_of(pts.begin(), pts.end(), [&](const Point& q) {
      return (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) < min_sq;
    });
    if (clear) pts.push_back(p);
  }

  std::vector<Point> hot(static_cast<std::size_t>(config.hotspots));
  std::vector<double> weight(hot.size());
  for (std::size_t h = 0; h < hot.size(); ++h) {
    hot[h] = {rng.uniform(0.0, config.extent_km), rng.uniform(0.0, config.extent_km)};
    weight[h] = rng.uniform(0.5, 1.0);
  }
  const double two_s2 = 2.0 * config.hotspot_sigma_km * config.hotspot_sigma_km;

  GravityWorld w;
  std::vector<FeatureSchema::Indicator> ind;
  ind.push_back({kMassIndicator, IndicatorCategory::LandUse, true});
  ind.push_back({kBikeLaneIndicator, IndicatorCategory::Infrastructure, true});
  for (std::size_t k = 0; k < config.noise_indicators; ++k) {
    ind.push_back({"noise_" + std::to_string(k + 1), IndicatorCategory::Speciality, true});
  }
  w.schema = FeatureSchema(std::move(ind));

  const int id_width = static_cast<int>(std::to_string(config.tracts - 1).size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double field = 0.0;
    for (std::size_t h = 0; h < hot.size(); ++h) {
      const double dx = pts[i].x - hot[h].x;
      const double dy = pts[i].y - hot[h].y;
      field += weight[h] * std::exp(-(dx * dx + dy * dy) / two_s2);
    }
    const double m = (1.0 + 9.0 * std::min(field, 1.0)) * std::exp(config.mass_noise * rng.normal());
    Tract t;
    char id[32];
    std::snprintf(id, sizeof id, "T%0*zu", id_width, i);
    t.id = id;
    t.centroid = {config.center.lat + (pts[i].y - config.extent_km / 2.0) / km_per_deg_lat,
                  config.center.lon + (pts[i].x - config.extent_km / 2.0) / km_per_deg_lon};
    t.features.push_back(m);
    t.features.push_back(rng.uniform(0.0, 3.0));
    for (std::size_t k = 0; k < config.noise_indicators; ++k) t.features.push_back(rng.uniform(0.0, 10.0));
    w.mass.push_back(m);
    w.tracts.push_back(std::move(t));
  }

  for (std::size_t i = 0; i < w.tracts.size(); ++i) {
    for (std::size_t j = 0; j < w.tracts.size(); ++j) {
      if (i == j) continue;
      const double km = great_circle_km(w.tracts[i].centroid, w.tracts[j].centroid);
      const std::int64_t t = rng.poisson(gravity_expected_flow(config, w.mass[i], w.mass[j], km));
      if (t > 0) w.flows.push_back({w.tracts[i].id, w.tracts[j].id, t});
    }
  }
  return w;
}

}  // namespace tractflow

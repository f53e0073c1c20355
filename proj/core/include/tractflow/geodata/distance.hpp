#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "tractflow/geodata/tract.hpp"

namespace tractflow {

inline constexpr double kEarthRadiusKm = 6371.0088;

/// Haversine distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(const LatLon& a, const LatLon& b) noexcept;

/// Travel distance between two tracts. Implementations must be symmetric
/// and return finite, nonnegative values.
class DistanceProvider {
 public:
  virtual ~DistanceProvider() = default;
  virtual double km(const Tract& a, const Tract& b) const = 0;
  /// Short tag used in checkpoints ("great_circle", "matrix").
  virtual std::string_view kind() const noexcept = 0;
};

class GreatCircleDistance final : public DistanceProvider {
 public:
  double km(const Tract& a, const Tract& b) const override { return great_circle_km(a.centroid, b.centroid); }
  std::string_view kind() const noexcept override { return "great_circle"; }
};

/// Precomputed distances keyed by unordered tract-id pairs, e.g. exported from
/// a routing engine. Lookups for identical ids return 0; unknown pairs throw
/// UnknownTract.
class MatrixDistance final : public DistanceProvider {
 public:
  using Key = std::pair<std::string, std::string>;

  /// Inserts an undirected entry. If both directions are supplied the two
  /// values are averaged.
  void set(const std::string& a, const std::string& b, double km);
  double km(const Tract& a, const Tract& b) const override;
  double km(std::string_view a, std::string_view b) const;
  std::string_view kind() const noexcept override { return "matrix"; }

  /// Entries with first <= second lexicographically.
  const std::map<Key, double>& entries() const noexcept { return entries_; }

 private:
  std::map<Key, double> entries_;
  std::map<Key, int> counts_;
};

std::shared_ptr<const DistanceProvider> default_distance_provider();

/// Reads a 3-column table (a, b, km) into a MatrixDistance.
std::shared_ptr<MatrixDistance> load_distance_matrix(const std::string& path);

}  // namespace tractflow

#include "tractflow/geodata/distance.hpp"

#include <cmath>
#include <numbers>

#include "tractflow/error.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

double great_circle_km(const LatLon& a, const LatLon& b) noexcept {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double phi1 = a.lat * kRad;
  const double phi2 = b.lat * kRad;
  const double dphi = (b.lat - a.lat) * kRad;
  const double dlambda = (b.lon - a.lon) * kRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

MatrixDistance::Key ordered(std::string_view a, std::string_view b) {
  return a <= b ? MatrixDistance::Key{std::string(a), std::string(b)}
                : MatrixDistance::Key{std::string(b), std::string(a)};
}

}  // namespace

void MatrixDistance::set(const std::string& a, const std::string& b, double km) {
  if (!std::isfinite(km) || km < 0.0) {
    throw Error(Errc::NonFiniteValue, "distance " + a + " -> " + b + " must be finite and >= 0");
  }
  auto key = ordered(a, b);
  int& n = counts_[key];
  double& v = entries_[key];
  v = (v * n + km) / (n + 1);
  ++n;
}

double MatrixDistance::km(std::string_view a, std::string_view b) const {
  if (a == b) return 0.0;
  auto it = entries_.find(ordered(a, b));
  if (it == entries_.end()) {
    throw Error(Errc::UnknownTract, "no distance for pair " + std::string(a) + " / " + std::string(b));
  }
  return it->second;
}

double MatrixDistance::km(const Tract& a, const Tract& b) const { return km(a.id, b.id); }

std::shared_ptr<const DistanceProvider> default_distance_provider() {
  static const auto provider = std::make_shared<const GreatCircleDistance>();
  return provider;
}

std::shared_ptr<MatrixDistance> load_distance_matrix(const std::string& path) {
  const Table table = read_table(path);
  if (table.columns.size() < 3) throw Error(Errc::MissingColumn, path + ": expected columns a, b, km");
  auto out = std::make_shared<MatrixDistance>();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out->set(row[0], row[1], parse_number(row[2], path, r + 1, table.columns[2]));
  }
  return out;
}

}  // namespace tractflow

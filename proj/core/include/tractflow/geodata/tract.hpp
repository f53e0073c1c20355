#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tractflow/numeric/matrix.hpp"

namespace tractflow {

struct LatLon {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// A census tract: opaque id, centroid and raw (unnormalized) indicator values.
struct Tract {
  std::string id;
  LatLon centroid;
  std::vector<double> features;

  friend bool operator==(const Tract&, const Tract&) = default;
};

enum class IndicatorCategory { Infrastructure, LandUse, Speciality };

std::string_view to_string(IndicatorCategory c) noexcept;
IndicatorCategory parse_indicator_category(std::string_view name);

/// Ordered indicator names with their category, sign constraint, and the
/// z-score statistics captured from the training tracts.
class FeatureSchema {
 public:
  struct Indicator {
    std::string name;
    IndicatorCategory category = IndicatorCategory::Infrastructure;
    bool nonnegative = true;
    double mean = 0.0;
    double stddev = 1.0;
    bool constant = false;  // passed through unscaled

    friend bool operator==(const Indicator&, const Indicator&) = default;
  };

  FeatureSchema() = default;
  /// Throws InvalidArgument on duplicate or empty names.
  explicit FeatureSchema(std::vector<Indicator> indicators);
  /// Convenience: every indicator Infrastructure and nonnegative.
  static FeatureSchema from_names(std::span<const std::string> names);

  std::size_t size() const noexcept { return indicators_.size(); }
  std::span<const Indicator> indicators() const noexcept { return indicators_; }
  const Indicator& indicator(std::size_t i) const { return indicators_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::vector<std::string> names() const;

  bool has_normalization() const noexcept { return fitted_; }
  /// Captures per-indicator mean and population stddev from the given tracts.
  void fit_normalization(std::span<const Tract> tracts);
  void set_normalization(std::size_t i, double mean, double stddev, bool constant);

  /// z-scored copy of a raw feature vector.
  std::vector<double> normalize(std::span<const double> raw) const;
  std::vector<double> denormalize(std::span<const double> normalized) const;
  /// n x size() matrix of normalized features in tract order.
  Matrix normalized_matrix(std::span<const Tract> tracts) const;

  /// Checks length, finiteness and sign constraints of a feature vector.
  void validate(std::span<const double> raw, std::string_view context) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<Indicator> indicators_;
  bool fitted_ = false;
};

}  // namespace tractflow

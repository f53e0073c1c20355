#include "tractflow/geodata/tract.hpp"

#include <cmath>
#include <set>

#include "tractflow/error.hpp"

namespace tractflow {

std::string_view to_string(IndicatorCategory c) noexcept {
  switch (c) {
    case IndicatorCategory::Infrastructure: return "infrastructure";
    case IndicatorCategory::LandUse: return "land_use";
    case IndicatorCategory::Speciality: return "speciality";
  }
  return "infrastructure";
}

IndicatorCategory parse_indicator_category(std::string_view name) {
  if (name == "infrastructure") return IndicatorCategory::Infrastructure;
  if (name == "land_use" || name == "land use") return IndicatorCategory::LandUse;
  if (name == "speciality" || name == "specialty") return IndicatorCategory::Speciality;
  throw Error(Errc::ParseError, "unknown indicator category '" + std::string(name) + "'");
}

FeatureSchema::FeatureSchema(std::vector<Indicator> indicators) : indicators_(std::move(indicators)) {
  std::set<std::string_view> seen;
  for (const auto& ind : indicators_) {
    if (ind.name.empty()) throw Error(Errc::InvalidArgument, "empty indicator name");
    if (!seen.insert(ind.name).second) {
      throw Error(Errc::InvalidArgument, "duplicate indicator name '" + ind.name + "'");
    }
  }
}

FeatureSchema FeatureSchema::from_names(std::span<const std::string> names) {
  std::vector<Indicator> inds;
  inds.reserve(names.size());
  for (const auto& n : names) inds.push_back(Indicator{n});
  return FeatureSchema(std::move(inds));
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < indicators_.size(); ++i) {
    if (indicators_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(indicators_.size());
  for (const auto& ind : indicators_) out.push_back(ind.name);
  return out;
}

void FeatureSchema::fit_normalization(std::span<const Tract> tracts) {
  if (tracts.empty()) throw Error(Errc::EmptyInput, "cannot fit normalization on zero tracts");
  const double n = static_cast<double>(tracts.size());
  for (std::size_t c = 0; c < indicators_.size(); ++c) {
    double sum = 0.0;
    for (const auto& t : tracts) sum += t.features.at(c);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& t : tracts) {
      const double d = t.features[c] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / n);
    // Relative threshold so that columns that are constant up to rounding are flagged.
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    set_normalization(c, mean, constant ? 1.0 : sd, constant);
  }
  fitted_ = true;
}

void FeatureSchema::set_normalization(std::size_t i, double mean, double stddev, bool constant) {
  if (!std::isfinite(mean) || !std::isfinite(stddev) || !(stddev > 0.0)) {
    throw Error(Errc::NonFiniteValue, "normalization stats for '" + indicators_.at(i).name + "'");
  }
  indicators_.at(i).mean = mean;
  indicators_[i].stddev = stddev;
  indicators_[i].constant = constant;
  fitted_ = true;
}

std::vector<double> FeatureSchema::normalize(std::span<const double> raw) const {
  if (raw.size() != indicators_.size()) throw Error(Errc::SchemaMismatch, "feature length differs from schema");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& ind = indicators_[i];
    out[i] = ind.constant ? raw[i] : (raw[i] - ind.mean) / ind.stddev;
  }
  return out;
}

std::vector<double> FeatureSchema::denormalize(std::span<const double> normalized) const {
  if (normalized.size() != indicators_.size()) throw Error(Errc::SchemaMismatch, "feature length differs from schema");
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const auto& ind = indicators_[i];
    out[i] = ind.constant ? normalized[i] : normalized[i] * ind.stddev + ind.mean;
  }
  return out;
}

Matrix FeatureSchema::normalized_matrix(std::span<const Tract> tracts) const {
  Matrix m(tracts.size(), indicators_.size());
  for (std::size_t r = 0; r < tracts.size(); ++r) {
    const auto z = normalize(tracts[r].features);
    std::copy(z.begin(), z.end(), m.row(r).begin());
  }
  return m;
}

void FeatureSchema::validate(std::span<const double> raw, std::string_view context) const {
  if (raw.size() != indicators_.size()) {
    throw Error(Errc::SchemaMismatch, std::string(context) + ": expected " + std::to_string(indicators_.size()) +
                                          " indicators, got " + std::to_string(raw.size()));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      throw Error(Errc::NonFiniteValue, std::string(context) + ", column " + indicators_[i].name);
    }
    if (indicators_[i].nonnegative && raw[i] < 0.0) {
      throw Error(Errc::NegativeForbidden, std::string(context) + ", column " + indicators_[i].name);
    }
  }
}

}  // namespace tractflow

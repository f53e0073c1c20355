#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>

namespace tractflow {

struct PairKey {
  std::string origin;
  std::string destination;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

/// Flow value per ordered (origin, destination) pair.
using FlowMap = std::map<PairKey, double>;

// All three throw EmptyInput on empty maps and KeyMismatch unless both maps
// hold exactly the same pairs.
double rmse(const FlowMap& pred, const FlowMap& truth);
double mae(const FlowMap& pred, const FlowMap& truth);
/// 2 * sum min(pred, truth) / (sum pred + sum truth). Throws BothTotalsZero.
double cpc(const FlowMap& pred, const FlowMap& truth);

// Aligned-vector forms; throw DimensionMismatch on unequal lengths.
double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);
double cpc(std::span<const double> pred, std::span<const double> truth);

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  double cpc = 0.0;
  std::size_t n_pairs = 0;
  std::string label;  // city or dataset name
  std::string split;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Evaluates over the truth's pairs. With assume_zero, truth pairs missing
/// from pred count as a prediction of 0; pred pairs absent from truth are
/// always a KeyMismatch.
EvalReport evaluate(const FlowMap& pred, const FlowMap& truth, std::string label, std::string split,
                    bool assume_zero = false);

/// Single-line JSON record.
std::string report_json(const EvalReport& report);
/// Human table with columns City/split, RMSE, MAE, CPC (two decimals).
std::string report_table(std::span<const EvalReport> reports);

}  // namespace tractflow

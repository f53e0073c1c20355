#include "tractflow/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <nlohmann/json.hpp>

#include "tractflow/error.hpp"

namespace tractflow {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "prediction and truth lengths differ");
  if (a.empty()) throw Error(Errc::EmptyInput, "no pairs to evaluate");
}

std::string describe(const PairKey& k) { return "(" + k.origin + ", " + k.destination + ")"; }

/// Aligned values in key order; both maps must hold the same keys.
void align(const FlowMap& pred, const FlowMap& truth, std::vector<double>& p, std::vector<double>& t) {
  auto pi = pred.begin();
  auto ti = truth.begin();
  while (pi != pred.end() || ti != truth.end()) {
    if (ti == truth.end() || (pi != pred.end() && pi->first < ti->first)) {
      throw Error(Errc::KeyMismatch, "pair " + describe(pi->first) + " has a prediction but no observation");
    }
    if (pi == pred.end() || ti->first < pi->first) {
      throw Error(Errc::KeyMismatch, "pair " + describe(ti->first) + " has no prediction");
    }
    p.push_back(pi->second);
    t.push_back(ti->second);
    ++pi;
    ++ti;
  }
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double cpc(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double common = 0.0;
  double sp = 0.0;
  double st = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    common += std::min(pred[i], truth[i]);
    sp += pred[i];
    st += truth[i];
  }
  if (sp + st == 0.0) throw Error(Errc::BothTotalsZero, "CPC is undefined when both totals are zero");
  return 2.0 * common / (sp + st);
}

double rmse(const FlowMap& pred, const FlowMap& truth) {
  std::vector<double> p, t;
  align(pred, truth, p, t);
  return rmse(p, t);
}

double mae(const FlowMap& pred, const FlowMap& truth) {
  std::vector<double> p, t;
  align(pred, truth, p, t);
  return mae(p, t);
}

double cpc(const FlowMap& pred, const FlowMap& truth) {
  std::vector<double> p, t;
  align(pred, truth, p, t);
  return cpc(p, t);
}

EvalReport evaluate(const FlowMap& pred, const FlowMap& truth, std::string label, std::string split,
                    bool assume_zero) {
  std::vector<double> p, t;
  if (assume_zero) {
    for (const auto& [key, value] : pred) {
      if (!truth.contains(key)) {
        throw Error(Errc::KeyMismatch, "pair " + describe(key) + " has a prediction but no observation");
      }
    }
    for (const auto& [key, value] : truth) {
      const auto it = pred.find(key);
      p.push_back(it == pred.end() ? 0.0 : it->second);
      t.push_back(value);
    }
  } else {
    align(pred, truth, p, t);
  }
  EvalReport r;
  r.rmse = rmse(p, t);
  r.mae = mae(p, t);
  r.cpc = cpc(p, t);
  r.n_pairs = p.size();
  r.label = std::move(label);
  r.split = std::move(split);
  return r;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["label"] = report.label;
  j["split"] = report.split;
  j["n_pairs"] = report.n_pairs;
  j["rmse"] = report.rmse;
  j["mae"] = report.mae;
  j["cpc"] = report.cpc;
  return j.dump();
}

std::string report_table(std::span<const EvalReport> reports) {
  std::size_t width = std::string("City/split").size();
  for (const auto& r : reports) width = std::max(width, r.label.size() + 1 + r.split.size());
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s\n", static_cast<int>(width), "City/split", "RMSE", "MAE", "CPC");
  out += buf;
  for (const auto& r : reports) {
    const std::string name = r.label + "/" + r.split;
    std::snprintf(buf, sizeof buf, "%-*s  %8.2f  %8.2f  %8.2f\n", static_cast<int>(width), name.c_str(), r.rmse, r.mae,
                  r.cpc);
    out += buf;
  }
  return out;
}

}  // namespace tractflow

#include "tractflow/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tractflow/error.hpp"
#include "tractflow/util/digest.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(EditOp op) noexcept { return op == EditOp::Set ? "set" : "add"; }

EditOp parse_edit_op(std::string_view text) {
  if (text == "set") return EditOp::Set;
  if (text == "add") return EditOp::Add;
  throw Error(Errc::InvalidArgument, "edit op must be \"set\" or \"add\", got \"" + std::string(text) + "\"");
}

namespace {

std::string require_string(const ordered_json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(Errc::InvalidArgument, std::string(where) + ": \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

Scenario parse_scenario(std::string_view json_text, std::string_view source) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, std::string(source) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::ParseError, std::string(source) + ": scenario must be a JSON object");
  Scenario s;
  s.name = require_string(doc, "name", source);
  if (s.name.empty()) throw Error(Errc::InvalidArgument, std::string(source) + ": scenario name is empty");
  if (doc.contains("note")) s.note = require_string(doc, "note", source);
  const auto edits = doc.find("edits");
  if (edits == doc.end()) return s;
  if (!edits->is_array()) throw Error(Errc::InvalidArgument, std::string(source) + ": \"edits\" must be an array");
  for (std::size_t i = 0; i < edits->size(); ++i) {
    const auto& e = (*edits)[i];
    const std::string where = std::string(source) + ": edit " + std::to_string(i);
    if (!e.is_object()) throw Error(Errc::InvalidArgument, where + " must be an object");
    ScenarioEdit edit;
    edit.tract_id = require_string(e, "tract_id", where);
    edit.indicator = require_string(e, "indicator", where);
    edit.op = parse_edit_op(require_string(e, "op", where));
    const auto v = e.find("value");
    if (v == e.end() || !v->is_number()) throw Error(Errc::InvalidArgument, where + ": \"value\" must be a number");
    edit.value = v->get<double>();
    if (!std::isfinite(edit.value)) throw Error(Errc::NonFiniteValue, where + ": value is not finite");
    s.edits.push_back(std::move(edit));
  }
  return s;
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path), path); }

std::string scenario_to_json(const Scenario& scenario) {
  ordered_json j;
  j["name"] = scenario.name;
  j["note"] = scenario.note;
  j["edits"] = ordered_json::array();
  for (const auto& e : scenario.edits) {
    j["edits"].push_back(
        {{"tract_id", e.tract_id}, {"indicator", e.indicator}, {"op", to_string(e.op)}, {"value", e.value}});
  }
  return j.dump();
}

std::string scenario_content_hash(const Scenario& scenario) { return sha256_hex(scenario_to_json(scenario)); }

std::vector<std::size_t> edited_tracts(const TractGraph& graph, const Scenario& scenario) {
  std::vector<std::size_t> out;
  for (const auto& e : scenario.edits) out.push_back(graph.require_index(e.tract_id));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TractGraph apply_scenario(const TractGraph& graph, const FeatureSchema& schema, const Scenario& scenario) {
  std::vector<Tract> tracts(graph.tracts().begin(), graph.tracts().end());
  for (const auto& e : scenario.edits) {
    const std::size_t t = graph.require_index(e.tract_id);
    const auto k = schema.find(e.indicator);
    if (!k) throw Error(Errc::UnknownIndicator, "unknown indicator \"" + e.indicator + "\"");
    if (tracts[t].features.size() != schema.size()) {
      throw Error(Errc::SchemaMismatch, "tract " + e.tract_id + " does not match the model schema");
    }
    double& v = tracts[t].features[*k];
    v = e.op == EditOp::Set ? e.value : v + e.value;
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, e.tract_id + "/" + e.indicator + " is not finite");
    if (schema.indicator(*k).nonnegative && v < 0.0) {
      throw Error(Errc::NegativeForbidden,
                  e.tract_id + "/" + e.indicator + " would become " + format_double(v) + " but must be >= 0");
    }
  }
  return graph.with_tracts(std::move(tracts));
}

std::vector<std::pair<std::size_t, std::size_t>> scenario_pair_universe(const TractGraph& graph,
                                                                        const FlowTable& observed,
                                                                        std::span<const std::size_t> edited, int hops,
                                                                        double cutoff_km) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& r : observed.records()) {
    pairs.emplace(graph.require_index(r.origin), graph.require_index(r.destination));
  }
  for (std::size_t a : graph.within_hops(edited, hops)) {
    for (std::size_t j = 0; j < graph.size(); ++j) {
      if (j == a || graph.pair_km(a, j) > cutoff_km) continue;
      pairs.emplace(a, j);
      pairs.emplace(j, a);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out(pairs.begin(), pairs.end());
  std::sort(out.begin(), out.end(), [&](const auto& x, const auto& y) {
    const auto& xo = graph.tract(x.first).id;
    const auto& yo = graph.tract(y.first).id;
    if (xo != yo) return xo < yo;
    return graph.tract(x.second).id < graph.tract(y.second).id;
  });
  return out;
}

ScenarioEngine::ScenarioEngine(const TrainedModel& model) : model_(model) {
  const FlowPredictor base(model, model.graph);
  const std::size_t n = model.graph.size();
  baseline_.assign(n * n, 0.0);
  for (std::size_t o = 0; o < n; ++o) {
    for (std::size_t d = 0; d < n; ++d) {
      if (o != d) baseline_[o * n + d] = base.predict(o, d);
    }
  }
}

FlowDiff ScenarioEngine::evaluate(const Scenario& scenario, const ScenarioOptions& options) const {
  if (!(options.cutoff_km > 0.0)) throw Error(Errc::InvalidArgument, "cutoff_km must be > 0");
  const TractGraph& base = model_.graph;
  const std::vector<std::size_t> edited = edited_tracts(base, scenario);
  const TractGraph modified = apply_scenario(base, model_.schema, scenario);
  const FlowPredictor after(model_, modified);
  const int hops = model_.config.gat.layers;
  // Embeddings of nodes farther than `hops` from every edit are bit-identical.
  std::vector<char> reach(base.size(), 0);
  for (std::size_t i : base.within_hops(edited, hops)) reach[i] = 1;

  FlowDiff diff;
  diff.scenario_name = scenario.name;
  for (const auto& [o, d] : scenario_pair_universe(base, model_.flows, edited, hops, options.cutoff_km)) {
    PairDiff p;
    p.origin = base.tract(o).id;
    p.destination = base.tract(d).id;
    p.baseline = baseline(o, d);
    p.scenario = (options.full_recompute || reach[o] || reach[d]) ? after.predict(o, d) : p.baseline;
    if (p.baseline > 0.0) {
      p.relative = (p.scenario - p.baseline) / p.baseline;
      diff.pairs.push_back(std::move(p));
    } else {
      diff.undefined.push_back(std::move(p));
    }
  }
  return diff;
}

FlowDiff predict_scenario(const TrainedModel& model, const Scenario& scenario, const ScenarioOptions& options) {
  return ScenarioEngine(model).evaluate(scenario, options);
}

PairSet neighborhood_pairs(const TractGraph& graph, std::span<const std::string> modified, double radius_km) {
  if (!(radius_km > 0.0) || !std::isfinite(radius_km)) throw Error(Errc::InvalidArgument, "radius must be > 0");
  const double limit = radius_km * (1.0 + 1e-9);
  std::vector<std::size_t> centers;
  for (const auto& id : modified) centers.push_back(graph.require_index(id));
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (std::size_t c : centers) {
      if (great_circle_km(graph.tract(i).centroid, graph.tract(c).centroid) <= limit) {
        inside.push_back(i);
        break;
      }
    }
  }
  PairSet out;
  for (std::size_t a : inside) {
    for (std::size_t b : inside) {
      if (a != b) out.emplace(graph.tract(a).id, graph.tract(b).id);
    }
  }
  return out;
}

Histogram equal_width_histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw Error(Errc::InvalidArgument, "histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  if (values.empty()) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn;
  double hi = *mx;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  for (int k = 0; k < bins; ++k) h.edges.push_back(lo + width * k);
  h.edges.push_back(hi);
  for (double v : values) {
    auto k = static_cast<std::size_t>(std::floor((v - lo) / width));
    k = std::min(k, h.counts.size() - 1);
    ++h.counts[k];
  }
  return h;
}

DiffSummary summarize(const FlowDiff& diff, const std::optional<PairSet>& filter, int bins, std::string filter_label) {
  auto keep = [&](const PairDiff& p) { return !filter || filter->contains({p.origin, p.destination}); };
  std::vector<double> rel;
  for (const auto& p : diff.pairs) {
    if (keep(p)) rel.push_back(p.relative);
  }
  if (rel.empty()) throw Error(Errc::NoDefinedPairs, "no pair with a defined relative change passes the filter");
  DiffSummary s;
  double sum = 0.0;
  for (double r : rel) sum += r;
  s.mean = sum / static_cast<double>(rel.size());
  double ss = 0.0;
  for (double r : rel) ss += (r - s.mean) * (r - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(rel.size()));
  s.n_defined = rel.size();
  s.n_undefined = static_cast<std::size_t>(std::count_if(diff.undefined.begin(), diff.undefined.end(), keep));
  s.histogram = equal_width_histogram(rel, bins);
  s.filter = std::move(filter_label);
  return s;
}

std::string radius_label(double radius_km) { return format_double(radius_km) + " km"; }

DiffReport make_diff_report(const TractGraph& graph, const Scenario& scenario, const FlowDiff& diff,
                            std::optional<double> radius_km, int bins) {
  DiffReport r;
  r.content_hash = scenario_content_hash(scenario);
  std::vector<std::string> modified;
  for (std::size_t i : edited_tracts(graph, scenario)) modified.push_back(graph.tract(i).id);
  if (radius_km && !modified.empty()) {
    const PairSet filter = neighborhood_pairs(graph, modified, *radius_km);
    r.diff.scenario_name = diff.scenario_name;
    for (const auto& p : diff.pairs) {
      if (filter.contains({p.origin, p.destination})) r.diff.pairs.push_back(p);
    }
    for (const auto& p : diff.undefined) {
      if (filter.contains({p.origin, p.destination})) r.diff.undefined.push_back(p);
    }
    r.summary = summarize(r.diff, std::nullopt, bins, radius_label(*radius_km));
  } else {
    if (radius_km && !(*radius_km > 0.0)) throw Error(Errc::InvalidArgument, "radius must be > 0");
    r.diff = diff;
    r.summary = summarize(r.diff, std::nullopt, bins, "all pairs");
  }
  return r;
}

namespace {

ordered_json summary_object(const DiffSummary& s) {
  ordered_json j;
  j["filter"] = s.filter;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["n_defined"] = s.n_defined;
  j["n_undefined"] = s.n_undefined;
  j["histogram"] = {{"edges", s.histogram.edges}, {"counts", s.histogram.counts}};
  return j;
}

}  // namespace

std::string summary_json(const DiffSummary& summary) { return summary_object(summary).dump(); }

std::string diff_report_json(const DiffReport& report) {
  ordered_json j;
  j["scenario"] = report.diff.scenario_name;
  j["content_hash"] = report.content_hash;
  j["summary"] = summary_object(report.summary);
  j["pairs"] = ordered_json::array();
  for (const auto& p : report.diff.pairs) {
    j["pairs"].push_back({{"origin", p.origin},
                          {"destination", p.destination},
                          {"baseline", p.baseline},
                          {"scenario", p.scenario},
                          {"relative_change", p.relative}});
  }
  j["undefined"] = ordered_json::array();
  for (const auto& p : report.diff.undefined) {
    j["undefined"].push_back(
        {{"origin", p.origin}, {"destination", p.destination}, {"baseline", p.baseline}, {"scenario", p.scenario}});
  }
  return j.dump();
}

std::string diff_pairs_csv(const FlowDiff& diff) {
  std::ostringstream out;
  out << "origin,destination,baseline,scenario,relative_change\n";
  for (const auto& p : diff.pairs) {
    out << p.origin << ',' << p.destination << ',' << format_double(p.baseline) << ',' << format_double(p.scenario)
        << ',' << format_double(p.relative) << '\n';
  }
  for (const auto& p : diff.undefined) {
    out << p.origin << ',' << p.destination << ',' << format_double(p.baseline) << ',' << format_double(p.scenario)
        << ",\n";
  }
  return out.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t k = 0; k < h.counts.size() && k + 1 < h.edges.size(); ++k) {
    out << format_double(h.edges[k]) << ',' << format_double(h.edges[k + 1]) << ',' << h.counts[k] << '\n';
  }
  return out.str();
}

}  // namespace tractflow

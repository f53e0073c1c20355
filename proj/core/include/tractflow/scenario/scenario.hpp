#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tractflow/geodata/graph.hpp"
#include "tractflow/model/flow_model.hpp"

namespace tractflow {

enum class EditOp { Set, Add };

std::string_view to_string(EditOp op) noexcept;
/// "set" or "add"; throws InvalidArgument otherwise.
EditOp parse_edit_op(std::string_view text);

struct ScenarioEdit {
  std::string tract_id;
  std::string indicator;
  EditOp op = EditOp::Set;
  double value = 0.0;

  friend bool operator==(const ScenarioEdit&, const ScenarioEdit&) = default;
};

/// A named what-if: indicator edits applied in list order.
struct Scenario {
  std::string name;
  std::string note;
  std::vector<ScenarioEdit> edits;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses the scenario document. Throws ParseError on malformed JSON and
/// InvalidArgument/NonFiniteValue on bad fields.
Scenario parse_scenario(std::string_view json_text, std::string_view source = "<scenario>");
Scenario load_scenario(const std::string& path);
/// Canonical compact JSON; equal scenarios serialize identically.
std::string scenario_to_json(const Scenario& scenario);
/// SHA-256 of the canonical JSON.
std::string scenario_content_hash(const Scenario& scenario);

/// Copy of the graph with the edits applied. Throws UnknownTract,
/// UnknownIndicator or NegativeForbidden; the input graph is never modified.
TractGraph apply_scenario(const TractGraph& graph, const FeatureSchema& schema, const Scenario& scenario);

/// Sorted indices of the tracts a scenario edits. Throws UnknownTract.
std::vector<std::size_t> edited_tracts(const TractGraph& graph, const Scenario& scenario);

struct PairDiff {
  std::string origin;
  std::string destination;
  double baseline = 0.0;
  double scenario = 0.0;
  double relative = 0.0;  // (scenario - baseline) / baseline; 0 in the undefined list

  friend bool operator==(const PairDiff&, const PairDiff&) = default;
};

/// Per-pair predictions before and after a scenario. Pairs with a zero
/// baseline have no relative change and are kept apart with absolute values.
struct FlowDiff {
  std::string scenario_name;
  std::vector<PairDiff> pairs;      // baseline > 0
  std::vector<PairDiff> undefined;  // baseline == 0

  friend bool operator==(const FlowDiff&, const FlowDiff&) = default;
};

struct ScenarioOptions {
  double cutoff_km = 30.0;  // cap on pairs added around edited tracts
  /// Re-predict every pair instead of only those whose embeddings can change.
  bool full_recompute = false;
};

/// Ordered pairs in the prediction universe: every observed pair plus all
/// pairs with an endpoint within `hops` of an edited tract and distance <=
/// cutoff. Sorted by (origin id, destination id).
std::vector<std::pair<std::size_t, std::size_t>> scenario_pair_universe(const TractGraph& graph,
                                                                        const FlowTable& observed,
                                                                        std::span<const std::size_t> edited, int hops,
                                                                        double cutoff_km);

/// Frozen model plus baseline predictions for its base graph; evaluates many
/// scenarios without recomputing the baseline. Read-only and reentrant.
class ScenarioEngine {
 public:
  explicit ScenarioEngine(const TrainedModel& model);

  const TrainedModel& model() const noexcept { return model_; }
  const TractGraph& base_graph() const noexcept { return model_.graph; }
  /// Baseline prediction for a pair of distinct tract indices.
  double baseline(std::size_t origin, std::size_t destination) const {
    return baseline_[origin * model_.graph.size() + destination];
  }

  FlowDiff evaluate(const Scenario& scenario, const ScenarioOptions& options = {}) const;

 private:
  const TrainedModel& model_;
  std::vector<double> baseline_;  // dense n x n, diagonal unused
};

/// One-shot form of ScenarioEngine::evaluate.
FlowDiff predict_scenario(const TrainedModel& model, const Scenario& scenario, const ScenarioOptions& options = {});

using PairSet = std::set<std::pair<std::string, std::string>>;

/// Ordered pairs (i, j), i != j, whose centroids both lie within radius_km of
/// some modified tract (inclusive). Throws InvalidArgument unless radius > 0.
PairSet neighborhood_pairs(const TractGraph& graph, std::span<const std::string> modified, double radius_km);

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending
  std::vector<std::size_t> counts;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

struct DiffSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t n_defined = 0;
  std::size_t n_undefined = 0;
  Histogram histogram;
  std::string filter;  // "all pairs" or e.g. "2 km"

  friend bool operator==(const DiffSummary&, const DiffSummary&) = default;
};

/// Equal-width histogram over [min, max] of the values; a zero-width range is
/// widened to [v - 0.5, v + 0.5]. Throws InvalidArgument unless bins >= 1.
Histogram equal_width_histogram(std::span<const double> values, int bins);

/// Mean, population stddev and histogram of relative changes over the pairs
/// in `filter` (all pairs when absent). Throws NoDefinedPairs when no defined
/// relative change passes the filter.
DiffSummary summarize(const FlowDiff& diff, const std::optional<PairSet>& filter, int bins = 40,
                      std::string filter_label = "all pairs");

/// "2 km", "0.5 km".
std::string radius_label(double radius_km);

/// Applies the optional radius filter around the edited tracts and
/// summarizes. With no edited tracts the filter is vacuous.
struct DiffReport {
  FlowDiff diff;  // restricted to the filtered pairs
  DiffSummary summary;
  std::string content_hash;
};
DiffReport make_diff_report(const TractGraph& graph, const Scenario& scenario, const FlowDiff& diff,
                            std::optional<double> radius_km, int bins);

/// JSON document shared by the command-line export and the HTTP service.
std::string diff_report_json(const DiffReport& report);
/// "origin,destination,baseline,scenario,relative_change"; undefined rows
/// leave relative_change empty.
std::string diff_pairs_csv(const FlowDiff& diff);
/// "bin_lo,bin_hi,count".
std::string histogram_csv(const Histogram& histogram);
/// Single-line JSON summary record.
std::string summary_json(const DiffSummary& summary);

}  // namespace tractflow

#pragma once

#include <string>
#include <vector>

#include "tractflow/gat/encoder.hpp"
#include "tractflow/gbrt/boosting.hpp"
#include "tractflow/geodata/flows.hpp"
#include "tractflow/geodata/graph.hpp"
#include "tractflow/metrics/metrics.hpp"
#include "tractflow/train/multitask.hpp"

namespace tractflow {

struct PipelineConfig {
  GatConfig gat;
  TrainConfig train;
  BoostConfig boost;
  std::string label = "dataset";  // first column of the report table

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Everything needed to embed a (possibly edited) city and predict flows:
/// configs, the normalized schema, both encoders with their heads, the
/// boosted ensemble, and the base dataset it was trained on.
struct TrainedModel {
  PipelineConfig config;
  FeatureSchema schema;
  ParamStore params;
  TreeEnsemble ensemble;
  TractGraph graph;
  FlowTable flows;
};

struct TrainOutcome {
  TrainedModel model;
  std::vector<EpochLog> encoder_log;
  int best_epoch = 0;
  BoostLog boost_log;
  EvalReport test_report;
};

/// Fits normalization on the graph's tracts, trains both encoders, embeds the
/// city with the best parameters, then fits the ensemble on the train split
/// with early stopping on validation and evaluates on test. Throws
/// InsufficientData when the test split is empty.
TrainOutcome train_pipeline(TractGraph graph, FeatureSchema schema, FlowTable flows, const PipelineConfig& config);

/// Embeddings of one graph under a frozen model, ready for pair predictions.
class FlowPredictor {
 public:
  /// Throws SchemaMismatch when the graph's features do not match the model.
  FlowPredictor(const TrainedModel& model, const TractGraph& graph);

  const EmbeddingSet& embeddings() const noexcept { return embeddings_; }
  std::vector<double> features(std::size_t origin, std::size_t destination) const;
  /// Clamped ensemble prediction for an ordered pair of distinct tracts.
  double predict(std::size_t origin, std::size_t destination) const;

 private:
  const TrainedModel& model_;
  const TractGraph& graph_;
  EmbeddingSet embeddings_;
};

/// Model predictions and observations for the records of one split, keyed by
/// tract-id pair.
struct SplitPredictions {
  FlowMap predicted;
  FlowMap observed;
};
SplitPredictions predict_split(const TrainedModel& model, const FlowTable& flows, Split split);

/// Evaluation of `flows` (which may differ from the model's own table) on one
/// split.
EvalReport evaluate_split(const TrainedModel& model, const FlowTable& flows, Split split, bool assume_zero = false);

/// Gradient boosting on travel distance alone, the reference every embedding
/// model must beat. Returns test-split predictions and observations.
SplitPredictions distance_only_baseline(const TractGraph& graph, const FlowTable& flows, const BoostConfig& config);

}  // namespace tractflow

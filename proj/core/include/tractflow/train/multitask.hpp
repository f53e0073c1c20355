#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tractflow/gat/encoder.hpp"
#include "tractflow/geodata/flows.hpp"
#include "tractflow/numeric/optimizer.hpp"

namespace tractflow {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 256;  // OD pairs per step
  double lr = 0.01;
  double aux_weight_in = 0.5;
  double aux_weight_out = 0.5;
  int patience = 10;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double clip_norm = 1.0;  // global gradient-norm cap; 0 disables
  bool log1p_targets = false;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Per-tract production and attraction totals over the train split only.
struct NodeTotals {
  std::vector<double> outflow;  // sum_j T_ij
  std::vector<double> inflow;   // sum_i T_ij

  static NodeTotals from_train_split(const TractGraph& graph, const FlowTable& flows);
};

/// A set of OD pairs resolved to node indices, with the constant distance
/// input exp(-km / scale) and the regression target.
struct PairBatch {
  std::vector<std::size_t> origins;
  std::vector<std::size_t> destinations;
  std::vector<double> distance_km;
  std::vector<double> targets;

  std::size_t size() const noexcept { return origins.size(); }
  PairBatch subset(std::span<const std::size_t> rows) const;
};

/// Resolves the records of one split against the graph.
PairBatch make_pair_batch(const TractGraph& graph, const FlowTable& flows, Split split);

struct LossWeights {
  double outflow = 0.5;
  double inflow = 0.5;
};

namespace heads {
inline constexpr const char* kFlowWeight = "flow_head.weight";
inline constexpr const char* kFlowBias = "flow_head.bias";
inline constexpr const char* kOutflowWeight = "outflow_head.weight";
inline constexpr const char* kOutflowBias = "outflow_head.bias";
inline constexpr const char* kInflowWeight = "inflow_head.weight";
inline constexpr const char* kInflowBias = "inflow_head.bias";
}  // namespace heads

/// Adds the training flow head ((2m+1) x 1 affine) and the two per-node
/// auxiliary heads (m x 1 affine each).
void init_heads(ParamStore& store, std::size_t embedding_dim, Rng& rng);

/// Affine map on [origin || destination || exp(-km / scale)].
double training_flow_head(std::span<const double> origin, std::span<const double> destination, double km,
                          const ParamStore& params, double distance_scale_km);

/// Flow head over a batch on a tape; returns batch x 1 predictions.
Var flow_head(Tape& tape, const ParamBinder& bind, Var origin_emb, Var destination_emb, const PairBatch& batch,
              double distance_scale_km);

/// MSE_flow + w_out * MSE_outflow + w_in * MSE_inflow from plain predictions.
double multitask_loss(std::span<const double> flow_pred, std::span<const double> flow_true,
                      std::span<const double> outflow_pred, std::span<const double> outflow_true,
                      std::span<const double> inflow_pred, std::span<const double> inflow_true,
                      const LossWeights& weights);

/// The same loss recorded on a tape from the two embedding matrices.
Var multitask_loss(Tape& tape, const ParamBinder& bind, Var origin_emb, Var destination_emb, const PairBatch& batch,
                   const NodeTotals& totals, const LossWeights& weights, double distance_scale_km);

struct EpochLog {
  int epoch = 0;  // 0 = before any update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainingResult {
  ParamStore params;  // parameters of the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Builds the parameter store for both encoders and all heads.
ParamStore init_model_params(std::size_t input_dim, const GatConfig& gat, std::uint64_t seed);

/// End-to-end mini-batch training of both encoders and the heads on the train
/// split, with early stopping on validation flow MSE. The graph's tracts must
/// carry raw features; the schema supplies normalization statistics.
TrainingResult train_encoders(const TractGraph& graph, const FeatureSchema& schema, const FlowTable& flows,
                              const GatConfig& gat, const TrainConfig& config);

/// "epoch,train_loss,val_loss,lr" table.
std::string format_training_log(std::span<const EpochLog> log);

}  // namespace tractflow

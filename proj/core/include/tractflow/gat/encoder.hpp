#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tractflow/geodata/graph.hpp"
#include "tractflow/numeric/autodiff.hpp"

namespace tractflow {

class Rng;

struct GatConfig {
  int layers = 2;
  int hidden_dim = 64;
  int embedding_dim = 64;
  int attention_heads = 1;
  double distance_scale_km = 5.0;

  /// Throws InvalidArgument unless all fields are positive and every layer
  /// width divides evenly across the heads.
  void validate() const;

  friend bool operator==(const GatConfig&, const GatConfig&) = default;
};

/// Origin-role and destination-role embeddings, one row per tract.
struct EmbeddingSet {
  Matrix origin;
  Matrix destination;
};

/// Attention neighborhoods of a tract graph: each node's list holds the node
/// itself plus its graph neighbors, ordered by tract id, with the constant
/// distance factor exp(-km / scale) per entry (1 for the self entry).
struct AttentionGraph {
  NeighborIndex index;
  Matrix distance_factor;  // nnz x 1

  static AttentionGraph build(const TractGraph& graph, double distance_scale_km);
};

/// Resolves a parameter name to a tape node: trainable() binds gradients back
/// into the store, frozen() records a constant copy.
using ParamBinder = std::function<Var(Tape&, std::string_view)>;
ParamBinder trainable(ParamStore& store);
ParamBinder frozen(const ParamStore& store);

/// One multi-layer graph attention encoder living under a parameter prefix
/// such as "origin_encoder". Hidden layers use leaky-ReLU; the last layer is
/// linear so a zero network reduces to its final bias.
class GatEncoder {
 public:
  GatEncoder(std::string prefix, GatConfig config, std::size_t input_dim);

  const std::string& prefix() const noexcept { return prefix_; }
  const GatConfig& config() const noexcept { return config_; }
  std::size_t input_dim() const noexcept { return input_dim_; }

  std::size_t layer_input_dim(int layer) const;
  std::size_t layer_output_dim(int layer) const;

  std::string weight_name(int layer, int head) const;
  std::string attn_self_name(int layer, int head) const;
  std::string attn_neighbor_name(int layer, int head) const;
  std::string bias_name(int layer) const;

  /// Adds this encoder's parameters (Glorot weights, zero biases).
  void init_params(ParamStore& store, Rng& rng) const;

  /// Records the encoder on a tape. features is n x input_dim. When
  /// attention_trace is given, the nnz x 1 attention node of every
  /// (layer, head) is appended in that order.
  Var forward(Tape& tape, const ParamBinder& bind, const AttentionGraph& graph, Var features,
              std::vector<Var>* attention_trace = nullptr) const;

 private:
  std::string prefix_;
  GatConfig config_;
  std::size_t input_dim_;
};

inline constexpr std::string_view kOriginEncoder = "origin_encoder";
inline constexpr std::string_view kDestinationEncoder = "destination_encoder";

/// Runs both encoders with frozen parameters over raw-feature tracts,
/// normalizing with the schema's stored statistics. Throws SchemaMismatch when
/// the feature length differs from what the parameters were trained on.
EmbeddingSet encode(const TractGraph& graph, const FeatureSchema& schema, const ParamStore& params,
                    const GatConfig& config);

/// Same as encode() on an already-normalized feature matrix.
EmbeddingSet encode_normalized(const AttentionGraph& attention, const Matrix& features, const ParamStore& params,
                               const GatConfig& config);

/// Attention weights of `node` in the given layer/head: (neighbor index,
/// weight) pairs over the node itself and its neighbors, in summation order.
std::vector<std::pair<std::size_t, double>> attention_coefficients(const TractGraph& graph, const Matrix& features,
                                                                   const ParamStore& params, const GatConfig& config,
                                                                   std::string_view encoder_prefix, int layer,
                                                                   int head, std::size_t node);

}  // namespace tractflow

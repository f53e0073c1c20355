#include "tractflow/gat/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "tractflow/error.hpp"
#include "tractflow/numeric/random.hpp"

namespace tractflow {

void GatConfig::validate() const {
  if (layers < 1 || hidden_dim < 1 || embedding_dim < 1 || attention_heads < 1) {
    throw Error(Errc::InvalidArgument, "GAT layers, dimensions and heads must be positive");
  }
  if (!(distance_scale_km > 0.0) || !std::isfinite(distance_scale_km)) {
    throw Error(Errc::InvalidArgument, "distance_scale_km must be > 0");
  }
  if (embedding_dim % attention_heads != 0 || (layers > 1 && hidden_dim % attention_heads != 0)) {
    throw Error(Errc::InvalidArgument, "layer widths must be divisible by attention_heads");
  }
}

AttentionGraph AttentionGraph::build(const TractGraph& graph, double distance_scale_km) {
  AttentionGraph ag;
  const std::size_t n = graph.size();
  ag.index.offsets.reserve(n + 1);
  ag.index.offsets.push_back(0);
  std::vector<double> factors;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& own_id = graph.tract(i).id;
    bool self_done = false;
    for (const auto& nb : graph.neighbors(i)) {
      if (!self_done && own_id < graph.tract(nb.node).id) {
        ag.index.targets.push_back(i);
        factors.push_back(1.0);
        self_done = true;
      }
      ag.index.targets.push_back(nb.node);
      factors.push_back(std::exp(-nb.km / distance_scale_km));
    }
    if (!self_done) {
      ag.index.targets.push_back(i);
      factors.push_back(1.0);
    }
    ag.index.offsets.push_back(ag.index.targets.size());
  }
  ag.distance_factor = Matrix::column(factors);
  return ag;
}

ParamBinder trainable(ParamStore& store) {
  return [&store](Tape& t, std::string_view name) { return t.param(store, name); };
}

ParamBinder frozen(const ParamStore& store) {
  return [&store](Tape& t, std::string_view name) { return t.constant(store.value(name)); };
}

GatEncoder::GatEncoder(std::string prefix, GatConfig config, std::size_t input_dim)
    : prefix_(std::move(prefix)), config_(config), input_dim_(input_dim) {
  config_.validate();
  if (input_dim_ == 0) throw Error(Errc::InvalidArgument, "encoder needs at least one input feature");
}

std::size_t GatEncoder::layer_input_dim(int layer) const {
  return layer == 0 ? input_dim_ : static_cast<std::size_t>(config_.hidden_dim);
}

std::size_t GatEncoder::layer_output_dim(int layer) const {
  return static_cast<std::size_t>(layer == config_.layers - 1 ? config_.embedding_dim : config_.hidden_dim);
}

std::string GatEncoder::weight_name(int layer, int head) const {
  return prefix_ + ".layer" + std::to_string(layer) + ".head" + std::to_string(head) + ".weight";
}
std::string GatEncoder::attn_self_name(int layer, int head) const {
  return prefix_ + ".layer" + std::to_string(layer) + ".head" + std::to_string(head) + ".attn_self";
}
std::string GatEncoder::attn_neighbor_name(int layer, int head) const {
  return prefix_ + ".layer" + std::to_string(layer) + ".head" + std::to_string(head) + ".attn_neighbor";
}
std::string GatEncoder::bias_name(int layer) const { return prefix_ + ".layer" + std::to_string(layer) + ".bias"; }

void GatEncoder::init_params(ParamStore& store, Rng& rng) const {
  for (int l = 0; l < config_.layers; ++l) {
    const std::size_t in = layer_input_dim(l);
    const std::size_t out = layer_output_dim(l);
    const std::size_t head_dim = out / static_cast<std::size_t>(config_.attention_heads);
    for (int h = 0; h < config_.attention_heads; ++h) {
      store.add_glorot(weight_name(l, h), in, head_dim, rng);
      store.add_glorot(attn_self_name(l, h), head_dim, 1, rng);
      store.add_glorot(attn_neighbor_name(l, h), head_dim, 1, rng);
    }
    store.add(bias_name(l), Matrix(1, out));
  }
}

Var GatEncoder::forward(Tape& tape, const ParamBinder& bind, const AttentionGraph& graph, Var features,
                        std::vector<Var>* attention_trace) const {
  const Matrix& x = tape.value(features);
  if (x.cols() != input_dim_) {
    throw Error(Errc::SchemaMismatch, prefix_ + ": expected " + std::to_string(input_dim_) + " features, got " +
                                          std::to_string(x.cols()));
  }
  if (x.rows() != graph.index.node_count()) {
    throw Error(Errc::DimensionMismatch, prefix_ + ": feature rows differ from node count");
  }
  Var h = features;
  for (int l = 0; l < config_.layers; ++l) {
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(config_.attention_heads));
    for (int hd = 0; hd < config_.attention_heads; ++hd) {
      Var z = matmul(tape, h, bind(tape, weight_name(l, hd)));
      Var s_self = matmul(tape, z, bind(tape, attn_self_name(l, hd)));
      Var s_nb = matmul(tape, z, bind(tape, attn_neighbor_name(l, hd)));
      Var logits = leaky_relu(tape, edge_scores(tape, s_self, s_nb, graph.index));
      logits = mul_const(tape, logits, graph.distance_factor);
      Var alpha = neighbor_softmax(tape, logits, graph.index);
      if (attention_trace) attention_trace->push_back(alpha);
      heads.push_back(neighbor_aggregate(tape, alpha, z, graph.index));
    }
    Var merged = heads.size() == 1 ? heads.front() : concat_cols(tape, heads);
    h = add_bias(tape, merged, bind(tape, bias_name(l)));
    if (l + 1 < config_.layers) h = leaky_relu(tape, h);
  }
  return h;
}

EmbeddingSet encode_normalized(const AttentionGraph& attention, const Matrix& features, const ParamStore& params,
                               const GatConfig& config) {
  const GatEncoder origin(std::string(kOriginEncoder), config, features.cols());
  const GatEncoder destination(std::string(kDestinationEncoder), config, features.cols());
  const std::string probe = origin.weight_name(0, 0);
  if (!params.contains(probe) || params.value(probe).rows() != features.cols()) {
    throw Error(Errc::SchemaMismatch, "feature length " + std::to_string(features.cols()) +
                                          " does not match the trained encoder");
  }
  const ParamBinder bind = frozen(params);
  Tape tape;
  Var x = tape.constant(features);
  EmbeddingSet out;
  out.origin = tape.value(origin.forward(tape, bind, attention, x));
  out.destination = tape.value(destination.forward(tape, bind, attention, x));
  return out;
}

EmbeddingSet encode(const TractGraph& graph, const FeatureSchema& schema, const ParamStore& params,
                    const GatConfig& config) {
  for (const auto& t : graph.tracts()) {
    if (t.features.size() != schema.size()) {
      throw Error(Errc::SchemaMismatch, "tract " + t.id + " has " + std::to_string(t.features.size()) +
                                            " indicators, schema has " + std::to_string(schema.size()));
    }
  }
  const AttentionGraph attention = AttentionGraph::build(graph, config.distance_scale_km);
  return encode_normalized(attention, schema.normalized_matrix(graph.tracts()), params, config);
}

std::vector<std::pair<std::size_t, double>> attention_coefficients(const TractGraph& graph, const Matrix& features,
                                                                   const ParamStore& params, const GatConfig& config,
                                                                   std::string_view encoder_prefix, int layer,
                                                                   int head, std::size_t node) {
  if (layer < 0 || layer >= config.layers || head < 0 || head >= config.attention_heads) {
    throw Error(Errc::InvalidArgument, "layer/head out of range");
  }
  if (node >= graph.size()) throw Error(Errc::InvalidArgument, "node out of range");
  const AttentionGraph attention = AttentionGraph::build(graph, config.distance_scale_km);
  const GatEncoder enc(std::string(encoder_prefix), config, features.cols());
  Tape tape;
  std::vector<Var> trace;
  enc.forward(tape, frozen(params), attention, tape.constant(features), &trace);
  const Matrix& alpha = tape.value(trace[static_cast<std::size_t>(layer * config.attention_heads + head)]);
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k = attention.index.offsets[node]; k < attention.index.offsets[node + 1]; ++k) {
    out.emplace_back(attention.index.targets[k], alpha[k]);
  }
  return out;
}

}  // namespace tractflow

#include "tractflow/train/multitask.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tractflow/error.hpp"
#include "tractflow/numeric/random.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

void TrainConfig::validate() const {
  if (epochs < 0 || batch_size < 1 || patience < 1) {
    throw Error(Errc::InvalidArgument, "epochs >= 0, batch_size >= 1 and patience >= 1 required");
  }
  if (!(lr > 0.0)) throw Error(Errc::InvalidArgument, "learning rate must be > 0");
  if (aux_weight_in < 0.0 || aux_weight_out < 0.0) throw Error(Errc::InvalidArgument, "aux weights must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw Error(Errc::InvalidArgument, "momentum must be in [0, 1)");
  if (weight_decay < 0.0 || clip_norm < 0.0) throw Error(Errc::InvalidArgument, "weight_decay, clip_norm >= 0");
}

NodeTotals NodeTotals::from_train_split(const TractGraph& graph, const FlowTable& flows) {
  NodeTotals t;
  t.outflow.assign(graph.size(), 0.0);
  t.inflow.assign(graph.size(), 0.0);
  for (const auto& r : flows.records()) {
    if (r.split != Split::Train) continue;
    const double v = static_cast<double>(r.commuters);
    t.outflow[graph.require_index(r.origin)] += v;
    t.inflow[graph.require_index(r.destination)] += v;
  }
  return t;
}

PairBatch PairBatch::subset(std::span<const std::size_t> rows) const {
  PairBatch b;
  for (std::size_t r : rows) {
    b.origins.push_back(origins.at(r));
    b.destinations.push_back(destinations[r]);
    b.distance_km.push_back(distance_km[r]);
    b.targets.push_back(targets[r]);
  }
  return b;
}

PairBatch make_pair_batch(const TractGraph& graph, const FlowTable& flows, Split split) {
  PairBatch b;
  for (const auto& r : flows.records()) {
    if (r.split != split) continue;
    const std::size_t o = graph.require_index(r.origin);
    const std::size_t d = graph.require_index(r.destination);
    b.origins.push_back(o);
    b.destinations.push_back(d);
    b.distance_km.push_back(graph.pair_km(o, d));
    b.targets.push_back(static_cast<double>(r.commuters));
  }
  return b;
}

void init_heads(ParamStore& store, std::size_t embedding_dim, Rng& rng) {
  store.add_glorot(heads::kFlowWeight, 2 * embedding_dim + 1, 1, rng);
  store.add(heads::kFlowBias, Matrix(1, 1));
  store.add_glorot(heads::kOutflowWeight, embedding_dim, 1, rng);
  store.add(heads::kOutflowBias, Matrix(1, 1));
  store.add_glorot(heads::kInflowWeight, embedding_dim, 1, rng);
  store.add(heads::kInflowBias, Matrix(1, 1));
}

double training_flow_head(std::span<const double> origin, std::span<const double> destination, double km,
                          const ParamStore& params, double distance_scale_km) {
  if (origin.size() != destination.size()) throw Error(Errc::DimensionMismatch, "embedding dims differ");
  const Matrix& w = params.value(heads::kFlowWeight);
  if (w.rows() != 2 * origin.size() + 1) throw Error(Errc::DimensionMismatch, "flow head width");
  const std::size_t m = origin.size();
  double s = params.value(heads::kFlowBias)[0];
  for (std::size_t i = 0; i < m; ++i) s += origin[i] * w[i];
  for (std::size_t i = 0; i < m; ++i) s += destination[i] * w[m + i];
  s += std::exp(-km / distance_scale_km) * w[2 * m];
  return s;
}

Var flow_head(Tape& tape, const ParamBinder& bind, Var origin_emb, Var destination_emb, const PairBatch& batch,
              double distance_scale_km) {
  Matrix dist(batch.size(), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) dist[i] = std::exp(-batch.distance_km[i] / distance_scale_km);
  const Var parts[] = {gather_rows(tape, origin_emb, batch.origins),
                       gather_rows(tape, destination_emb, batch.destinations), tape.constant(std::move(dist))};
  Var x = concat_cols(tape, parts);
  return add_bias(tape, matmul(tape, x, bind(tape, heads::kFlowWeight)), bind(tape, heads::kFlowBias));
}

namespace {

double mean_squared(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "prediction/target length mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

Matrix column_of(std::span<const double> v, bool log1p) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = log1p ? std::log1p(v[i]) : v[i];
  return m;
}

}  // namespace

double multitask_loss(std::span<const double> flow_pred, std::span<const double> flow_true,
                      std::span<const double> outflow_pred, std::span<const double> outflow_true,
                      std::span<const double> inflow_pred, std::span<const double> inflow_true,
                      const LossWeights& weights) {
  if (flow_pred.empty()) throw Error(Errc::EmptyInput, "empty batch");
  const double loss = mean_squared(flow_pred, flow_true) + weights.outflow * mean_squared(outflow_pred, outflow_true) +
                      weights.inflow * mean_squared(inflow_pred, inflow_true);
  if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "multitask loss is not finite");
  return loss;
}

namespace {

Var multitask_loss_impl(Tape& tape, const ParamBinder& bind, Var origin_emb, Var destination_emb,
                        const PairBatch& batch, const Matrix& outflow, const Matrix& inflow, const Matrix& targets,
                        const LossWeights& weights, double scale_km) {
  if (batch.size() == 0) throw Error(Errc::EmptyInput, "empty batch");
  Var flow = mse(tape, flow_head(tape, bind, origin_emb, destination_emb, batch, scale_km), targets);
  Var out_pred =
      add_bias(tape, matmul(tape, origin_emb, bind(tape, heads::kOutflowWeight)), bind(tape, heads::kOutflowBias));
  Var in_pred = add_bias(tape, matmul(tape, destination_emb, bind(tape, heads::kInflowWeight)),
                         bind(tape, heads::kInflowBias));
  Var aux_out = scale(tape, mse(tape, out_pred, outflow), weights.outflow);
  Var aux_in = scale(tape, mse(tape, in_pred, inflow), weights.inflow);
  return add(tape, add(tape, flow, aux_out), aux_in);
}

}  // namespace

Var multitask_loss(Tape& tape, const ParamBinder& bind, Var origin_emb, Var destination_emb, const PairBatch& batch,
                   const NodeTotals& totals, const LossWeights& weights, double distance_scale_km) {
  return multitask_loss_impl(tape, bind, origin_emb, destination_emb, batch, column_of(totals.outflow, false),
                             column_of(totals.inflow, false), column_of(batch.targets, false), weights,
                             distance_scale_km);
}

ParamStore init_model_params(std::size_t input_dim, const GatConfig& gat, std::uint64_t seed) {
  ParamStore store;
  store.init_seed = seed;
  Rng rng(seed);
  GatEncoder(std::string(kOriginEncoder), gat, input_dim).init_params(store, rng);
  GatEncoder(std::string(kDestinationEncoder), gat, input_dim).init_params(store, rng);
  init_heads(store, static_cast<std::size_t>(gat.embedding_dim), rng);
  return store;
}

namespace {

/// Flow-head MSE of a pair set under frozen parameters.
double flow_mse(const ParamStore& params, const GatEncoder& origin, const GatEncoder& destination,
                const AttentionGraph& attention, const Matrix& features, const PairBatch& batch, const Matrix& targets,
                double scale_km) {
  const ParamBinder bind = frozen(params);
  Tape tape;
  Var x = tape.constant(features);
  Var eo = origin.forward(tape, bind, attention, x);
  Var ed = destination.forward(tape, bind, attention, x);
  return tape.value(mse(tape, flow_head(tape, bind, eo, ed, batch, scale_km), targets))[0];
}

}  // namespace

TrainingResult train_encoders(const TractGraph& graph, const FeatureSchema& schema, const FlowTable& flows,
                              const GatConfig& gat, const TrainConfig& config) {
  gat.validate();
  config.validate();
  flows.validate_against(graph);
  const PairBatch train = make_pair_batch(graph, flows, Split::Train);
  if (train.size() == 0) throw Error(Errc::EmptyInput, "train split is empty");
  const PairBatch val_raw = make_pair_batch(graph, flows, Split::Val);
  const PairBatch& val = val_raw.size() > 0 ? val_raw : train;

  const Matrix features = schema.normalized_matrix(graph.tracts());
  const AttentionGraph attention = AttentionGraph::build(graph, gat.distance_scale_km);
  const GatEncoder origin(std::string(kOriginEncoder), gat, features.cols());
  const GatEncoder destination(std::string(kDestinationEncoder), gat, features.cols());
  const NodeTotals totals = NodeTotals::from_train_split(graph, flows);
  const bool lg = config.log1p_targets;
  const Matrix outflow = column_of(totals.outflow, lg);
  const Matrix inflow = column_of(totals.inflow, lg);
  const Matrix train_targets = column_of(train.targets, lg);
  const Matrix val_targets = column_of(val.targets, lg);
  const LossWeights weights{config.aux_weight_out, config.aux_weight_in};
  const double scale_km = gat.distance_scale_km;

  TrainingResult result;
  result.params = init_model_params(features.cols(), gat, config.seed);
  ParamStore& params = result.params;
  ParamStore best = params;

  OptimizerConfig opt_cfg;
  opt_cfg.kind = config.optimizer;
  opt_cfg.lr = config.lr;
  opt_cfg.momentum = config.momentum;
  opt_cfg.weight_decay = config.weight_decay;
  opt_cfg.clip_norm = config.clip_norm;
  Optimizer optimizer(opt_cfg);

  auto loss_on = [&](const ParamBinder& bind, Tape& tape, const PairBatch& batch, const Matrix& targets) {
    Var x = tape.constant(features);
    Var eo = origin.forward(tape, bind, attention, x);
    Var ed = destination.forward(tape, bind, attention, x);
    return multitask_loss_impl(tape, bind, eo, ed, batch, outflow, inflow, targets, weights, scale_km);
  };

  {
    Tape tape;
    const double initial_train = tape.value(loss_on(frozen(params), tape, train, train_targets))[0];
    const double initial_val = flow_mse(params, origin, destination, attention, features, val, val_targets, scale_km);
    result.log.push_back(EpochLog{0, initial_train, initial_val, optimizer.learning_rate()});
    result.best_epoch = 0;
    result.best_val_loss = initial_val;
  }

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(config.batch_size);
  int non_finite_streak = 0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t loss_pairs = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const PairBatch batch = train.subset(rows);
      Matrix targets(batch.size(), 1);
      for (std::size_t i = 0; i < rows.size(); ++i) targets[i] = train_targets[rows[i]];
      double loss = 0.0;
      try {
        Tape tape;
        Var l = loss_on(trainable(params), tape, batch, targets);
        tape.backward(l);
        loss = tape.value(l)[0];
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteLoss) throw;
        params.zero_grad();
        if (++non_finite_streak >= 2) {
          throw Error(Errc::Diverged, "non-finite loss on consecutive steps at epoch " + std::to_string(epoch) +
                                          "; reduce the learning rate");
        }
        optimizer.set_learning_rate(optimizer.learning_rate() * 0.5);
        continue;
      }
      non_finite_streak = 0;
      optimizer.step(params);
      loss_sum += loss * static_cast<double>(batch.size());
      loss_pairs += batch.size();
    }
    const double train_loss = loss_pairs > 0 ? loss_sum / static_cast<double>(loss_pairs) : 0.0;
    const double val_loss = flow_mse(params, origin, destination, attention, features, val, val_targets, scale_km);
    result.log.push_back(EpochLog{epoch, train_loss, val_loss, optimizer.learning_rate()});
    if (!std::isfinite(val_loss)) {
      throw Error(Errc::Diverged, "validation loss is not finite at epoch " + std::to_string(epoch));
    }
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best.copy_values_from(params);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  params.copy_values_from(best);
  params.zero_grad();
  for (auto& e : params.entries()) {
    e.velocity = Matrix();
    e.second = Matrix();
  }
  return result;
}

std::string format_training_log(std::span<const EpochLog> log) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << ','
        << format_double(e.lr) << '\n';
  }
  return out.str();
}

}  // namespace tractflow

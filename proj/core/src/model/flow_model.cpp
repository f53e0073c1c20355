#include "tractflow/model/flow_model.hpp"

#include "tractflow/error.hpp"

namespace tractflow {

namespace {

Matrix pair_features(const EmbeddingSet& emb, const PairBatch& batch) {
  const std::size_t m = emb.origin.cols();
  Matrix x(batch.size(), 2 * m + 1);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto f = make_features(emb.origin.row(batch.origins[r]), emb.destination.row(batch.destinations[r]),
                                 batch.distance_km[r]);
    std::copy(f.begin(), f.end(), x.row(r).begin());
  }
  return x;
}

Matrix distance_column(const PairBatch& batch) {
  Matrix x(batch.size(), 1);
  for (std::size_t r = 0; r < batch.size(); ++r) x[r] = batch.distance_km[r];
  return x;
}

}  // namespace

TrainOutcome train_pipeline(TractGraph graph, FeatureSchema schema, FlowTable flows, const PipelineConfig& config) {
  config.gat.validate();
  config.train.validate();
  config.boost.validate();
  flows.validate_against(graph);
  for (const auto& t : graph.tracts()) schema.validate(t.features, "tract " + t.id);
  schema.fit_normalization(graph.tracts());
  if (make_pair_batch(graph, flows, Split::Test).size() == 0) {
    throw Error(Errc::InsufficientData, "test split is empty");
  }

  TrainingResult trained = train_encoders(graph, schema, flows, config.gat, config.train);
  const EmbeddingSet emb = encode(graph, schema, trained.params, config.gat);

  const PairBatch train = make_pair_batch(graph, flows, Split::Train);
  const PairBatch val = make_pair_batch(graph, flows, Split::Val);
  TrainOutcome out{
      TrainedModel{config, std::move(schema), std::move(trained.params), TreeEnsemble{}, std::move(graph),
                   std::move(flows)},
      std::move(trained.log), trained.best_epoch, BoostLog{}, EvalReport{}};
  out.model.ensemble = fit(pair_features(emb, train), train.targets, pair_features(emb, val), val.targets,
                           config.boost, &out.boost_log);
  out.test_report = evaluate_split(out.model, out.model.flows, Split::Test);
  return out;
}

FlowPredictor::FlowPredictor(const TrainedModel& model, const TractGraph& graph)
    : model_(model), graph_(graph), embeddings_(encode(graph, model.schema, model.params, model.config.gat)) {}

std::vector<double> FlowPredictor::features(std::size_t origin, std::size_t destination) const {
  return make_features(embeddings_.origin.row(origin), embeddings_.destination.row(destination),
                       graph_.pair_km(origin, destination));
}

double FlowPredictor::predict(std::size_t origin, std::size_t destination) const {
  return tractflow::predict(model_.ensemble, features(origin, destination));
}

SplitPredictions predict_split(const TrainedModel& model, const FlowTable& flows, Split split) {
  const FlowPredictor predictor(model, model.graph);
  SplitPredictions out;
  for (const auto& r : flows.records()) {
    if (r.split != split) continue;
    const std::size_t o = model.graph.require_index(r.origin);
    const std::size_t d = model.graph.require_index(r.destination);
    const PairKey key{r.origin, r.destination};
    out.predicted.emplace(key, predictor.predict(o, d));
    out.observed.emplace(key, static_cast<double>(r.commuters));
  }
  return out;
}

EvalReport evaluate_split(const TrainedModel& model, const FlowTable& flows, Split split, bool assume_zero) {
  const SplitPredictions p = predict_split(model, flows, split);
  return evaluate(p.predicted, p.observed, model.config.label, std::string(to_string(split)), assume_zero);
}

SplitPredictions distance_only_baseline(const TractGraph& graph, const FlowTable& flows, const BoostConfig& config) {
  const PairBatch train = make_pair_batch(graph, flows, Split::Train);
  const PairBatch val = make_pair_batch(graph, flows, Split::Val);
  const PairBatch test = make_pair_batch(graph, flows, Split::Test);
  const TreeEnsemble ens = fit(distance_column(train), train.targets, distance_column(val), val.targets, config);
  SplitPredictions out;
  for (std::size_t r = 0; r < test.size(); ++r) {
    const PairKey key{graph.tract(test.origins[r]).id, graph.tract(test.destinations[r]).id};
    const double x[] = {test.distance_km[r]};
    out.predicted.emplace(key, predict(ens, x));
    out.observed.emplace(key, test.targets[r]);
  }
  return out;
}

}  // namespace tractflow

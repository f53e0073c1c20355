#pragma once

#include <cstdint>
#include <string>

#include "synthetic_city.hpp"
#include "tractflow/model/flow_model.hpp"
#include "tractflow/numeric/random.hpp"
#include "tractflow/scenario/scenario.hpp"

namespace tractflow::testing {

/// Cheap pipeline settings for fixtures that need a trained model but not a good one.
inline PipelineConfig quick_pipeline(int epochs = 20) {
  PipelineConfig c;
  c.gat.hidden_dim = 8;
  c.gat.embedding_dim = 8;
  c.train.epochs = epochs;
  c.train.seed = 1;
  c.train.log1p_targets = true;
  c.boost.rounds = 60;
  c.label = "synthetic";
  return c;
}

inline TrainOutcome train_city(const SyntheticCity& city, const PipelineConfig& config) {
  return train_pipeline(city.graph, city.world.schema, city.flows, config);
}

/// Doubles the mass indicator of one random tract per trial and counts the
/// trials in which the predicted total inflow to that tract rises. Inflow is
/// summed over every pair the scenario predicts with that destination.
inline int doubling_mass_trials(const ScenarioEngine& engine, int trials, std::uint64_t seed) {
  const TractGraph& g = engine.base_graph();
  const auto mass = engine.model().schema.find(kMassIndicator);
  int raised = 0;
  for (int t = 0; t < trials; ++t) {
    Rng r(seed + static_cast<std::uint64_t>(t));
    const std::size_t j = r.below(g.size());
    const Tract& target = g.tract(j);
    const Scenario s{"double-mass", "", {{target.id, kMassIndicator, EditOp::Set, 2.0 * target.features.at(*mass)}}};
    const FlowDiff d = engine.evaluate(s);
    double before = 0.0, after = 0.0;
    for (const auto* list : {&d.pairs, &d.undefined}) {
      for (const auto& p : *list) {
        if (p.destination != target.id) continue;
        before += p.baseline;
        after += p.scenario;
      }
    }
    if (after > before) ++raised;
  }
  return raised;
}

}  // namespace tractflow::testing

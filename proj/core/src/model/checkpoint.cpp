#include "tractflow/model/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "tractflow/error.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "tractflow-checkpoint";

ordered_json gat_json(const GatConfig& c) {
  return {{"layers", c.layers},
          {"hidden_dim", c.hidden_dim},
          {"embedding_dim", c.embedding_dim},
          {"attention_heads", c.attention_heads},
          {"distance_scale_km", c.distance_scale_km}};
}

ordered_json train_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"aux_weight_in", c.aux_weight_in},
          {"aux_weight_out", c.aux_weight_out},
          {"patience", c.patience},
          {"seed", c.seed},
          {"optimizer", to_string(c.optimizer)},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm},
          {"log1p_targets", c.log1p_targets}};
}

ordered_json boost_json(const BoostConfig& c) {
  return {{"rounds", c.rounds},
          {"learning_rate", c.learning_rate},
          {"max_depth", c.max_depth},
          {"min_samples_leaf", c.min_samples_leaf},
          {"early_stop_rounds", c.early_stop_rounds},
          {"threads", c.threads}};
}

ordered_json matrix_json(const std::string& name, const Matrix& m) {
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

template <class T>
T field(const ordered_json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::ParseError, std::string("checkpoint field \"") + key + "\" is missing");
  return it->get<T>();
}

const ordered_json& child(const ordered_json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::ParseError, std::string("checkpoint section \"") + key + "\" is missing");
  return *it;
}

ordered_json config_json(const PipelineConfig& c) {
  return {{"label", c.label}, {"gat", gat_json(c.gat)}, {"train", train_json(c.train)}, {"boost", boost_json(c.boost)}};
}

}  // namespace

std::string pipeline_config_json(const PipelineConfig& config) { return config_json(config).dump(); }

std::string checkpoint_to_json(const TrainedModel& model) {
  ordered_json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  j["seed"] = model.params.init_seed;
  j["config"] = config_json(model.config);

  ordered_json schema = ordered_json::array();
  for (const auto& ind : model.schema.indicators()) {
    schema.push_back({{"name", ind.name},
                      {"category", to_string(ind.category)},
                      {"nonnegative", ind.nonnegative},
                      {"mean", ind.mean},
                      {"stddev", ind.stddev},
                      {"constant", ind.constant}});
  }
  j["schema"] = {{"normalized", model.schema.has_normalization()}, {"indicators", std::move(schema)}};

  ordered_json tensors = ordered_json::array();
  for (const auto& e : model.params.entries()) tensors.push_back(matrix_json(e.name, e.value));
  j["params"] = {{"init_seed", model.params.init_seed}, {"tensors", std::move(tensors)}};

  const TreeEnsemble& ens = model.ensemble;
  ordered_json trees = ordered_json::array();
  for (const auto& t : ens.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  j["ensemble"] = {{"base_score", ens.base_score},
                   {"learning_rate", ens.learning_rate},
                   {"feature_dim", ens.feature_dim},
                   {"clamp_nonnegative", ens.clamp_nonnegative},
                   {"trees", std::move(trees)}};

  const TractGraph& g = model.graph;
  ordered_json distance = {{"kind", g.distance().kind()}};
  if (const auto* m = dynamic_cast<const MatrixDistance*>(&g.distance())) {
    ordered_json entries = ordered_json::array();
    for (const auto& [key, km] : m->entries()) entries.push_back({key.first, key.second, km});
    distance["entries"] = std::move(entries);
  }
  ordered_json tracts = ordered_json::array();
  for (const auto& t : g.tracts()) {
    tracts.push_back({{"id", t.id}, {"lat", t.centroid.lat}, {"lon", t.centroid.lon}, {"features", t.features}});
  }
  ordered_json edges = ordered_json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({e.a, e.b, e.km, e.minutes ? ordered_json(*e.minutes) : ordered_json(nullptr)});
  }
  ordered_json flows = ordered_json::array();
  for (const auto& r : model.flows.records()) flows.push_back({r.origin, r.destination, r.commuters, to_string(r.split)});
  j["dataset"] = {{"policy", g.policy().describe()},
                  {"distance", std::move(distance)},
                  {"tracts", std::move(tracts)},
                  {"edges", std::move(edges)},
                  {"flows", std::move(flows)}};
  return j.dump();
}

TrainedModel checkpoint_from_json(std::string_view text, std::string_view source) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, std::string(source) + ": " + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kFormat) {
      throw Error(Errc::ParseError, std::string(source) + " is not a tractflow checkpoint");
    }
    const int version = field<int>(j, "version");
    if (version != kCheckpointVersion) {
      throw Error(Errc::VersionMismatch, std::string(source) + ": checkpoint version " + std::to_string(version) +
                                             ", expected " + std::to_string(kCheckpointVersion));
    }

    PipelineConfig cfg;
    const auto& c = child(j, "config");
    cfg.label = field<std::string>(c, "label");
    const auto& gj = child(c, "gat");
    cfg.gat = {field<int>(gj, "layers"), field<int>(gj, "hidden_dim"), field<int>(gj, "embedding_dim"),
               field<int>(gj, "attention_heads"), field<double>(gj, "distance_scale_km")};
    const auto& tj = child(c, "train");
    cfg.train.epochs = field<int>(tj, "epochs");
    cfg.train.batch_size = field<int>(tj, "batch_size");
    cfg.train.lr = field<double>(tj, "lr");
    cfg.train.aux_weight_in = field<double>(tj, "aux_weight_in");
    cfg.train.aux_weight_out = field<double>(tj, "aux_weight_out");
    cfg.train.patience = field<int>(tj, "patience");
    cfg.train.seed = field<std::uint64_t>(tj, "seed");
    cfg.train.optimizer = parse_optimizer_kind(field<std::string>(tj, "optimizer"));
    cfg.train.momentum = field<double>(tj, "momentum");
    cfg.train.weight_decay = field<double>(tj, "weight_decay");
    cfg.train.clip_norm = field<double>(tj, "clip_norm");
    cfg.train.log1p_targets = field<bool>(tj, "log1p_targets");
    const auto& bj = child(c, "boost");
    cfg.boost = {field<int>(bj, "rounds"),           field<double>(bj, "learning_rate"),
                 field<int>(bj, "max_depth"),        field<int>(bj, "min_samples_leaf"),
                 field<int>(bj, "early_stop_rounds"), field<int>(bj, "threads")};

    const auto& sj = child(j, "schema");
    std::vector<FeatureSchema::Indicator> indicators;
    for (const auto& ij : child(sj, "indicators")) {
      indicators.push_back({field<std::string>(ij, "name"),
                            parse_indicator_category(field<std::string>(ij, "category")),
                            field<bool>(ij, "nonnegative")});
    }
    FeatureSchema schema(std::move(indicators));
    if (field<bool>(sj, "normalized")) {
      std::size_t i = 0;
      for (const auto& ij : child(sj, "indicators")) {
        schema.set_normalization(i++, field<double>(ij, "mean"), field<double>(ij, "stddev"),
                                 field<bool>(ij, "constant"));
      }
    }

    ParamStore params;
    const auto& pj = child(j, "params");
    params.init_seed = field<std::uint64_t>(pj, "init_seed");
    for (const auto& tj2 : child(pj, "tensors")) {
      params.add(field<std::string>(tj2, "name"), Matrix(field<std::size_t>(tj2, "rows"),
                                                         field<std::size_t>(tj2, "cols"),
                                                         field<std::vector<double>>(tj2, "data")));
    }

    TreeEnsemble ens;
    const auto& ej = child(j, "ensemble");
    ens.base_score = field<double>(ej, "base_score");
    ens.learning_rate = field<double>(ej, "learning_rate");
    ens.feature_dim = field<std::size_t>(ej, "feature_dim");
    ens.clamp_nonnegative = field<bool>(ej, "clamp_nonnegative");
    for (const auto& tree : child(ej, "trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& n : tree) {
        TreeNode node{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                      n.at(4).get<double>()};
        if (node.feature >= static_cast<int>(ens.feature_dim)) {
          throw Error(Errc::ParseError, std::string(source) + ": tree feature index out of range");
        }
        nodes.push_back(node);
      }
      const auto count = static_cast<int>(nodes.size());
      for (const auto& n : nodes) {
        if (!n.is_leaf() && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count)) {
          throw Error(Errc::ParseError, std::string(source) + ": tree child index out of range");
        }
      }
      if (nodes.empty()) throw Error(Errc::ParseError, std::string(source) + ": empty tree");
      ens.trees.emplace_back(std::move(nodes));
    }

    const auto& dj = child(j, "dataset");
    const auto& distj = child(dj, "distance");
    std::shared_ptr<const DistanceProvider> distance;
    const std::string kind = field<std::string>(distj, "kind");
    if (kind == "great_circle") {
      distance = default_distance_provider();
    } else if (kind == "matrix") {
      auto m = std::make_shared<MatrixDistance>();
      for (const auto& e : child(distj, "entries")) {
        m->set(e.at(0).get<std::string>(), e.at(1).get<std::string>(), e.at(2).get<double>());
      }
      distance = std::move(m);
    } else {
      throw Error(Errc::ParseError, std::string(source) + ": unknown distance provider \"" + kind + "\"");
    }
    std::vector<Tract> tracts;
    for (const auto& t : child(dj, "tracts")) {
      tracts.push_back({field<std::string>(t, "id"),
                        {field<double>(t, "lat"), field<double>(t, "lon")},
                        field<std::vector<double>>(t, "features")});
    }
    std::vector<GraphEdge> edges;
    for (const auto& e : child(dj, "edges")) {
      GraphEdge edge{e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>(), std::nullopt};
      if (!e.at(3).is_null()) edge.minutes = e.at(3).get<double>();
      edges.push_back(edge);
    }
    std::vector<FlowRecord> records;
    for (const auto& r : child(dj, "flows")) {
      records.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>(), r.at(2).get<std::int64_t>(),
                         parse_split(r.at(3).get<std::string>())});
    }
    TractGraph graph(std::move(tracts), std::move(edges), AdjacencyPolicy::parse(field<std::string>(dj, "policy")),
                     std::move(distance));
    FlowTable flows(std::move(records));
    flows.validate_against(graph);
    return TrainedModel{cfg, std::move(schema), std::move(params), std::move(ens), std::move(graph),
                        std::move(flows)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string(source) + ": " + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::string& path) {
  write_file(path, checkpoint_to_json(model));
}

TrainedModel load_checkpoint(const std::string& path) { return checkpoint_from_json(read_file(path), path); }

}  // namespace tractflow

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manifest.hpp"
#include "tractflow/error.hpp"
#include "tractflow/geodata/io.hpp"
#include "tractflow/model/checkpoint.hpp"
#include "tractflow/scenario/scenario.hpp"
#include "tractflow/service/service.hpp"
#include "tractflow/util/digest.hpp"
#include "tractflow/util/table.hpp"

namespace fs = std::filesystem;
using namespace tractflow;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct DataOptions {
  std::string tracts;
  std::string flows;
  std::string schema;
  std::string distance_matrix;
  std::string policy = "knn:8";
};

struct Dataset {
  FeatureSchema schema;
  TractGraph graph;
  FlowTable flows;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--tracts", d.tracts, "Tract table (.csv/.tsv) or GeoJSON FeatureCollection")->required();
  cmd->add_option("--flows", d.flows, "Flow table: origin_id, dest_id, commuters[, split]")->required();
  cmd->add_option("--schema", d.schema, "Indicator schema table (default: every non-coordinate column)");
  cmd->add_option("--distance-matrix", d.distance_matrix, "Precomputed distances: a, b, km (default: great-circle)");
  cmd->add_option("--policy", d.policy, "Adjacency policy, knn:<k> or radius:<km>")->capture_default_str();
}

Dataset load_dataset(const DataOptions& d, std::uint64_t split_seed, cli::RunManifest& manifest) {
  manifest.add_input(d.tracts);
  manifest.add_input(d.flows);
  FeatureSchema schema = d.schema.empty() ? infer_schema(d.tracts) : load_schema(d.schema);
  if (!d.schema.empty()) manifest.add_input(d.schema);
  std::vector<Tract> tracts = load_tracts(d.tracts, schema);
  std::shared_ptr<const DistanceProvider> distance = default_distance_provider();
  if (!d.distance_matrix.empty()) {
    manifest.add_input(d.distance_matrix);
    distance = load_distance_matrix(d.distance_matrix);
  }
  TractGraph graph = build_graph(std::move(tracts), AdjacencyPolicy::parse(d.policy), distance);
  const std::string text = read_file(d.flows);
  const Table table = parse_table(text, d.flows);
  FlowTable flows = table.columns.size() >= 4 && table.columns[3] == "split"
                        ? parse_flow_table(text, Split::Train, d.flows)
                        : split_flows(parse_flows(text, d.flows), SplitRatios{}, split_seed);
  flows.validate_against(graph);
  return {std::move(schema), std::move(graph), std::move(flows)};
}

std::string join_path(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::MissingInput, "cannot create output directory " + dir + ": " + ec.message());
}

std::string boost_log_csv(const BoostLog& log) {
  std::ostringstream out;
  out << "round,train_mse,val_mse\n";
  for (std::size_t r = 0; r < log.train_mse.size(); ++r) {
    out << r << ',' << format_double(log.train_mse[r]) << ',';
    if (r < log.val_mse.size()) out << format_double(log.val_mse[r]);
    out << '\n';
  }
  return out.str();
}

FlowMap load_predictions(const std::string& path) {
  const Table t = read_table(path);
  if (t.columns.size() < 3) throw Error(Errc::MissingColumn, path + ": expected origin_id, dest_id, predicted");
  FlowMap out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double v = parse_number(t.rows[r][2], path, r + 1, t.columns[2]);
    if (!out.emplace(PairKey{t.rows[r][0], t.rows[r][1]}, v).second) {
      throw Error(Errc::DuplicatePair, path + ": row " + std::to_string(r + 1) + " repeats a pair");
    }
  }
  return out;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  DataOptions data;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_ingest(const IngestArgs& a, cli::RunManifest& m) {
  const Dataset ds = load_dataset(a.data, a.seed, m);
  const auto counts = ds.flows.split_counts();
  std::size_t min_degree = ds.graph.size();
  std::size_t max_degree = 0;
  for (std::size_t i = 0; i < ds.graph.size(); ++i) {
    min_degree = std::min(min_degree, ds.graph.neighbors(i).size());
    max_degree = std::max(max_degree, ds.graph.neighbors(i).size());
  }
  nlohmann::ordered_json j;
  j["tracts"] = ds.graph.size();
  j["indicators"] = ds.schema.names();
  j["edges"] = ds.graph.edges().size();
  j["policy"] = ds.graph.policy().describe();
  j["distance"] = ds.graph.distance().kind();
  j["degree"] = {{"min", min_degree}, {"max", max_degree}};
  j["connected"] = ds.graph.is_connected();
  j["flows"] = ds.flows.size();
  j["split"] = {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}};
  std::cout << j.dump() << '\n';
  if (!a.out_dir.empty()) {
    prepare_dir(a.out_dir);
    m.write_output(join_path(a.out_dir, "flows_split.csv"), format_flow_table_csv(ds.flows));
    m.write_output(join_path(a.out_dir, "schema.csv"), format_schema_csv(ds.schema));
    std::string edges = "a,b,km\n";
    for (const auto& e : ds.graph.edges()) {
      edges += ds.graph.tract(e.a).id + ',' + ds.graph.tract(e.b).id + ',' + format_double(e.km) + '\n';
    }
    m.write_output(join_path(a.out_dir, "edges.csv"), edges);
  }
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  DataOptions data;
  PipelineConfig config;
  std::string optimizer = "sgd";
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_train(TrainArgs a, cli::RunManifest& m) {
  a.config.train.seed = a.seed;
  a.config.train.optimizer = parse_optimizer_kind(a.optimizer);
  m.seed = a.seed;
  m.config_hash = sha256_hex(pipeline_config_json(a.config));
  Dataset ds = load_dataset(a.data, a.seed, m);
  TrainOutcome out = train_pipeline(std::move(ds.graph), std::move(ds.schema), std::move(ds.flows), a.config);

  prepare_dir(a.out_dir);
  const std::string checkpoint = join_path(a.out_dir, "checkpoint.json");
  m.write_output(checkpoint, checkpoint_to_json(out.model));
  m.checkpoint = checkpoint;
  m.write_output(join_path(a.out_dir, "training_log.csv"), format_training_log(out.encoder_log));
  m.write_output(join_path(a.out_dir, "boost_log.csv"), boost_log_csv(out.boost_log));
  m.write_output(join_path(a.out_dir, "report.json"), report_json(out.test_report) + "\n");
  const EvalReport reports[] = {out.test_report};
  std::cout << report_table(reports) << report_json(out.test_report) << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string split = "test";
  std::string flows;
  std::string predictions;
  bool assume_zero = false;
  std::string out;
};

int run_eval(const EvalArgs& a, cli::RunManifest& m) {
  m.add_input(a.checkpoint);
  m.checkpoint = a.checkpoint;
  const TrainedModel model = load_checkpoint(a.checkpoint);
  const Split split = parse_split(a.split);
  FlowTable flows = model.flows;
  if (!a.flows.empty()) {
    m.add_input(a.flows);
    flows = load_flow_table(a.flows, split);
  }
  EvalReport report;
  if (!a.predictions.empty()) {
    m.add_input(a.predictions);
    FlowMap truth;
    for (const auto& r : flows.records()) {
      if (r.split == split) truth.emplace(PairKey{r.origin, r.destination}, static_cast<double>(r.commuters));
    }
    report = evaluate(load_predictions(a.predictions), truth, model.config.label, std::string(to_string(split)),
                      a.assume_zero);
  } else {
    report = evaluate_split(model, flows, split, a.assume_zero);
  }
  const EvalReport reports[] = {report};
  std::cout << report_table(reports) << report_json(report) << '\n';
  if (!a.out.empty()) m.write_output(a.out, report_json(report) + "\n");
  return 0;
}

// ---------------------------------------------------------------- scenario

struct ScenarioArgs {
  std::string checkpoint;
  std::string scenario;
  std::optional<double> radius_km;
  int bins = 40;
  double cutoff_km = 30.0;
  std::string out_dir;
};

int run_scenario(const ScenarioArgs& a, cli::RunManifest& m) {
  m.add_input(a.checkpoint);
  m.add_input(a.scenario);
  m.checkpoint = a.checkpoint;
  const TrainedModel model = load_checkpoint(a.checkpoint);
  const Scenario scenario = load_scenario(a.scenario);
  ScenarioOptions options;
  options.cutoff_km = a.cutoff_km;
  m.config_hash = sha256_hex("cutoff_km=" + format_double(a.cutoff_km) + ";bins=" + std::to_string(a.bins) +
                             ";radius_km=" + (a.radius_km ? format_double(*a.radius_km) : "-"));
  const FlowDiff diff = predict_scenario(model, scenario, options);
  const DiffReport report = make_diff_report(model.graph, scenario, diff, a.radius_km, a.bins);
  std::cout << "scenario " << scenario.name << ": " << report.summary.n_defined << " pairs (" << report.summary.filter
            << "), mean relative change " << format_double(report.summary.mean) << ", std "
            << format_double(report.summary.stddev) << ", undefined " << report.summary.n_undefined << '\n'
            << summary_json(report.summary) << '\n';
  if (!a.out_dir.empty()) {
    prepare_dir(a.out_dir);
    m.write_output(join_path(a.out_dir, "diff.json"), diff_report_json(report));
    m.write_output(join_path(a.out_dir, "diff_pairs.csv"), diff_pairs_csv(report.diff));
    m.write_output(join_path(a.out_dir, "histogram.csv"), histogram_csv(report.summary.histogram));
    m.write_output(join_path(a.out_dir, "summary.json"), summary_json(report.summary) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8080;
  int bins = 40;
  double cutoff_km = 30.0;
};

int run_serve(const ServeArgs& a) {
  std::optional<TrainedModel> model;
  if (!a.checkpoint.empty()) model = load_checkpoint(a.checkpoint);
  ServiceOptions options;
  options.scenario.cutoff_km = a.cutoff_km;
  options.default_bins = a.bins;
  ServiceState state(std::move(model), options);
  std::cerr << "listening on http://" << a.host << ':' << a.port << '\n';
  if (!run_server(state, a.host, a.port)) {
    std::cerr << "error: cannot listen on " << a.host << ':' << a.port << '\n';
    return kExitData;
  }
  return 0;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
      return kExitUsage;
    case Errc::NonFiniteLoss:
    case Errc::Diverged:
      return kExitDiverged;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tractflow: commuting-flow embeddings, prediction and what-if scenarios"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate inputs, build the geo-adjacency graph, split flows");
  add_data_options(c_ingest, ingest.data);
  c_ingest->add_option("--seed", ingest.seed, "Split seed")->capture_default_str();
  c_ingest->add_option("--out-dir", ingest.out_dir, "Write flows_split.csv, schema.csv and edges.csv here");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train encoders and the flow predictor; report on the test split");
  add_data_options(c_train, train.data);
  c_train->add_option("--seed", train.seed, "Seed for splitting, initialization and batching")->required();
  c_train->add_option("--out-dir", train.out_dir, "Directory for checkpoint, logs, report and manifest")->required();
  auto& pc = train.config;
  c_train->add_option("--label", pc.label, "Name shown in the report's City column")->capture_default_str();
  c_train->add_option("--layers", pc.gat.layers)->capture_default_str();
  c_train->add_option("--hidden-dim", pc.gat.hidden_dim)->capture_default_str();
  c_train->add_option("--embedding-dim", pc.gat.embedding_dim)->capture_default_str();
  c_train->add_option("--heads", pc.gat.attention_heads)->capture_default_str();
  c_train->add_option("--distance-scale-km", pc.gat.distance_scale_km)->capture_default_str();
  c_train->add_option("--epochs", pc.train.epochs)->capture_default_str();
  c_train->add_option("--batch-size", pc.train.batch_size)->capture_default_str();
  c_train->add_option("--lr", pc.train.lr)->capture_default_str();
  c_train->add_option("--aux-weight-in", pc.train.aux_weight_in)->capture_default_str();
  c_train->add_option("--aux-weight-out", pc.train.aux_weight_out)->capture_default_str();
  c_train->add_option("--patience", pc.train.patience)->capture_default_str();
  c_train->add_option("--optimizer", train.optimizer)
      ->check(CLI::IsMember({"sgd", "adam"}))
      ->capture_default_str();
  c_train->add_option("--momentum", pc.train.momentum)->capture_default_str();
  c_train->add_option("--weight-decay", pc.train.weight_decay)->capture_default_str();
  c_train->add_option("--clip-norm", pc.train.clip_norm, "Global gradient-norm cap, 0 disables")
      ->capture_default_str();
  c_train->add_flag("--log1p-targets", pc.train.log1p_targets, "Train the encoders on log1p-transformed counts");
  c_train->add_option("--rounds", pc.boost.rounds)->capture_default_str();
  c_train->add_option("--boost-lr", pc.boost.learning_rate)->capture_default_str();
  c_train->add_option("--max-depth", pc.boost.max_depth)->capture_default_str();
  c_train->add_option("--min-samples-leaf", pc.boost.min_samples_leaf)->capture_default_str();
  c_train->add_option("--early-stop-rounds", pc.boost.early_stop_rounds)->capture_default_str();
  c_train->add_option("--threads", pc.boost.threads, "Split-search threads")->capture_default_str();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint with RMSE, MAE and CPC");
  c_eval->add_option("--checkpoint", eval.checkpoint)->required();
  c_eval->add_option("--split", eval.split)
      ->check(CLI::IsMember({"train", "val", "validation", "test"}))
      ->capture_default_str();
  c_eval->add_option("--flows", eval.flows, "Observed flows (default: the checkpoint's own table)");
  c_eval->add_option("--predictions", eval.predictions, "Score this prediction table instead of the model");
  c_eval->add_flag("--assume-zero", eval.assume_zero, "Treat observed pairs missing from predictions as 0");
  c_eval->add_option("--out", eval.out, "Also write the report record here");

  ScenarioArgs scen;
  auto* c_scen = app.add_subcommand("scenario", "Evaluate a what-if scenario against a checkpoint");
  c_scen->add_option("--checkpoint", scen.checkpoint)->required();
  c_scen->add_option("--scenario", scen.scenario)->required();
  c_scen->add_option("--radius-km", scen.radius_km, "Summarize pairs within this distance of edited tracts");
  c_scen->add_option("--bins", scen.bins)->check(CLI::Range(1, 10000))->capture_default_str();
  c_scen->add_option("--cutoff-km", scen.cutoff_km, "Distance cap for pairs added around edits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_scen->add_option("--out-dir", scen.out_dir, "Write diff.json, diff_pairs.csv, histogram.csv, summary.json");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Serve a checkpoint over HTTP");
  c_serve->add_option("--checkpoint", serve.checkpoint, "Without it data endpoints answer 503");
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port)->check(CLI::Range(1, 65535))->capture_default_str();
  c_serve->add_option("--bins", serve.bins)->check(CLI::Range(1, 10000))->capture_default_str();
  c_serve->add_option("--cutoff-km", serve.cutoff_km)->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  cli::RunManifest manifest;
  manifest.arguments.assign(argv + 1, argv + argc);
  manifest.started_at = cli::utc_timestamp();
  std::string manifest_dir;
  try {
    int rc = 0;
    if (*c_ingest) {
      manifest.command = "ingest";
      manifest_dir = ingest.out_dir;
      rc = run_ingest(ingest, manifest);
    } else if (*c_train) {
      manifest.command = "train";
      manifest_dir = train.out_dir;
      rc = run_train(train, manifest);
    } else if (*c_eval) {
      manifest.command = "eval";
      rc = run_eval(eval, manifest);
    } else if (*c_scen) {
      manifest.command = "scenario";
      manifest_dir = scen.out_dir;
      rc = run_scenario(scen, manifest);
    } else {
      return run_serve(serve);
    }
    if (!manifest_dir.empty()) {
      manifest.finished_at = cli::utc_timestamp();
      write_file(join_path(manifest_dir, "manifest.json"), manifest.to_json());
    }
    return rc;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

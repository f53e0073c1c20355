#include <filesystem>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tractflow/metrics/metrics.hpp"
#include "tractflow/model/checkpoint.hpp"
#include "tractflow/scenario/scenario.hpp"
#include "tractflow/util/digest.hpp"
#include "workspace.hpp"

using namespace tractflow;
using namespace tractflow::testing;
namespace fs = std::filesystem;

namespace {

const Workspace& ws() { return Workspace::get(); }

ProcessResult cli(const std::vector<std::string>& args) { return run_process(TRACTFLOW_CLI, args); }

/// Replaces the value following `flag`, or appends the pair.
void set_flag(std::vector<std::string>& args, const std::string& flag, const std::string& value) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == flag) {
      args[i + 1] = value;
      return;
    }
  }
  args.push_back(flag);
  args.push_back(value);
}

std::string bike_scenario_file(const TempDir& dir, const TrainedModel& m) {
  nlohmann::json doc{{"name", "bike lanes"}, {"note", "6 km on four tracts"}, {"edits", nlohmann::json::array()}};
  for (std::size_t i : {3u, 11u, 20u, 27u}) {
    doc["edits"].push_back({{"tract_id", m.graph.tract(i).id}, {"indicator", "bike_lane_km"}, {"op", "add"}, {"value", 6}});
  }
  const std::string path = dir / "bike.json";
  spit(path, doc.dump(2));
  return path;
}

}  // namespace

TEST(Cli, SynthWritesThreeTables) {
  for (const char* f : {"tracts.csv", "schema.csv", "flows.csv"}) EXPECT_TRUE(fs::exists(ws().data + "/" + f)) << f;
}

TEST(Cli, TrainWritesArtifacts) {
  for (const char* f : {"checkpoint.json", "training_log.csv", "boost_log.csv", "report.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(ws().run + "/" + f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(ws().run + "/manifest.json"));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["seed"], 5);
  bool listed = false;
  for (const auto& o : manifest["outputs"]) {
    if (o["path"] == ws().checkpoint) {
      listed = true;
      EXPECT_EQ(o["sha256"], file_sha256(ws().checkpoint));
    }
  }
  EXPECT_TRUE(listed);
}

TEST(Cli, TrainRerunIsByteIdentical) {
  TempDir dir("tractflow-rerun");
  const auto r = cli(Workspace::train_args(ws(), dir / "again"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* f : {"checkpoint.json", "training_log.csv", "boost_log.csv", "report.json"}) {
    EXPECT_EQ(slurp(dir / (std::string("again/") + f)), slurp(ws().run + "/" + f)) << f;
  }
}

TEST(Cli, TrainPrintsTableAndJson) {
  TempDir dir("tractflow-print");
  auto args = Workspace::train_args(ws(), dir / "out");
  set_flag(args, "--epochs", "2");
  set_flag(args, "--rounds", "5");
  const auto r = cli(args);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("City/split"), std::string::npos);
  const auto j = nlohmann::json::parse(last_line(r.output));
  EXPECT_EQ(j["split"], "test");
  EXPECT_EQ(j["label"], "synthetic");
}

TEST(Cli, MissingFlowsIsDataError) {
  TempDir dir("tractflow-missing");
  const auto r = cli({"train", "--tracts", ws().data + "/tracts.csv", "--flows", dir / "nope.csv", "--seed", "1",
                      "--out-dir", dir / "out"});
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("MissingInput"), std::string::npos) << r.output;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).exit_code, 2);
  EXPECT_EQ(cli({"train", "--tracts", "a.csv", "--flows", "b.csv", "--out-dir", "x"}).exit_code, 2);  // no seed
  EXPECT_EQ(cli({"eval", "--checkpoint", ws().checkpoint, "--split", "holdout"}).exit_code, 2);
  EXPECT_EQ(cli({"frobnicate"}).exit_code, 2);
  EXPECT_EQ(cli({"--help"}).exit_code, 0);
}

TEST(Cli, BadDataIsDataError) {
  TempDir dir("tractflow-bad");
  spit(dir / "tracts.csv", "id,lat,lon,x\na,91,0,1\nb,0,0,1\n");
  spit(dir / "flows.csv", "origin_id,dest_id,commuters\na,b,1\n");
  const auto r = cli({"ingest", "--tracts", dir / "tracts.csv", "--flows", dir / "flows.csv"});
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("NonFiniteValue"), std::string::npos) << r.output;
}

TEST(Cli, DivergenceExitCode) {
  TempDir dir("tractflow-diverge");
  auto args = Workspace::train_args(ws(), dir / "out");
  set_flag(args, "--lr", "1e12");
  set_flag(args, "--clip-norm", "0");
  set_flag(args, "--momentum", "0");
  const auto r = cli(args);
  EXPECT_EQ(r.exit_code, 4) << r.output;
}

TEST(Cli, IngestSummarizesAndWrites) {
  TempDir dir("tractflow-ingest");
  const auto r = cli({"ingest", "--tracts", ws().data + "/tracts.csv", "--flows", ws().data + "/flows.csv",
                      "--schema", ws().data + "/schema.csv", "--seed", "5", "--out-dir", dir / "out"});
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = nlohmann::json::parse(last_line(r.output));
  EXPECT_EQ(j["tracts"], 40);
  for (const char* f : {"flows_split.csv", "schema.csv", "edges.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / (std::string("out/") + f))) << f;
  }
  // The split matches the one train used with the same seed.
  const FlowTable split = load_flow_table(dir / "out/flows_split.csv", Split::Train);
  EXPECT_EQ(split, load_checkpoint(ws().checkpoint).flows);
}

TEST(Cli, EvalMatchesLibrary) {
  const TrainedModel m = load_checkpoint(ws().checkpoint);
  for (const char* split : {"train", "val", "test"}) {
    const auto r = cli({"eval", "--checkpoint", ws().checkpoint, "--split", split});
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_EQ(last_line(r.output), report_json(evaluate_split(m, m.flows, parse_split(split))));
  }
  EXPECT_EQ(last_line(slurp(ws().run + "/report.json")),
            report_json(evaluate_split(m, m.flows, Split::Test)));
}

TEST(Cli, EvalOfMemorizedPredictionsIsPerfect) {
  TempDir dir("tractflow-memo");
  const TrainedModel m = load_checkpoint(ws().checkpoint);
  std::string csv = "origin_id,dest_id,predicted\n";
  for (const auto& r : m.flows.in_split(Split::Val)) {
    csv += r.origin + "," + r.destination + "," + std::to_string(r.commuters) + "\n";
  }
  spit(dir / "pred.csv", csv);
  const auto r = cli({"eval", "--checkpoint", ws().checkpoint, "--split", "val", "--predictions", dir / "pred.csv",
                      "--out", dir / "rep.json"});
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = nlohmann::json::parse(last_line(r.output));
  EXPECT_EQ(j["cpc"], 1.0);
  EXPECT_EQ(j["rmse"], 0.0);
  EXPECT_EQ(slurp(dir / "rep.json"), last_line(r.output) + "\n");
}

TEST(Cli, EvalExternalFlowsWithAssumeZero) {
  TempDir dir("tractflow-ext");
  spit(dir / "pred.csv", "origin_id,dest_id,predicted\n");
  const TrainedModel m = load_checkpoint(ws().checkpoint);
  const auto first = m.flows.records()[0];
  spit(dir / "flows.csv", "origin_id,dest_id,commuters\n" + first.origin + "," + first.destination + ",4\n");
  auto r = cli({"eval", "--checkpoint", ws().checkpoint, "--split", "test", "--flows", dir / "flows.csv",
                "--predictions", dir / "pred.csv"});
  EXPECT_EQ(r.exit_code, 3) << r.output;  // key mismatch without --assume-zero
  r = cli({"eval", "--checkpoint", ws().checkpoint, "--split", "test", "--flows", dir / "flows.csv", "--predictions",
           dir / "pred.csv", "--assume-zero"});
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = nlohmann::json::parse(last_line(r.output));
  EXPECT_EQ(j["cpc"], 0.0);
  EXPECT_EQ(j["mae"], 4.0);
}

TEST(Cli, ScenarioMatchesLibrary) {
  TempDir dir("tractflow-scen");
  const TrainedModel m = load_checkpoint(ws().checkpoint);
  const std::string scen = bike_scenario_file(dir, m);
  const auto r = cli({"scenario", "--checkpoint", ws().checkpoint, "--scenario", scen, "--radius-km", "2.0",
                      "--out-dir", dir / "out"});
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Scenario s = load_scenario(scen);
  const DiffReport want = make_diff_report(m.graph, s, predict_scenario(m, s), 2.0, 40);
  EXPECT_EQ(want.summary.filter, "2 km");
  EXPECT_EQ(last_line(r.output), summary_json(want.summary));
  EXPECT_EQ(slurp(dir / "out/summary.json"), summary_json(want.summary) + "\n");
  EXPECT_EQ(slurp(dir / "out/diff.json"), diff_report_json(want));
  EXPECT_EQ(slurp(dir / "out/diff_pairs.csv"), diff_pairs_csv(want.diff));
  EXPECT_EQ(slurp(dir / "out/histogram.csv"), histogram_csv(want.summary.histogram));
  EXPECT_TRUE(fs::exists(dir / "out/manifest.json"));
}

TEST(Cli, ScenarioErrors) {
  TempDir dir("tractflow-scenerr");
  const std::string id = load_checkpoint(ws().checkpoint).graph.tract(0).id;
  spit(dir / "bad.json", R"({"name":"x","edits":[{"tract_id":")" + id + R"(","indicator":"nope","op":"set","value":1}]})");
  auto r = cli({"scenario", "--checkpoint", ws().checkpoint, "--scenario", dir / "bad.json"});
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("UnknownIndicator"), std::string::npos) << r.output;
  r = cli({"scenario", "--checkpoint", ws().checkpoint, "--scenario", dir / "bad.json", "--bins", "0"});
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir("tractflow-config");
  spit(dir / "train.toml", "[train]\nepochs = 1\nrounds = 3\nhidden-dim = 4\nembedding-dim = 4\nlabel = \"from-config\"\n");
  const auto r = cli({"--config", dir / "train.toml", "train", "--tracts", ws().data + "/tracts.csv", "--flows",
                      ws().data + "/flows.csv", "--seed", "1", "--out-dir", dir / "out", "--label", "from-flag"});
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto ckpt = nlohmann::json::parse(slurp(dir / "out/checkpoint.json"));
  EXPECT_EQ(ckpt["config"]["train"]["epochs"], 1);
  EXPECT_EQ(ckpt["config"]["gat"]["hidden_dim"], 4);
  EXPECT_EQ(ckpt["config"]["label"], "from-flag");
}

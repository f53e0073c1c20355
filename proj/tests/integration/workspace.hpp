#pragma once

#include <memory>
#include <string>

#include "process.hpp"

namespace tractflow::testing {

/// A synthetic city on disk plus one CLI-trained checkpoint, built once per
/// test binary.
struct Workspace {
  TempDir dir{"tractflow-it"};
  std::string data;    // tracts.csv, schema.csv, flows.csv
  std::string run;     // train output
  std::string checkpoint;

  static const Workspace& get() {
    static const std::unique_ptr<Workspace> ws = [] {
      auto w = std::make_unique<Workspace>();
      w->data = w->dir / "data";
      w->run = w->dir / "run";
      w->checkpoint = w->run + "/checkpoint.json";
      run_process(TRACTFLOW_SYNTH, {"--out-dir", w->data, "--tracts", "40", "--seed", "2", "--extent-km", "9"});
      run_process(TRACTFLOW_CLI, train_args(*w, w->run));
      return w;
    }();
    return *ws;
  }

  static std::vector<std::string> train_args(const Workspace& w, const std::string& out_dir) {
    return {"train",         "--tracts",      w.data + "/tracts.csv", "--flows",  w.data + "/flows.csv",
            "--schema",      w.data + "/schema.csv", "--seed",         "5",        "--out-dir",
            out_dir,         "--hidden-dim",  "8",                    "--embedding-dim", "8",
            "--epochs",      "12",            "--rounds",             "80",       "--log1p-targets",
            "--label",       "synthetic"};
  }
};

}  // namespace tractflow::testing

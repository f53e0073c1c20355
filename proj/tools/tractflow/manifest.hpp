#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tractflow::cli {

struct FileDigest {
  std::string path;
  std::string sha256;
};

/// Provenance of one command run. Timestamps live only here, so the
/// artifacts it lists stay byte-identical across reruns.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_hash;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string started_at;
  std::string finished_at;

  void add_input(const std::string& path);
  /// Writes the artifact and records its digest.
  void write_output(const std::string& path, const std::string& contents);
  std::string to_json() const;
};

/// UTC, second resolution, ISO 8601.
std::string utc_timestamp();

}  // namespace tractflow::cli

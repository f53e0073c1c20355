#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include <nlohmann/json.hpp>

#include "tractflow/util/digest.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow::cli {

void RunManifest::add_input(const std::string& path) { inputs.push_back({path, file_sha256(path)}); }

void RunManifest::write_output(const std::string& path, const std::string& contents) {
  write_file(path, contents);
  outputs.push_back({path, sha256_hex(contents)});
}

std::string RunManifest::to_json() const {
  auto files = [](const std::vector<FileDigest>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  nlohmann::ordered_json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config_hash"] = config_hash;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  j["checkpoint"] = checkpoint;
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2) + "\n";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tractflow::cli

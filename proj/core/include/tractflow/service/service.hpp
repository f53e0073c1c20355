#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tractflow/model/flow_model.hpp"
#include "tractflow/scenario/scenario.hpp"

namespace tractflow {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServiceOptions {
  ScenarioOptions scenario;  // pair universe for every evaluation
  int default_bins = 40;
};

/// Session state behind the HTTP endpoints: a frozen model with its base
/// graph, and a named scenario store whose evaluations are cached by content
/// hash. Handlers are safe to call concurrently.
class ServiceState {
 public:
  /// Without a model every data endpoint answers 503.
  explicit ServiceState(std::optional<TrainedModel> model, ServiceOptions options = {});

  HttpResponse health() const;
  HttpResponse tracts() const;
  /// Baseline predictions for the observed pairs, optionally one split.
  HttpResponse baseline(const std::optional<std::string>& split) const;
  HttpResponse list_scenarios() const;
  HttpResponse post_scenario(const std::string& body);
  HttpResponse scenario_diff(const std::string& id, const std::optional<std::string>& radius_km,
                             const std::optional<std::string>& bins);

  /// Id a scenario receives: derived from its content hash.
  static std::string scenario_id(const Scenario& scenario);

  /// Number of scenario evaluations actually run (cache misses).
  std::uint64_t evaluation_count() const;

 private:
  struct Entry {
    std::string id;
    Scenario scenario;
    std::string hash;
  };

  HttpResponse unavailable() const;
  std::shared_ptr<const FlowDiff> evaluate_cached(const Entry& entry);

  std::unique_ptr<TrainedModel> model_;
  std::unique_ptr<ScenarioEngine> engine_;
  ServiceOptions options_;

  mutable std::shared_mutex mutex_;
  std::vector<Entry> entries_;
  std::map<std::string, std::shared_ptr<const FlowDiff>> diff_cache_;  // by content hash
  std::map<std::string, std::string> report_cache_;                    // by hash + query
  std::uint64_t evaluations_ = 0;
};

/// Binds the endpoints to an HTTP server and blocks until stop_server() or
/// process exit. Returns false when the address cannot be bound.
bool run_server(ServiceState& state, const std::string& host, int port);

/// Binds to an ephemeral port on host and serves on a background thread.
class BackgroundServer {
 public:
  BackgroundServer(ServiceState& state, const std::string& host = "127.0.0.1");
  ~BackgroundServer();
  BackgroundServer(const BackgroundServer&) = delete;
  BackgroundServer& operator=(const BackgroundServer&) = delete;

  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace tractflow

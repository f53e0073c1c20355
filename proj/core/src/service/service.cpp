#include "tractflow/service/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tractflow/error.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

using ordered_json = nlohmann::ordered_json;

namespace {

HttpResponse json_response(int status, const ordered_json& body) { return {status, body.dump()}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", code}, {"message", message}});
}

int status_for(Errc code) {
  switch (code) {
    case Errc::ParseError:
      return 400;
    case Errc::NonFiniteLoss:
    case Errc::Diverged:
      return 500;
    default:
      return 422;
  }
}

HttpResponse from_error(const Error& e) { return error_response(status_for(e.code()), to_string(e.code()), e.what()); }

std::optional<double> parse_query_number(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

ServiceState::ServiceState(std::optional<TrainedModel> model, ServiceOptions options) : options_(options) {
  if (model) {
    model_ = std::make_unique<TrainedModel>(std::move(*model));
    engine_ = std::make_unique<ScenarioEngine>(*model_);
  }
}

std::string ServiceState::scenario_id(const Scenario& scenario) {
  return "sc-" + scenario_content_hash(scenario).substr(0, 16);
}

HttpResponse ServiceState::unavailable() const {
  return error_response(503, "NoModel", "no checkpoint is loaded");
}

HttpResponse ServiceState::health() const {
  ordered_json j{{"status", "ok"}, {"model_loaded", model_ != nullptr}};
  if (model_) {
    j["label"] = model_->config.label;
    j["tracts"] = model_->graph.size();
    j["indicators"] = model_->schema.size();
  }
  return json_response(200, j);
}

HttpResponse ServiceState::tracts() const {
  if (!model_) return unavailable();
  const TractGraph& g = model_->graph;
  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g.tract(a).id < g.tract(b).id; });
  const auto names = model_->schema.names();
  ordered_json list = ordered_json::array();
  for (std::size_t i : order) {
    const Tract& t = g.tract(i);
    ordered_json ind = ordered_json::object();
    for (std::size_t k = 0; k < names.size(); ++k) ind[names[k]] = t.features[k];
    list.push_back({{"id", t.id}, {"centroid", {{"lat", t.centroid.lat}, {"lon", t.centroid.lon}}}, {"indicators", ind}});
  }
  return json_response(200, {{"indicators", names}, {"tracts", std::move(list)}});
}

HttpResponse ServiceState::baseline(const std::optional<std::string>& split) const {
  if (!model_) return unavailable();
  std::optional<Split> only;
  if (split) {
    try {
      only = parse_split(*split);
    } catch (const Error& e) {
      return error_response(400, "InvalidArgument", e.what());
    }
  }
  const TractGraph& g = model_->graph;
  std::vector<const FlowRecord*> rows;
  for (const auto& r : model_->flows.records()) {
    if (!only || r.split == *only) rows.push_back(&r);
  }
  std::sort(rows.begin(), rows.end(), [](const FlowRecord* a, const FlowRecord* b) {
    return std::tie(a->origin, a->destination) < std::tie(b->origin, b->destination);
  });
  ordered_json pairs = ordered_json::array();
  for (const FlowRecord* r : rows) {
    pairs.push_back({{"origin", r->origin},
                     {"destination", r->destination},
                     {"predicted", engine_->baseline(g.require_index(r->origin), g.require_index(r->destination))},
                     {"observed", r->commuters},
                     {"split", to_string(r->split)}});
  }
  return json_response(200, {{"pairs", std::move(pairs)}});
}

HttpResponse ServiceState::list_scenarios() const {
  if (!model_) return unavailable();
  std::shared_lock lock(mutex_);
  ordered_json list = ordered_json::array();
  for (const auto& e : entries_) {
    list.push_back({{"id", e.id},
                    {"name", e.scenario.name},
                    {"note", e.scenario.note},
                    {"edits", e.scenario.edits.size()},
                    {"content_hash", e.hash}});
  }
  return json_response(200, {{"scenarios", std::move(list)}});
}

HttpResponse ServiceState::post_scenario(const std::string& body) {
  if (!model_) return unavailable();
  Scenario scenario;
  try {
    scenario = parse_scenario(body, "request body");
    apply_scenario(model_->graph, model_->schema, scenario);
  } catch (const Error& e) {
    return from_error(e);
  }
  const std::string hash = scenario_content_hash(scenario);
  const std::string id = scenario_id(scenario);
  std::unique_lock lock(mutex_);
  for (const auto& e : entries_) {
    if (e.hash == hash) return json_response(200, {{"id", e.id}, {"content_hash", hash}, {"created", false}});
    if (e.scenario.name == scenario.name) {
      return error_response(409, "DuplicateName",
                            "a different scenario named \"" + scenario.name + "\" already exists (" + e.id + ")");
    }
  }
  entries_.push_back({id, std::move(scenario), hash});
  return json_response(201, {{"id", id}, {"content_hash", hash}, {"created", true}});
}

std::shared_ptr<const FlowDiff> ServiceState::evaluate_cached(const Entry& entry) {
  {
    std::shared_lock lock(mutex_);
    const auto it = diff_cache_.find(entry.hash);
    if (it != diff_cache_.end()) return it->second;
  }
  auto diff = std::make_shared<const FlowDiff>(engine_->evaluate(entry.scenario, options_.scenario));
  std::unique_lock lock(mutex_);
  ++evaluations_;
  return diff_cache_.emplace(entry.hash, std::move(diff)).first->second;
}

HttpResponse ServiceState::scenario_diff(const std::string& id, const std::optional<std::string>& radius_km,
                                         const std::optional<std::string>& bins) {
  if (!model_) return unavailable();
  std::optional<Entry> entry;
  {
    std::shared_lock lock(mutex_);
    for (const auto& e : entries_) {
      if (e.id == id) entry = e;
    }
  }
  if (!entry) return error_response(404, "UnknownScenario", "no scenario with id " + id);
  std::optional<double> radius;
  if (radius_km) {
    radius = parse_query_number(*radius_km);
    if (!radius || !(*radius > 0.0)) return error_response(400, "InvalidArgument", "radius_km must be a number > 0");
  }
  int bin_count = options_.default_bins;
  if (bins) {
    const auto b = parse_query_number(*bins);
    if (!b || *b < 1.0 || *b > 10000.0 || *b != std::floor(*b)) {
      return error_response(400, "InvalidArgument", "bins must be an integer in [1, 10000]");
    }
    bin_count = static_cast<int>(*b);
  }
  const std::string key = entry->hash + "|" + (radius ? format_double(*radius) : "-") + "|" + std::to_string(bin_count);
  {
    std::shared_lock lock(mutex_);
    const auto it = report_cache_.find(key);
    if (it != report_cache_.end()) return {200, it->second};
  }
  try {
    const auto diff = evaluate_cached(*entry);
    std::string body = diff_report_json(make_diff_report(model_->graph, entry->scenario, *diff, radius, bin_count));
    std::unique_lock lock(mutex_);
    report_cache_.emplace(key, body);
    return {200, std::move(body)};
  } catch (const Error& e) {
    return from_error(e);
  }
}

std::uint64_t ServiceState::evaluation_count() const {
  std::shared_lock lock(mutex_);
  return evaluations_;
}

namespace {

std::optional<std::string> query(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

void reply(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

void bind_routes(httplib::Server& server, ServiceState& state) {
  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) { reply(res, state.health()); });
  server.Get("/tracts", [&](const httplib::Request&, httplib::Response& res) { reply(res, state.tracts()); });
  server.Get("/flows/baseline", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, state.baseline(query(req, "split")));
  });
  server.Get("/scenarios", [&](const httplib::Request&, httplib::Response& res) { reply(res, state.list_scenarios()); });
  server.Post("/scenarios", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, state.post_scenario(req.body));
  });
  server.Get(R"(/scenarios/([A-Za-z0-9_-]+)/diff)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, state.scenario_diff(req.matches[1], query(req, "radius_km"), query(req, "bins")));
  });
  // Unrouted paths and bodiless errors still answer with the error record.
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const bool unrouted = res.status == 404;
    reply(res, error_response(res.status, unrouted ? "NotFound" : "HttpError",
                              unrouted ? "no route for " + req.method + " " + req.path : "request rejected"));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    reply(res, error_response(500, "Internal", message));
  });
}

}  // namespace

bool run_server(ServiceState& state, const std::string& host, int port) {
  httplib::Server server;
  bind_routes(server, state);
  return server.listen(host, port);
}

struct BackgroundServer::Impl {
  httplib::Server server;
  std::thread thread;
};

BackgroundServer::BackgroundServer(ServiceState& state, const std::string& host) : impl_(std::make_unique<Impl>()) {
  bind_routes(impl_->server, state);
  port_ = impl_->server.bind_to_any_port(host);
  if (port_ <= 0) throw Error(Errc::InvalidArgument, "cannot bind a port on " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

BackgroundServer::~BackgroundServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tractflow

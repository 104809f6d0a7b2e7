#include "ats/interpret_server.hpp"

#include <httplib.h>

#include <charconv>
#include <json.hpp>

#include "ats/attribution.hpp"
#include "ats/error.hpp"

namespace ats {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";
constexpr int kDefaultPageSize = 20;
constexpr int kMaxPageSize = 500;

constexpr const char* kFallbackPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>ats interpret</title></head>
<body>
<h1>ats interpret</h1>
<p>No UI bundle is installed. Start the server with <code>--ui-dir</code> pointing at the built web UI,
or query the JSON API directly:</p>
<ul>
<li><a href="/api/metadata">GET /api/metadata</a></li>
<li><a href="/api/instances">GET /api/instances?offset=0&amp;limit=20</a></li>
<li>POST /api/predict, /api/attribute/tokens, /api/attribute/features with {"text": "..."}</li>
</ul>
</body></html>
)";

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

json prediction_json(const Prediction& p) {
  json j = {{"score", p.score}, {"label", p.label}};
  if (p.probs) j["probs"] = *p.probs;
  return j;
}

std::string model_type(const Model& m) {
  if (std::holds_alternative<LinearModel>(m)) return "ridge";
  if (std::holds_alternative<LogisticModel>(m)) return "logistic";
  return "random_forest";
}

// Reads {"text": "..."} from a request body.
std::optional<std::string> request_text(const httplib::Request& req, httplib::Response& res) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "BadRequest", "body must be a JSON object");
    return std::nullopt;
  }
  auto it = body.find("text");
  if (it == body.end() || !it->is_string()) {
    send_error(res, 400, "BadRequest", "body needs a string field 'text'");
    return std::nullopt;
  }
  return it->get<std::string>();
}

std::optional<int> query_int(const httplib::Request& req, const char* name, int fallback, httplib::Response& res) {
  if (!req.has_param(name)) return fallback;
  const auto value = req.get_param_value(name);
  if (value.empty()) return fallback;
  int v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || v < 0) {
    send_error(res, 400, "BadRequest", std::string("query parameter '") + name + "' must be a non-negative integer");
    return std::nullopt;
  }
  return v;
}

int status_for(const Error& e) {
  if (e.code() == "TooManyTokens") return 413;
  if (e.code() == "NoTokens" || e.code() == "BadRequest") return 400;
  return 500;
}

}  // namespace

InterpretServer::InterpretServer(std::shared_ptr<const Profiler> profiler, std::optional<Dataset> data,
                                 std::filesystem::path ui_dir)
    : profiler_(std::move(profiler)),
      data_(std::move(data)),
      ui_dir_(std::move(ui_dir)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

InterpretServer::~InterpretServer() { stop(); }

void InterpretServer::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  // The library default sets SO_REUSEPORT, which lets a second server share
  // an occupied port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Get("/api/metadata", [this](const httplib::Request&, httplib::Response& res) {
    const auto& spec = profiler_->label_spec();
    send_json(res, {{"task", to_string(profiler_->task())},
                    {"label_spec", {{"lo", spec.lo()}, {"hi", spec.hi()}}},
                    {"feature_names", profiler_->pipeline().feature_names()},
                    {"model", model_type(profiler_->model())},
                    {"dataset_size", data_ ? data_->size() : 0}});
  });

  srv.Get("/api/instances", [this](const httplib::Request& req, httplib::Response& res) {
    const auto offset = query_int(req, "offset", 0, res);
    if (!offset) return;
    const auto limit = query_int(req, "limit", kDefaultPageSize, res);
    if (!limit) return;
    const std::size_t total = data_ ? data_->size() : 0;
    const std::size_t begin = std::min(total, static_cast<std::size_t>(*offset));
    const std::size_t end = std::min(total, begin + static_cast<std::size_t>(std::min(*limit, kMaxPageSize)));
    json items = json::array();
    for (std::size_t i = begin; i < end; ++i) {
      const auto& inst = data_->instances[i];
      const Prediction p = profiler_->predict(inst.text);
      items.push_back({{"id", inst.id},
                       {"text", inst.text},
                       {"gold_label", inst.label ? json(*inst.label) : json(nullptr)},
                       {"pred_label", p.label},
                       {"pred_score", p.score}});
    }
    send_json(res, {{"total", total}, {"offset", begin}, {"items", std::move(items)}});
  });

  srv.Post("/api/predict", [this](const httplib::Request& req, httplib::Response& res) {
    if (auto text = request_text(req, res)) send_json(res, prediction_json(profiler_->predict(*text)));
  });

  srv.Post("/api/attribute/tokens", [this](const httplib::Request& req, httplib::Response& res) {
    auto text = request_text(req, res);
    if (!text) return;
    const auto attr = attribute_tokens(*profiler_, *text);
    send_json(res, {{"tokens", attr.tokens},
                    {"deltas", attr.deltas},
                    {"base_score", attr.base_score},
                    {"label", attr.label},
                    {"target", profiler_->task() == TaskKind::regression ? "score" : "probability"}});
  });

  srv.Post("/api/attribute/features", [this](const httplib::Request& req, httplib::Response& res) {
    auto text = request_text(req, res);
    if (!text) return;
    const auto attr = attribute_features(*profiler_, *text);
    json body = {{"names", attr.names}, {"contributions", attr.contributions}, {"base_score", attr.base_score}};
    if (attr.bias) body["bias"] = *attr.bias;
    send_json(res, body);
  });

  if (!ui_dir_.empty() && std::filesystem::is_directory(ui_dir_)) {
    srv.set_mount_point("/", ui_dir_.string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kFallbackPage, "text/html"); });
  }

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, status_for(e), e.code(), e.message());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    } catch (...) {
      send_error(res, 500, "InternalError", "unknown failure");
    }
  });

  // Bodiless errors (unknown routes, wrong methods) still answer in JSON.
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string code = res.status == 404 ? "NotFound" : "HttpError";
    send_error(res, res.status, code, req.method + " " + req.path + " failed with status " + std::to_string(res.status));
    return httplib::Server::HandlerResponse::Handled;
  });
}

int InterpretServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("PortBusy", "could not bind any port on " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("PortBusy", "port " + std::to_string(port) + " on " + host + " is unavailable");
  }
  return port;
}

void InterpretServer::listen() { server_->listen_after_bind(); }

void InterpretServer::stop() {
  if (server_) server_->stop();
}

bool InterpretServer::running() const { return server_->is_running(); }

}  // namespace ats

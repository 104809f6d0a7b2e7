#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <future>
#include <json.hpp>
#include <thread>

#include "ats/attribution.hpp"
#include "ats/interpret_server.hpp"
#include "support.hpp"

using namespace ats;
using json = nlohmann::json;

namespace {

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

FeaturePipeline count_pipeline() { return FeaturePipeline(Tokenizer{}, {Extractor::token_count()}); }

// score == number of tokens
std::shared_ptr<const Profiler> identity_profiler() {
  return std::make_shared<Profiler>(TaskKind::regression, count_pipeline(), LinearModel{{1.0}, 0.0, 0.0},
                                    LabelSpec(0, 100), false, "");
}

Profiler linear_profiler(std::vector<double> w, double b, bool normalized) {
  FeaturePipeline fp(Tokenizer{}, {Extractor::token_count(), Extractor::avg_token_length()});
  Standardizer s;
  s.means = {5.0, 4.0};
  s.stds = {2.0, 1.5};
  fp.set_standardizer(s);
  return Profiler(TaskKind::regression, fp, LinearModel{std::move(w), b, 0.0}, LabelSpec(1, 6), normalized, "");
}

Profiler constant_forest(double leaf, std::size_t features) {
  Forest f;
  f.config.n_estimators = 1;
  f.config.max_depth = 0;
  f.num_features = features;
  Tree t;
  t.nodes.push_back(TreeNode{});
  t.nodes[0].value = leaf;
  f.trees.push_back(t);
  std::vector<Extractor> ex = {Extractor::token_count(), Extractor::avg_token_length()};
  ex.resize(features, Extractor::token_count());
  return Profiler(TaskKind::regression, FeaturePipeline(Tokenizer{}, ex), f, LabelSpec(0, 4), false, "");
}

Dataset small_dataset(std::size_t n) {
  Dataset d;
  d.label_spec = LabelSpec(0, 100);
  for (std::size_t i = 0; i < n; ++i) {
    Instance inst;
    inst.id = "doc" + std::to_string(i);
    inst.text = std::string(i + 1, 'w');
    for (std::size_t k = 0; k < i; ++k) inst.text += " w";
    if (i % 3 != 0) inst.label = static_cast<int>(i);
    d.instances.push_back(inst);
  }
  return d;
}

class Running {
 public:
  explicit Running(std::shared_ptr<const Profiler> p, std::optional<Dataset> d = std::nullopt,
                   std::filesystem::path ui = {})
      : server_(std::move(p), std::move(d), std::move(ui)) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.listen(); });
    for (int i = 0; i < 500 && !server_.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  InterpretServer server_;
  int port_ = 0;
  std::thread thread_;
};

json post(httplib::Client& c, const std::string& path, const json& body, int expect = 200) {
  auto res = c.Post(path, body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == expect);
  CHECK(res->get_header_value("Content-Type").find("application/json") == 0);
  return json::parse(res->body);
}

}  // namespace

TEST_CASE("occlusion on a constant model gives zero deltas") {
  const auto p = constant_forest(2.0, 1);
  const auto a = attribute_tokens(p, "one two three four");
  CHECK(a.tokens.size() == 4);
  CHECK(a.base_score == 2.0);
  for (double d : a.deltas) CHECK(d == 0.0);
}

TEST_CASE("occlusion on the token-count model gives unit deltas") {
  const auto p = identity_profiler();
  const auto a = attribute_tokens(*p, "the cat sat on the mat");
  CHECK(a.base_score == 6.0);
  CHECK(a.label == 6);
  REQUIRE(a.deltas.size() == 6);
  for (double d : a.deltas) CHECK(d == 1.0);
}

TEST_CASE("single token occlusion compares against the empty text") {
  const auto p = linear_profiler({0.7, -0.3}, 2.5, false);
  const auto a = attribute_tokens(p, "word");
  REQUIRE(a.deltas.size() == 1);
  CHECK(a.deltas[0] == doctest::Approx(a.base_score - p.predict("").score).epsilon(1e-12));
}

TEST_CASE("occlusion limits") {
  const auto p = identity_profiler();
  CHECK(error_code([&] { attribute_tokens(*p, ""); }) == "NoTokens");
  CHECK(error_code([&] { attribute_tokens(*p, "   \n\t "); }) == "NoTokens");
  std::string big;
  for (int i = 0; i < 2001; ++i) big += "w ";
  CHECK(error_code([&] { attribute_tokens(*p, big); }) == "TooManyTokens");
  big.resize(big.size() - 2);
  CHECK(attribute_tokens(*p, big).deltas.size() == 2000);
}

TEST_CASE("property: token deltas on a linear count model sum to n times the weight") {
  ats_test::Gen g(81);
  for (int trial = 0; trial < 50; ++trial) {
    const double w = g.real(-3, 3), b = g.real(-2, 2);
    const Profiler p(TaskKind::regression, count_pipeline(), LinearModel{{w}, b, 0.0}, LabelSpec(0, 10), false, "");
    const auto text = g.text(30);
    if (p.pipeline().tokenizer()(text).empty()) continue;
    const auto a = attribute_tokens(p, text);
    double sum = 0;
    for (double d : a.deltas) {
      REQUIRE(std::abs(d - w) < 1e-9);
      sum += d;
    }
    REQUIRE(std::abs(sum - static_cast<double>(a.tokens.size()) * w) < 1e-9);
  }
}

TEST_CASE("linear feature contributions add up to the score") {
  ats_test::Gen g(82);
  for (bool normalized : {false, true}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = linear_profiler({g.real(-1, 1), g.real(-1, 1)}, g.real(-1, 1), normalized);
      const auto text = g.text();
      const auto a = attribute_features(p, text);
      REQUIRE(a.bias.has_value());
      double total = *a.bias;
      for (double c : a.contributions) total += c;
      REQUIRE(std::abs(total - a.base_score) < 1e-9);
      REQUIRE(a.base_score == p.predict(text).score);
    }
  }
  const auto zero = linear_profiler({0.0, 0.0}, 3.0, false);
  const auto a = attribute_features(zero, "some words here");
  CHECK(a.names == std::vector<std::string>{"token_count", "avg_token_length"});
  for (double c : a.contributions) CHECK(c == 0.0);
  CHECK(a.base_score == 3.0);
}

TEST_CASE("ablation on a constant forest gives zero contributions") {
  const auto p = constant_forest(1.5, 2);
  const auto a = attribute_features(p, "a few words");
  CHECK_FALSE(a.bias.has_value());
  CHECK(a.base_score == 1.5);
  REQUIRE(a.contributions.size() == 2);
  for (double c : a.contributions) CHECK(c == 0.0);
}

TEST_CASE("server metadata, predict and attribution schemas") {
  Running srv(identity_profiler(), small_dataset(60));
  auto c = srv.client();

  auto res = c.Get("/api/metadata");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  auto meta = json::parse(res->body);
  CHECK(meta["task"] == "regression");
  CHECK(meta["label_spec"] == json{{"lo", 0}, {"hi", 100}});
  CHECK(meta["feature_names"] == json::array({"token_count"}));
  CHECK(meta["model"] == "ridge");
  CHECK(meta["dataset_size"] == 60);

  auto pred = post(c, "/api/predict", {{"text", "a b c"}});
  CHECK(pred["score"] == 3.0);
  CHECK(pred["label"] == 3);
  CHECK_FALSE(pred.contains("probs"));

  auto tok = post(c, "/api/attribute/tokens", {{"text", "a b c"}});
  CHECK(tok["tokens"] == json::array({"a", "b", "c"}));
  CHECK(tok["deltas"] == json::array({1.0, 1.0, 1.0}));
  CHECK(tok["base_score"] == 3.0);
  CHECK(tok["label"] == 3);
  CHECK(tok["target"] == "score");

  auto feat = post(c, "/api/attribute/features", {{"text", "a b c"}});
  CHECK(feat["names"] == json::array({"token_count"}));
  CHECK(feat["contributions"] == json::array({3.0}));
  CHECK(feat["bias"] == 0.0);
  CHECK(feat["base_score"] == 3.0);
}

TEST_CASE("server errors are JSON with matching status codes") {
  Running srv(identity_profiler());
  auto c = srv.client();
  auto e = post(c, "/api/predict", json::array({1}), 400);
  CHECK(e["error"] == "BadRequest");
  e = post(c, "/api/predict", {{"txt", "x"}}, 400);
  CHECK(e["error"] == "BadRequest");
  e = post(c, "/api/attribute/tokens", {{"text", ""}}, 400);
  CHECK(e["error"] == "NoTokens");
  std::string big;
  for (int i = 0; i < 2500; ++i) big += "w ";
  e = post(c, "/api/attribute/tokens", {{"text", big}}, 413);
  CHECK(e["error"] == "TooManyTokens");

  auto raw = c.Post("/api/predict", "{not json", "application/json");
  REQUIRE(raw);
  CHECK(raw->status == 400);
  CHECK(json::parse(raw->body)["error"] == "BadRequest");

  auto missing = c.Get("/api/nothing");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error"] == "NotFound");

  auto bad_page = c.Get("/api/instances?offset=-1");
  REQUIRE(bad_page);
  CHECK(bad_page->status == 400);

  auto pre = c.Options("/api/predict");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  auto root = c.Get("/");
  REQUIRE(root);
  CHECK(root->status == 200);
  CHECK(root->body.find("/api/metadata") != std::string::npos);
}

TEST_CASE("instances are paged in dataset order") {
  Running srv(identity_profiler(), small_dataset(60));
  auto c = srv.client();
  auto page = json::parse(c.Get("/api/instances")->body);
  CHECK(page["total"] == 60);
  CHECK(page["offset"] == 0);
  REQUIRE(page["items"].size() == 20);
  CHECK(page["items"][0]["id"] == "doc0");
  CHECK(page["items"][0]["gold_label"].is_null());
  CHECK(page["items"][1]["gold_label"] == 1);
  CHECK(page["items"][4]["pred_label"] == 5);
  CHECK(page["items"][4]["pred_score"] == 5.0);

  page = json::parse(c.Get("/api/instances?offset=50&limit=30")->body);
  CHECK(page["items"].size() == 10);
  CHECK(page["items"][0]["id"] == "doc50");
  page = json::parse(c.Get("/api/instances?offset=100")->body);
  CHECK(page["items"].empty());
  CHECK(page["offset"] == 60);
  page = json::parse(c.Get("/api/instances?limit=100000")->body);
  CHECK(page["items"].size() == 60);

  Running empty(identity_profiler());
  auto c2 = empty.client();
  page = json::parse(c2.Get("/api/instances")->body);
  CHECK(page["total"] == 0);
  CHECK(page["items"].empty());
}

TEST_CASE("static files are served from the ui directory") {
  ats_test::TempDir ui;
  ats_test::write_file(ui / "index.html", "<html>bundle</html>");
  Running srv(identity_profiler(), std::nullopt, ui.path());
  auto c = srv.client();
  auto res = c.Get("/");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "<html>bundle</html>");
  CHECK(json::parse(c.Get("/api/metadata")->body)["model"] == "ridge");
}

TEST_CASE("concurrent requests match serial results") {
  auto p = std::make_shared<Profiler>(linear_profiler({0.4, -0.2}, 1.0, false));
  Running srv(p);
  ats_test::Gen g(83);
  std::vector<std::string> texts;
  for (int i = 0; i < 16; ++i) {
    auto t = g.text(40);
    if (p->pipeline().tokenizer()(t).empty()) t = "fallback text";
    texts.push_back(t);
  }
  std::vector<std::string> serial;
  {
    auto c = srv.client();
    for (const auto& t : texts) {
      serial.push_back(c.Post("/api/attribute/tokens", json{{"text", t}}.dump(), "application/json")->body);
    }
  }
  std::vector<std::future<std::string>> futures;
  for (const auto& t : texts) {
    futures.push_back(std::async(std::launch::async, [&srv, t] {
      auto c = srv.client();
      auto res = c.Post("/api/attribute/tokens", json{{"text", t}}.dump(), "application/json");
      return res ? res->body : std::string("no response");
    }));
  }
  for (std::size_t i = 0; i < futures.size(); ++i) CHECK(futures[i].get() == serial[i]);
}

TEST_CASE("a busy port is reported") {
  Running first(identity_profiler());
  InterpretServer second(identity_profiler(), std::nullopt);
  CHECK(error_code([&] { second.bind("127.0.0.1", first.port()); }) == "PortBusy");
}

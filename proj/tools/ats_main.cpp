// ats: train, evaluate, predict and interpret text scoring models.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "ats/config.hpp"
#include "ats/dataset_io.hpp"
#include "ats/error.hpp"
#include "ats/interpret_server.hpp"
#include "ats/metrics.hpp"
#include "ats/profiler.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Label names recorded in the artifact's training configuration, if any.
std::vector<std::string> artifact_label_names(const ats::Profiler& p) {
  try {
    return ats::bind_experiment(ats::parse_config(p.config_text())).dataset.label_names;
  } catch (const ats::Error&) {
    return {};
  }
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = ats::load_experiment(config_path);
  const auto data = ats::training_dataset(cfg);
  const auto profiler = ats::Profiler::train(cfg, data);
  profiler.save(out_dir);
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  std::cerr << "trained " << cfg.profiler.type << " (" << ats::to_string(cfg.profiler.learner.kind) << ") on "
            << data.size() << " instances, " << profiler.pipeline().dims() << " feature dims, " << fixed(took.count(), 2)
            << " s\nartifact written to " << out_dir << "\n";
  return 0;
}

struct EvaluateOptions {
  std::string artifact;
  std::string input;
  std::string format = "tsv";
  int prompt = 0;
  std::string output_format = "text";
};

int cmd_evaluate(const EvaluateOptions& o) {
  const auto profiler = ats::Profiler::load(o.artifact);
  const auto& spec = profiler.label_spec();
  ats::Dataset data;
  if (o.format == "asap") {
    if (o.prompt == 0) throw ats::Error("BadParam", "--format asap needs --prompt");
    auto ranges = ats::default_asap_ranges();
    ranges.insert_or_assign(o.prompt, spec);
    data = ats::read_asap(o.input, o.prompt, ranges);
  } else {
    ats::TsvOptions opts;
    opts.label_spec = spec;
    opts.label_names = artifact_label_names(profiler);
    data = ats::read_tsv(o.input, opts);
  }

  std::vector<ats::Prediction> preds;
  std::vector<int> golds;
  preds.reserve(data.size());
  golds.reserve(data.size());
  for (const auto& inst : data.instances) {
    if (!inst.label) throw ats::Error("MissingLabel", "instance " + inst.id + " has no gold label");
    preds.push_back(profiler.predict(inst.text));
    golds.push_back(*inst.label);
  }
  const auto report = ats::evaluate_all(preds, golds, profiler.task(), spec);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

  if (o.output_format == "json") {
    nlohmann::ordered_json j;
    for (const auto& name : ats::metric_names()) {
      if (report.has(name)) j[name] = report.values.at(name);
    }
    j["n"] = report.count;
    std::cout << j.dump() << "\n";
  } else {
    for (const auto& name : ats::metric_names()) {
      if (report.has(name)) std::cout << name << ": " << fixed(report.values.at(name), 4) << "\n";
    }
  }
  return 0;
}

int cmd_predict(const std::string& artifact, const std::string& input) {
  const auto profiler = ats::Profiler::load(artifact);
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!input.empty() && input != "-") {
    file.open(input, std::ios::binary);
    if (!file) throw ats::Error("FileNotFound", "cannot read " + input);
    in = &file;
  }
  std::string line;
  while (std::getline(*in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto p = profiler.predict(line);
    std::cout << p.label << '\t' << fixed(p.score, 6) << '\n';
  }
  if (in->bad()) throw ats::Error("ReadError", "failed while reading " + (input.empty() ? "standard input" : input));
  std::cout.flush();
  return 0;
}

struct InterpretOptions {
  std::string artifact;
  int port = 8321;
  std::string host = "127.0.0.1";
  std::string data;
  std::string ui_dir;
};

int cmd_interpret(const InterpretOptions& o) {
  auto profiler = std::make_shared<const ats::Profiler>(ats::Profiler::load(o.artifact));
  std::optional<ats::Dataset> data;
  if (!o.data.empty()) {
    ats::TsvOptions opts;
    opts.label_spec = profiler->label_spec();
    opts.label_names = artifact_label_names(*profiler);
    data = ats::read_tsv(o.data, opts);
  }

  // Signals are taken synchronously by a dedicated thread; every other
  // thread (including the server's workers) inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ats::InterpretServer server(profiler, std::move(data), o.ui_dir);
  const int port = server.bind(o.host, o.port);
  std::cout << "serving on http://" << o.host << ":" << port << "/" << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // Wakes the waiter if the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  std::cerr << "server stopped\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated text scoring: train, evaluate, predict, interpret"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path, train_out;
  auto* train = app.add_subcommand("train", "Train a profiler from a YAML config and save the artifact");
  train->add_option("config", config_path, "Experiment configuration")->required();
  train->add_option("artifact_dir", train_out, "Output artifact directory")->required();

  EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score a labelled dataset with a trained artifact");
  evaluate->add_option("artifact_dir", eval.artifact)->required();
  evaluate->add_option("--input", eval.input, "Labelled dataset")->required();
  evaluate->add_option("--format", eval.format, "Dataset format")->check(CLI::IsMember({"tsv", "asap"}));
  evaluate->add_option("--prompt", eval.prompt, "ASAP prompt id")->check(CLI::Range(1, 8));
  evaluate->add_option("--output-format", eval.output_format)->check(CLI::IsMember({"text", "json"}));

  std::string predict_artifact, predict_input;
  auto* predict = app.add_subcommand("predict", "Predict one document per input line");
  predict->add_option("artifact_dir", predict_artifact)->required();
  predict->add_option("--input", predict_input, "Input file (default: standard input)");

  InterpretOptions interp;
  auto* interpret = app.add_subcommand("interpret", "Serve the interpretation API and UI");
  interpret->add_option("artifact_dir", interp.artifact)->required();
  interpret->add_option("--port", interp.port)->check(CLI::Range(0, 65535));
  interpret->add_option("--host", interp.host);
  interpret->add_option("--data", interp.data, "Labelled TSV to browse");
  interpret->add_option("--ui-dir", interp.ui_dir, "Directory with the built web UI");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(config_path, train_out);
    if (*evaluate) return cmd_evaluate(eval);
    if (*predict) return cmd_predict(predict_artifact, predict_input);
    if (*interpret) return cmd_interpret(interp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

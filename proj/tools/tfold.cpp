// tfold: trace, optimize and proprioception commands plus the HTTP service.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tfold/config.hpp"
#include "tfold/design_opt.hpp"
#include "tfold/io.hpp"
#include "tfold/proprio.hpp"
#include "tfold/regressor.hpp"
#include "tfold/report.hpp"
#include "tfold/service.hpp"

namespace {

using namespace tfold;

tfold::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_logger_st("tfold"));
  spdlog::set_pattern("%l: %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("TFOLD_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
}

int cmd_trace(const std::string& config_path, const std::string& out) {
  const SensorScene scene = load_scene_config(config_path).to_scene();
  const TraceArtifacts a = trace_artifacts(scene);
  write_trace_artifacts(out, a);
  spdlog::info("traced {} pixels, {} skin hits", a.metrics.pixel_count, a.metrics.skin_hits);
  std::cout << "coverage " << format_number(a.metrics.coverage) << "\nmin_imaging_angle_deg "
            << format_number(a.metrics.min_imaging_angle) << "\n";
  return 0;
}

int cmd_optimize(const std::string& config_path, int budget, std::uint64_t seed, const std::string& out) {
  const SceneConfig base = load_scene_config(config_path);
  base.to_scene();
  DesignObjective objective;
  objective.envelope = base.envelope;
  const DesignVector initial = design_vector(base);
  spdlog::info("optimizing {} free coordinates, budget {}", initial.free_count(), budget);
  const OptimizeResult r = optimize(initial, base, objective, budget, seed, [](const HistoryEntry& h) {
    if (h.evaluation % 100 == 0) spdlog::debug("evaluation {}: best {}", h.evaluation, h.best_score);
  });
  write_files_atomic({{out + "_history.tsv", history_table(r.history)},
                      {out + "_best.json", emit_scene_config(apply_design(base, r.best))}});
  std::cout << "initial_score " << format_number(r.initial_score) << "\nfinal_score " << format_number(r.best_score)
            << "\n";
  return 0;
}

int cmd_generate(const std::string& out, int count, double noise, std::uint64_t seed) {
  DatasetOptions options;
  options.count = count;
  options.noise_sigma = noise;
  options.seed = seed;
  const TorqueDataset data = generate_dataset(BackboneModel{}, LedCamera{}, options);
  save_dataset(out, data);
  spdlog::info("wrote {} samples to {}", data.samples.size(), out);
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out, int epochs, std::uint64_t seed, bool augment) {
  const TorqueDataset data = load_dataset(data_dir);
  const std::vector<RegressorSample> samples = prepare_samples(data, LedCamera{});
  RegressorConfig config;
  config.epochs = epochs;
  config.seed = seed;
  config.augment = augment;
  spdlog::info("training on {} samples for {} epochs", samples.size(), epochs);
  const TrainResult r = train_regressor(samples, config);
  write_files_atomic({{out, encode_regressor(r.model)}, {out + ".loss.tsv", loss_table(r.loss_history)}});
  std::cout << "final_loss " << format_number(r.loss_history.back()) << "\n";
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& model_path, const std::string& out) {
  const TorqueRegressor model = load_regressor(model_path);
  const TorqueDataset data = load_dataset(data_dir);
  const std::vector<RegressorSample> samples = prepare_samples(data, LedCamera{});
  const RegressorEvaluation ev = evaluate_regressor(model, samples);
  nlohmann::ordered_json summary;
  summary["samples"] = samples.size();
  summary["bending_rmse_Nmm"] = ev.bending_rmse;
  summary["twisting_rmse_Nmm"] = ev.twisting_rmse;
  write_files_atomic(
      {{out + "_summary.json", summary.dump(2) + "\n"}, {out + "_predictions.tsv", prediction_table(samples, ev)}});
  std::cout << "bending_rmse_Nmm " << format_number(ev.bending_rmse) << "\ntwisting_rmse_Nmm "
            << format_number(ev.twisting_rmse) << "\n";
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& host, int port) {
  Service service(load_scene_config(config_path));
  const int bound = service.bind(host, port);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("listening on http://{}:{}", host, bound);
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Design and analysis tools for mirror-folded camera-based tactile fingers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config = "configs/reference_scene.json";
  std::string out;
  int budget = 2000;
  std::uint64_t seed = 1;
  int port = 8080;
  std::string host = "127.0.0.1";
  int count = 2000;
  double noise = 0.0;
  std::string data;
  std::string model;
  int epochs = 100;
  bool augment = false;

  auto* trace = app.add_subcommand("trace", "Trace every pixel and write the drawing, metrics table and summary");
  trace->add_option("--config", config, "Scene config")->check(CLI::ExistingFile);
  trace->add_option("--out", out, "Output prefix")->required();

  auto* opt = app.add_subcommand("optimize", "Optimize the spline control points of a scene");
  opt->add_option("--config", config, "Scene config")->check(CLI::ExistingFile);
  opt->add_option("--budget", budget, "Objective evaluations")->check(CLI::PositiveNumber);
  opt->add_option("--seed", seed, "Restart jitter seed");
  opt->add_option("--out", out, "Output prefix")->required();

  auto* proprio = app.add_subcommand("proprio", "Synthetic torque dataset, regressor training and evaluation");
  proprio->require_subcommand(1);
  auto* gen = proprio->add_subcommand("generate", "Render a synthetic LED dataset");
  gen->add_option("--out", out, "Dataset directory")->required();
  gen->add_option("--count", count, "Number of samples")->check(CLI::NonNegativeNumber);
  gen->add_option("--noise", noise, "Rendering noise sigma, intensity levels")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", seed, "Sampling seed");
  auto* train = proprio->add_subcommand("train", "Train the torque regressor");
  train->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", out, "Model file")->required();
  train->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
  train->add_option("--seed", seed, "Initialization and shuffling seed");
  train->add_flag("--augment", augment, "Random scale/shift augmentation");
  auto* eval = proprio->add_subcommand("eval", "Evaluate a trained regressor");
  eval->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--model", model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Output prefix")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", config, "Initial scene config")->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*trace) return cmd_trace(config, out);
    if (*opt) return cmd_optimize(config, budget, seed, out);
    if (*gen) return cmd_generate(out, count, noise, seed);
    if (*train) return cmd_train(data, out, epochs, seed, augment);
    if (*eval) return cmd_eval(data, model, out);
    if (*serve) return cmd_serve(config, host, port);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}

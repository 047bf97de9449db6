// driftopt: simulate a drift-capable RC car, learn its dynamics, and drive
// gradient-based trajectory optimization and receding-horizon control
// through the learned model.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftopt/driftopt.hpp"

namespace fs = std::filesystem;
using namespace driftopt;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Resolves a path found inside a config file: relative paths are tried
/// against the config's own directory first, then the working directory.
fs::path resolve_near(const fs::path& config_path, const std::string& target) {
  const fs::path p(target);
  if (p.is_absolute()) return p;
  const fs::path near = config_path.parent_path() / p;
  if (fs::exists(near)) return near;
  return p;
}

SimParams load_params_or_default(const std::string& path) {
  return path.empty() ? SimParams{} : SimParams::from_json_file(path);
}

/// Builds the transition model for optimize/race: a trained network file,
/// or the literal "oracle" to wrap the simulator plant itself.
std::shared_ptr<const TransitionModel> make_transition(const std::string& model_path,
                                                       const SimParams& plant, double h) {
  if (model_path == "oracle") return std::make_shared<SimPlantTransition>(plant, h);
  return std::make_shared<LearnedTransition>(load_model_json(model_path), h);
}

SimState track_start_state(const Track& track) {
  const Eigen::Vector2d a = track.centerline[0];
  const Eigen::Vector2d b = track.centerline[1];
  return {CarPose{a.x(), a.y(), std::atan2(b.y() - a.y(), b.x() - a.x())}, BodyVelocity{}};
}

struct TrainSettings {
  MlpSpec spec;
  TrainConfig config;
};

TrainSettings parse_train_config(const nlohmann::json& j, std::uint64_t seed) {
  TrainSettings s;
  s.spec = MlpSpec::make(j.value("hidden_layers", 8), j.value("width", 64),
                         activation_from_string(j.value("activation", std::string("gelu"))), seed);
  s.config.loss = loss_from_string(j.value("loss", std::string("relative")));
  s.config.epsilon = j.value("epsilon", 1e-2);
  s.config.learning_rate = j.value("learning_rate", 1e-3);
  s.config.batch_size = j.value("batch_size", 256);
  s.config.epochs = j.value("epochs", 200);
  s.config.seed = seed;
  s.config.validate();
  return s;
}

int cmd_collect(const std::string& config, std::uint64_t seed, double duration, double h,
                const std::string& out, int validation_count, double validation_seconds,
                double train_ratio, double test_ratio) {
  const Stopwatch watch;
  const SimParams params = load_params_or_default(config);
  CollectConfig collect;
  collect.duration = duration;
  collect.h = h;
  collect.seed = seed;
  collect.validate();

  const fs::path dir(out);
  fs::create_directories(dir);
  const std::vector<LogRecord> records = collect_dataset(params, collect);
  write_pose_log_csv(dir / "log.csv", records);
  const std::vector<TrainingPair> pairs =
      build_pairs(PoseLog::from_records(records), SmoothingConfig{});

  std::vector<PoseLog> validation_sources;
  for (int j = 0; j < validation_count; ++j) {
    CollectConfig vcfg = collect;
    vcfg.duration = validation_seconds;
    vcfg.seed = seed + 1000003ULL * static_cast<std::uint64_t>(j + 1);
    // validation episodes are replayed open-loop for the TVE, which cannot
    // reproduce an arena reflection; record them in an unbounded area
    vcfg.arena_half_x = vcfg.arena_half_y = 50.0;
    validation_sources.push_back(PoseLog::from_records(collect_dataset(params, vcfg)));
  }

  SplitConfig split;
  split.train_ratio = train_ratio;
  split.test_ratio = test_ratio;
  split.validation_count = validation_count;
  split.seed = seed;
  const SplitDataset ds = split_and_save(pairs, validation_sources, split, dir);

  RunManifest manifest;
  manifest.command = "collect";
  if (!config.empty()) manifest.config_paths.push_back(config);
  manifest.seed = seed;
  manifest.artifact_paths = {"log.csv", "train.ndjson", "test.ndjson", "manifest.json"};
  for (std::size_t i = 0; i < ds.validation.size(); ++i) {
    char name[40];
    std::snprintf(name, sizeof(name), "validation/val_%03zu.csv", i);
    manifest.artifact_paths.push_back(name);
  }
  manifest.wall_time_s = watch.seconds();
  write_manifest(dir, manifest);
  std::cout << "collected " << records.size() << " records, " << ds.train.size()
            << " train pairs, " << ds.test.size() << " test pairs, " << ds.validation.size()
            << " validation trajectories -> " << out << "\n";
  return 0;
}

int cmd_train(const std::string& dataset_dir, const std::string& config, std::uint64_t seed,
              const std::string& loss_override, int epochs_override, const std::string& out) {
  const Stopwatch watch;
  nlohmann::json cfg_json = nlohmann::json::object();
  if (!config.empty()) cfg_json = nlohmann::json::parse(read_text_file(config));
  TrainSettings settings = parse_train_config(cfg_json, seed);
  if (!loss_override.empty()) settings.config.loss = loss_from_string(loss_override);
  if (epochs_override >= 0) settings.config.epochs = epochs_override;

  const SplitDataset ds = load_dataset(dataset_dir);
  const TrainResult result = train_mlp(settings.spec, ds.train, ds.test, settings.config);

  const fs::path dir(out);
  fs::create_directories(dir);
  save_model_json(result.model, dir / "model.json");
  write_history_csv(result.history, dir / "history.csv");

  RunManifest manifest;
  manifest.command = "train";
  if (!config.empty()) manifest.config_paths.push_back(config);
  manifest.config_paths.push_back(dataset_dir);
  manifest.seed = seed;
  manifest.artifact_paths = {"model.json", "history.csv"};
  manifest.details = {{"loss", to_string(settings.config.loss)},
                      {"activation", to_string(settings.spec.activation)},
                      {"hidden_layers", static_cast<int>(settings.spec.layer_sizes.size()) - 2},
                      {"width", settings.spec.layer_sizes[1]},
                      {"epochs", settings.config.epochs}};
  manifest.wall_time_s = watch.seconds();
  write_manifest(dir, manifest);
  std::cout << "trained " << to_string(settings.spec.activation) << " net ("
            << settings.spec.layer_sizes.size() - 2 << "x" << settings.spec.layer_sizes[1]
            << ", loss " << to_string(settings.config.loss) << ") for "
            << settings.config.epochs << " epochs; final train loss "
            << (result.history.train_loss.empty() ? 0.0 : result.history.train_loss.back())
            << " -> " << out << "\n";
  return 0;
}

int cmd_select(const std::string& dataset_dir, const std::string& config, std::uint64_t seed,
               const std::string& out) {
  const Stopwatch watch;
  const nlohmann::json cfg = nlohmann::json::parse(read_text_file(config));
  const SplitDataset ds = load_dataset(dataset_dir);

  const nlohmann::json dataset_manifest =
      nlohmann::json::parse(read_text_file(fs::path(dataset_dir) / "manifest.json"));
  ensure(dataset_manifest.at("files").contains("validation_logs") && !ds.validation.empty(),
         "dataset manifest has no files.validation_logs entries; selection needs validation "
         "trajectories");
  const double h = dataset_manifest.at("h").get<double>();
  const std::vector<ValidationTrajectory> validation =
      validation_from_logs(ds.validation, InitialVelocity::kRest);

  TrainConfig base_train;
  if (cfg.contains("train")) {
    const nlohmann::json& t = cfg.at("train");
    base_train.loss = loss_from_string(t.value("loss", std::string("relative")));
    base_train.epsilon = t.value("epsilon", 1e-2);
    base_train.learning_rate = t.value("learning_rate", 1e-3);
    base_train.batch_size = t.value("batch_size", 256);
    base_train.epochs = t.value("epochs", 30);
  }

  const fs::path dir(out);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.command = "select";
  manifest.config_paths = {config, dataset_dir};
  manifest.seed = seed;

  {  // loss-function comparison
    const nlohmann::json& lc = cfg.at("loss_comparison");
    const MlpSpec spec = MlpSpec::make(lc.value("hidden_layers", 8), lc.value("width", 64),
                                       activation_from_string(lc.value("activation",
                                                                       std::string("gelu"))),
                                       seed);
    TrainConfig train = base_train;
    if (lc.contains("epochs")) train.epochs = lc.at("epochs").get<int>();
    const LossComparisonReport report =
        compare_losses(spec, ds, validation, h, train, lc.value("repeats", 5), seed);
    write_text_file(dir / "loss_comparison.json", loss_comparison_json(report).dump(2) + "\n");
    manifest.artifact_paths.push_back("loss_comparison.json");
  }

  {  // architecture grid search
    const nlohmann::json& g = cfg.at("grid");
    const std::vector<int> layers = g.at("hidden_layer_counts").get<std::vector<int>>();
    const std::vector<int> widths = g.at("widths").get<std::vector<int>>();
    std::vector<Activation> acts;
    for (const auto& a : g.at("activations")) acts.push_back(activation_from_string(a));
    TrainConfig train = base_train;
    if (g.contains("epochs")) train.epochs = g.at("epochs").get<int>();
    const GridSearchReport report = grid_search(layers, widths, acts, ds, validation, h, train,
                                                seed);
    write_text_file(dir / "grid_search.json", grid_report_json(report).dump(2) + "\n");
    write_grid_report_csv(report, dir / "grid_search.csv");
    manifest.artifact_paths.push_back("grid_search.json");
    manifest.artifact_paths.push_back("grid_search.csv");
  }

  {  // relu/gelu gradient and control smoothness
    const nlohmann::json& sm = cfg.at("smoothness");
    const Scenario scenario =
        Scenario::from_json_file(resolve_near(config, sm.at("scenario").get<std::string>()));
    TrainConfig train = base_train;
    if (sm.contains("epochs")) train.epochs = sm.at("epochs").get<int>();
    const int hidden = sm.value("hidden_layers", 4);
    const int width = sm.value("width", 32);
    const TrainResult relu = train_mlp(MlpSpec::make(hidden, width, Activation::kRelu, seed),
                                       ds.train, ds.test, train);
    const TrainResult gelu = train_mlp(MlpSpec::make(hidden, width, Activation::kGelu, seed),
                                       ds.train, ds.test, train);
    const SmoothnessReport report = smoothness_report(relu.model, gelu.model, scenario);
    write_text_file(dir / "smoothness.json", smoothness_report_json(report).dump(2) + "\n");
    write_smoothness_trace_csv(report.relu, dir / "smoothness_relu.csv");
    write_smoothness_trace_csv(report.gelu, dir / "smoothness_gelu.csv");
    manifest.artifact_paths.push_back("smoothness.json");
    manifest.artifact_paths.push_back("smoothness_relu.csv");
    manifest.artifact_paths.push_back("smoothness_gelu.csv");
  }

  manifest.wall_time_s = watch.seconds();
  write_manifest(dir, manifest);
  std::cout << "selection reports -> " << out << "\n";
  return 0;
}

int cmd_optimize(const std::string& scenario_path, const std::string& model_path,
                 const std::string& plant_config, std::uint64_t seed, const std::string& out) {
  const Stopwatch watch;
  const Scenario scenario = Scenario::from_json_file(scenario_path);
  const SimParams plant = load_params_or_default(plant_config);

  std::string model_source = model_path;
  if (model_source.empty()) {
    ensure(!scenario.model_path.empty(),
           "no --model given and the scenario names no model file");
    model_source = resolve_near(scenario_path, scenario.model_path).string();
  }
  const std::shared_ptr<const TransitionModel> model =
      make_transition(model_source, plant, scenario.h);

  const TrajOptProblem problem = scenario.make_problem(model);
  const TrajOptResult result = optimize(problem, Matrix2Xd::Zero(2, problem.n));

  // open-loop playback on the plant
  std::vector<ControlInput> playback;
  for (Eigen::Index i = 0; i < result.u.cols(); ++i) {
    playback.emplace_back(result.u(0, i), result.u(1, i));
  }
  const std::vector<SimState> executed =
      rollout_sim({scenario.x0, scenario.v0}, playback, plant, scenario.h);

  const fs::path dir(out);
  fs::create_directories(dir);
  write_trajectory_csv(dir / "nominal.csv", result.states, result.u);
  write_trajectory_csv(dir / "executed.csv", executed, result.u);
  write_text_file(dir / "report.json", result_report_json(result).dump(2) + "\n");

  const CarPose& nom = result.states.back().pose;
  const CarPose& act = executed.back().pose;
  const nlohmann::json errors{
      {"final_position_error_l2", std::hypot(nom.x - act.x, nom.y - act.y)},
      {"final_heading_error_abs", std::abs(wrap_angle_diff(nom.heading, act.heading))}};
  write_text_file(dir / "error_summary.json", errors.dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "optimize";
  manifest.config_paths = {scenario_path};
  manifest.seed = seed;
  manifest.artifact_paths = {"nominal.csv", "executed.csv", "report.json", "error_summary.json"};
  manifest.wall_time_s = watch.seconds();
  write_manifest(dir, manifest);
  std::cout << "optimize: " << result.termination << " after " << result.iterations
            << " iterations, cost " << result.cost_history.front() << " -> "
            << result.cost_history.back() << "; playback final position error "
            << errors.at("final_position_error_l2").get<double>() << " m -> " << out << "\n";
  return 0;
}

int cmd_race(const std::string& track_path, const std::string& model_path,
             const std::string& config, const std::string& plant_config,
             const std::string& grad_mode, int laps, std::uint64_t seed, const std::string& out) {
  const Stopwatch watch;
  const Track track = Track::from_json_file(track_path);
  const SimParams plant = load_params_or_default(plant_config);
  MpcConfig mpc = config.empty() ? MpcConfig{} : MpcConfig::from_json_file(config);
  mpc.seed = seed;

  std::shared_ptr<const TransitionModel> model =
      make_transition(model_path, plant, mpc.period());
  if (grad_mode == "fd") {
    model = std::make_shared<FiniteDifferenceTransition>(model, 1e-6);
  }

  const LapTelemetry telemetry =
      run_closed_loop(track, mpc, model, plant, laps, track_start_state(track));

  const fs::path dir(out);
  fs::create_directories(dir);
  write_telemetry_csv(telemetry, dir / "telemetry.csv");
  nlohmann::json summary = lap_summary_json(telemetry, laps);
  summary["grad_mode"] = grad_mode;
  summary["seed"] = seed;
  write_text_file(dir / "lap_summary.json", summary.dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "race";
  manifest.config_paths = {track_path, config};
  manifest.seed = seed;
  manifest.artifact_paths = {"telemetry.csv", "lap_summary.json"};
  manifest.wall_time_s = watch.seconds();
  write_manifest(dir, manifest);
  std::cout << "race: " << (telemetry.completed ? "completed" : "DID NOT FINISH") << " "
            << telemetry.lap_times.size() << "/" << laps << " laps in "
            << telemetry.cycles.size() << " cycles; mean forward speed "
            << telemetry.mean_forward_speed << " m/s, max |d| " << telemetry.max_abs_offset
            << " m -> " << out << "\n";
  return telemetry.completed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftopt: learned car dynamics + gradient-based trajectory optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;

  // collect
  auto* collect = app.add_subcommand("collect", "simulate driving and build a dataset");
  std::string collect_config;
  double duration = 960.0, h = 0.05, validation_seconds = 3.0;
  double train_ratio = 15.0 / 16.0, test_ratio = 1.0 / 16.0;
  int validation_count = 40;
  collect->add_option("--config", collect_config, "simulator parameter JSON");
  collect->add_option("--seed", seed, "excitation seed");
  collect->add_option("--out", out, "output directory")->required();
  collect->add_option("--jobs", jobs, "max worker threads");
  collect->add_option("--duration", duration, "seconds of driving (default 960)");
  collect->add_option("--period", h, "record period in seconds (default 0.05)");
  collect->add_option("--validation-count", validation_count, "held-out trajectories (default 40)");
  collect->add_option("--validation-seconds", validation_seconds,
                      "length of each validation trajectory (default 3)");
  collect->add_option("--train-ratio", train_ratio, "train fraction (default 15/16)");
  collect->add_option("--test-ratio", test_ratio, "test fraction (default 1/16)");

  // train
  auto* train = app.add_subcommand("train", "fit the velocity transition network");
  std::string train_dataset, train_config, loss_override;
  int epochs_override = -1;
  train->add_option("--dataset", train_dataset, "dataset directory from collect")->required();
  train->add_option("--config", train_config, "training config JSON");
  train->add_option("--seed", seed, "init and shuffle seed");
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--jobs", jobs, "max worker threads");
  train->add_option("--loss", loss_override, "override loss: l1, l2, relative");
  train->add_option("--epochs", epochs_override, "override epoch count");

  // select
  auto* select = app.add_subcommand("select", "loss/activation comparisons and grid search");
  std::string select_dataset, select_config;
  select->add_option("--dataset", select_dataset, "dataset directory from collect")->required();
  select->add_option("--config", select_config, "selection config JSON")->required();
  select->add_option("--seed", seed, "base seed");
  select->add_option("--out", out, "output directory")->required();
  select->add_option("--jobs", jobs, "max worker threads");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "offline trajectory optimization + playback");
  std::string scenario_path, model_path, plant_config;
  optimize->add_option("--config,--scenario", scenario_path, "scenario JSON")->required();
  optimize->add_option("--model", model_path, "model JSON path, or 'oracle' for the plant");
  optimize->add_option("--plant", plant_config, "plant simulator parameter JSON");
  optimize->add_option("--seed", seed, "recorded seed");
  optimize->add_option("--out", out, "output directory")->required();
  optimize->add_option("--jobs", jobs, "max worker threads");

  // race
  auto* race = app.add_subcommand("race", "receding-horizon closed loop on a track");
  std::string track_path, race_config, grad_mode = "analytic";
  int laps = 1;
  race->add_option("--track", track_path, "track JSON")->required();
  race->add_option("--model", model_path, "model JSON path, or 'oracle' for the plant")
      ->required();
  race->add_option("--config", race_config, "MPC config JSON");
  race->add_option("--plant", plant_config, "plant simulator parameter JSON");
  race->add_option("--grad-mode", grad_mode, "analytic or fd")
      ->check(CLI::IsMember({"analytic", "fd"}));
  race->add_option("--laps", laps, "laps to complete (default 1)");
  race->add_option("--seed", seed, "recorded seed");
  race->add_option("--out", out, "output directory")->required();
  race->add_option("--jobs", jobs, "max worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (jobs > 0) parallel::set_max_jobs(jobs);

  try {
    if (collect->parsed()) {
      return cmd_collect(collect_config, seed, duration, h, out, validation_count,
                         validation_seconds, train_ratio, test_ratio);
    }
    if (train->parsed()) {
      return cmd_train(train_dataset, train_config, seed, loss_override, epochs_override, out);
    }
    if (select->parsed()) return cmd_select(select_dataset, select_config, seed, out);
    if (optimize->parsed()) return cmd_optimize(scenario_path, model_path, plant_config, seed, out);
    if (race->parsed()) {
      return cmd_race(track_path, model_path, race_config, plant_config, grad_mode, laps, seed,
                      out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

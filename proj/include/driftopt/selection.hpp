#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftopt/dataset.hpp"
#include "driftopt/mlp.hpp"
#include "driftopt/model.hpp"
#include "driftopt/trajopt.hpp"

namespace driftopt {

/// One open-loop validation episode: initial state, the recorded control
/// sequence, and the recorded final pose it should reproduce.
struct ValidationTrajectory {
  SimState z0;
  Matrix2Xd controls;  ///< 2 x n
  CarPose final_pose;
};

enum class InitialVelocity {
  kRest,              ///< trajectory starts from standstill; v0 is exactly zero
  kFiniteDifference,  ///< estimate v0 from the smoothed pose log
};

inline ValidationTrajectory validation_from_log(const PoseLog& log, InitialVelocity mode,
                                                const SmoothingConfig& smoothing = {}) {
  log.validate();
  ValidationTrajectory out;
  out.z0.pose = log.poses.front();
  if (mode == InitialVelocity::kFiniteDifference) {
    const std::vector<TrainingPair> pairs = build_pairs(log, smoothing);
    out.z0.vel = pairs.front().v_in;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(log.size()) - 1;
  out.controls.resize(2, n);
  for (Eigen::Index i = 0; i < n; ++i) out.controls.col(i) = log.controls[i].vec();
  out.final_pose = log.poses.back();
  return out;
}

inline std::vector<ValidationTrajectory> validation_from_logs(std::span<const PoseLog> logs,
                                                              InitialVelocity mode,
                                                              const SmoothingConfig& smoothing = {}) {
  std::vector<ValidationTrajectory> out;
  out.reserve(logs.size());
  for (const PoseLog& log : logs) out.push_back(validation_from_log(log, mode, smoothing));
  return out;
}

struct TveReport {
  std::string model_id;
  std::vector<double> per_trajectory;  ///< L1 final-pose error per episode
  double mean = 0.0;                   ///< the TVE
};

/// Trajectory Validation Error: each episode's recorded controls are rolled
/// out open-loop through the model; the per-episode error is the L1 norm of
/// the final pose difference (wrap-aware heading) and the TVE is the mean
/// over episodes.
inline TveReport tve(const TransitionModel& model,
                     std::span<const ValidationTrajectory> trajectories,
                     const std::string& model_id = {}) {
  ensure(!trajectories.empty(), "TVE needs at least one validation trajectory");
  TveReport report;
  report.model_id = model_id;
  report.per_trajectory.reserve(trajectories.size());
  double total = 0.0;
  for (const ValidationTrajectory& t : trajectories) {
    const std::vector<SimState> states = rollout_model(model, t.z0, t.controls);
    const CarPose& end = states.back().pose;
    const double err = std::abs(end.x - t.final_pose.x) + std::abs(end.y - t.final_pose.y) +
                       std::abs(wrap_angle_diff(end.heading, t.final_pose.heading));
    report.per_trajectory.push_back(err);
    total += err;
  }
  report.mean = total / static_cast<double>(trajectories.size());
  return report;
}

inline nlohmann::json tve_report_json(const TveReport& r) {
  return {{"model", r.model_id},
          {"trajectory_count", r.per_trajectory.size()},
          {"tve", r.mean},
          {"per_trajectory", r.per_trajectory}};
}

struct LossComparisonEntry {
  LossKind loss = LossKind::kL1;
  std::uint64_t seed = 0;
  double tve = 0.0;
  double final_test_loss = 0.0;
};

struct LossComparisonReport {
  int repeats = 0;
  std::vector<LossComparisonEntry> entries;
};

/// Trains `repeats` seeded networks per loss kind on identical data and
/// reports the TVE of each.
inline LossComparisonReport compare_losses(const MlpSpec& base_spec,
                                           const SplitDataset& data,
                                           std::span<const ValidationTrajectory> validation,
                                           double h, const TrainConfig& base_cfg, int repeats,
                                           std::uint64_t seed0) {
  ensure(repeats >= 2, "loss comparison needs at least 2 repeats");
  LossComparisonReport report;
  report.repeats = repeats;
  for (const LossKind kind : {LossKind::kL1, LossKind::kL2, LossKind::kRelative}) {
    for (int r = 0; r < repeats; ++r) {
      MlpSpec spec = base_spec;
      spec.seed = seed0 + static_cast<std::uint64_t>(r);
      TrainConfig cfg = base_cfg;
      cfg.loss = kind;
      cfg.seed = seed0 + static_cast<std::uint64_t>(r);
      const TrainResult trained = train_mlp(spec, data.train, data.test, cfg);
      const LearnedTransition model(trained.model, h);
      LossComparisonEntry e;
      e.loss = kind;
      e.seed = cfg.seed;
      e.tve = tve(model, validation).mean;
      e.final_test_loss = trained.history.test_loss.empty() ? 0.0
                                                            : trained.history.test_loss.back();
      report.entries.push_back(e);
    }
  }
  return report;
}

inline nlohmann::json loss_comparison_json(const LossComparisonReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  nlohmann::json summary;
  for (const LossKind kind : {LossKind::kL1, LossKind::kL2, LossKind::kRelative}) {
    std::vector<double> tves;
    for (const LossComparisonEntry& e : report.entries) {
      if (e.loss != kind) continue;
      entries.push_back({{"loss", to_string(e.loss)},
                         {"seed", e.seed},
                         {"tve", e.tve},
                         {"final_test_loss", e.final_test_loss}});
      tves.push_back(e.tve);
    }
    double mean = 0.0;
    for (double v : tves) mean += v;
    mean /= static_cast<double>(tves.size());
    double var = 0.0;
    for (double v : tves) var += (v - mean) * (v - mean);
    var = tves.size() > 1 ? var / static_cast<double>(tves.size() - 1) : 0.0;
    summary[to_string(kind)] = {{"mean_tve", mean}, {"stddev_tve", std::sqrt(var)}};
  }
  return {{"repeats", report.repeats}, {"entries", entries}, {"summary", summary}};
}

struct GridRow {
  int hidden_layers = 0;
  int width = 0;
  Activation activation = Activation::kRelu;
  double final_test_loss = 0.0;
  double tve = std::numeric_limits<double>::infinity();
  int param_count = 0;
  double train_seconds = 0.0;
  std::string error;  ///< non-empty when the configuration was rejected
};

struct GridSearchReport {
  std::vector<GridRow> rows;  ///< sorted by TVE, rejected configurations last
};

/// Trains one seeded model per (layer count, width, activation)
/// configuration and scores each by test loss and TVE.
inline GridSearchReport grid_search(std::span<const int> hidden_layer_counts,
                                    std::span<const int> widths,
                                    std::span<const Activation> activations,
                                    const SplitDataset& data,
                                    std::span<const ValidationTrajectory> validation, double h,
                                    const TrainConfig& cfg, std::uint64_t seed) {
  ensure(!hidden_layer_counts.empty() && !widths.empty() && !activations.empty(),
         "grid search needs nonempty configuration sets");
  GridSearchReport report;
  for (const int hidden : hidden_layer_counts) {
    for (const int width : widths) {
      for (const Activation act : activations) {
        GridRow row;
        row.hidden_layers = hidden;
        row.width = width;
        row.activation = act;
        try {
          const MlpSpec spec = MlpSpec::make(hidden, width, act, seed);
          const auto t0 = std::chrono::steady_clock::now();
          const TrainResult trained = train_mlp(spec, data.train, data.test, cfg);
          row.train_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          row.param_count = trained.model.weights.param_count();
          row.final_test_loss =
              trained.history.test_loss.empty() ? 0.0 : trained.history.test_loss.back();
          const LearnedTransition model(trained.model, h);
          row.tve = tve(model, validation).mean;
        } catch (const ValidationError& e) {
          row.error = e.what();
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.error.empty() != b.error.empty()) return a.error.empty();
    return a.tve < b.tve;
  });
  return report;
}

inline nlohmann::json grid_report_json(const GridSearchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const GridRow& r : report.rows) {
    rows.push_back({{"hidden_layers", r.hidden_layers},
                    {"width", r.width},
                    {"activation", to_string(r.activation)},
                    {"final_test_loss", r.final_test_loss},
                    {"tve", r.tve},
                    {"param_count", r.param_count},
                    {"train_seconds", r.train_seconds},
                    {"error", r.error}});
  }
  return {{"rows", rows}};
}

inline void write_grid_report_csv(const GridSearchReport& report,
                                  const std::filesystem::path& path) {
  std::string out = "hidden_layers,width,activation,final_test_loss,tve,param_count,train_seconds,error\n";
  for (const GridRow& r : report.rows) {
    out += std::to_string(r.hidden_layers) + ',' + std::to_string(r.width) + ',' +
           to_string(r.activation) + ',' + format_double(r.final_test_loss) + ',' +
           format_double(r.tve) + ',' + std::to_string(r.param_count) + ',' +
           format_double(r.train_seconds) + ',' + r.error + '\n';
  }
  write_text_file(path, out);
}

/// Mean Euclidean norm of the second differences of a sequence; zero for
/// fewer than three samples.
inline double fluctuation_metric(const Matrix2Xd& seq) {
  const Eigen::Index n = seq.cols();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    acc += (seq.col(i + 1) - 2.0 * seq.col(i) + seq.col(i - 1)).norm();
  }
  return acc / static_cast<double>(n - 2);
}

struct SmoothnessTrace {
  Matrix2Xd first_gradient;  ///< dl/du at the first optimizer iteration
  Matrix2Xd final_controls;
  double gradient_fluctuation = 0.0;
  double control_fluctuation = 0.0;
};

struct SmoothnessReport {
  SmoothnessTrace relu;
  SmoothnessTrace gelu;
};

namespace detail {

inline SmoothnessTrace smoothness_trace(const MlpModel& model, const Scenario& scenario) {
  const auto transition = std::make_shared<LearnedTransition>(model, scenario.h);
  const TrajOptProblem problem = scenario.make_problem(transition);
  const TrajOptResult result = optimize(problem, Matrix2Xd::Zero(2, problem.n));
  SmoothnessTrace trace;
  trace.first_gradient = result.first_gradient;
  trace.final_controls = result.u;
  trace.gradient_fluctuation = fluctuation_metric(result.first_gradient);
  trace.control_fluctuation = fluctuation_metric(result.u);
  return trace;
}

}  // namespace detail

/// Optimizes the same scenario with a ReLU and a GELU model trained on
/// identical data and reports paired gradient/control traces with the
/// second-difference fluctuation metric. The qualitative ordering is
/// reported, not asserted.
inline SmoothnessReport smoothness_report(const MlpModel& model_relu, const MlpModel& model_gelu,
                                          const Scenario& scenario) {
  SmoothnessReport report;
  report.relu = detail::smoothness_trace(model_relu, scenario);
  report.gelu = detail::smoothness_trace(model_gelu, scenario);
  return report;
}

inline nlohmann::json smoothness_report_json(const SmoothnessReport& report) {
  const auto entry = [](const SmoothnessTrace& t) {
    return nlohmann::json{{"gradient_fluctuation", t.gradient_fluctuation},
                          {"control_fluctuation", t.control_fluctuation}};
  };
  return {{"relu", entry(report.relu)}, {"gelu", entry(report.gelu)}};
}

/// CSV schema: `step,grad_throttle,grad_steer,control_throttle,control_steer`.
inline void write_smoothness_trace_csv(const SmoothnessTrace& trace,
                                       const std::filesystem::path& path) {
  std::string out = "step,grad_throttle,grad_steer,control_throttle,control_steer\n";
  for (Eigen::Index i = 0; i < trace.final_controls.cols(); ++i) {
    const bool has_grad = i < trace.first_gradient.cols();
    out += std::to_string(i) + ',' + format_double(has_grad ? trace.first_gradient(0, i) : 0.0) +
           ',' + format_double(has_grad ? trace.first_gradient(1, i) : 0.0) + ',' +
           format_double(trace.final_controls(0, i)) + ',' +
           format_double(trace.final_controls(1, i)) + '\n';
  }
  write_text_file(path, out);
}

}  // namespace driftopt

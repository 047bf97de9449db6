#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftopt/common.hpp"
#include "driftopt/sim.hpp"
#include "driftopt/trajopt.hpp"
#include "driftopt/types.hpp"

namespace driftopt {

/// Closed centerline polyline with a constant half width.
struct Track {
  std::vector<Eigen::Vector2d> centerline;
  double half_width = 0.4;

  std::vector<double> cumulative_s;  ///< arc length at each vertex
  double length = 0.0;

  void build() {
    ensure(centerline.size() >= 3, "track needs at least 3 centerline vertices");
    ensure(half_width > 0.0, "track half width must be > 0");
    cumulative_s.assign(centerline.size(), 0.0);
    for (std::size_t i = 1; i < centerline.size(); ++i) {
      const double seg = (centerline[i] - centerline[i - 1]).norm();
      ensure(seg > 0.0, "consecutive track vertices must be distinct");
      cumulative_s[i] = cumulative_s[i - 1] + seg;
    }
    const double closing = (centerline.front() - centerline.back()).norm();
    ensure(closing > 0.0, "consecutive track vertices must be distinct");
    length = cumulative_s.back() + closing;
  }

  static Track from_json(const nlohmann::json& j) {
    Track t;
    try {
      t.half_width = j.at("half_width").get<double>();
      for (const auto& v : j.at("centerline")) {
        t.centerline.emplace_back(v[0].get<double>(), v[1].get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("track: ") + e.what());
    }
    t.build();
    return t;
  }

  static Track from_json_file(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }

  nlohmann::json to_json() const {
    nlohmann::json verts = nlohmann::json::array();
    for (const Eigen::Vector2d& v : centerline) verts.push_back({v.x(), v.y()});
    return {{"half_width", half_width}, {"centerline", verts}};
  }
};

struct TrackQuery {
  double s = 0.0;  ///< arc length of the projection, in [0, length)
  double d = 0.0;  ///< signed lateral offset, left of travel positive
  Eigen::Vector2d tangent{1.0, 0.0};
  Eigen::Vector2d normal{0.0, 1.0};
};

/// Projects a point onto the nearest centerline segment. Equidistant
/// segments tie-break toward the lower arc length.
inline TrackQuery project_to_track(const Track& track, const Eigen::Vector2d& point) {
  const std::size_t m = track.centerline.size();
  TrackQuery best;
  double best_dist2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Vector2d& a = track.centerline[i];
    const Eigen::Vector2d& b = track.centerline[(i + 1) % m];
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = std::clamp((point - a).dot(ab) / len2, 0.0, 1.0);
    const Eigen::Vector2d proj = a + t * ab;
    const double dist2 = (point - proj).squaredNorm();
    if (dist2 < best_dist2) {
      best_dist2 = dist2;
      const Eigen::Vector2d tangent = ab / std::sqrt(len2);
      best.tangent = tangent;
      best.normal = Eigen::Vector2d(-tangent.y(), tangent.x());
      best.s = track.cumulative_s[i] + t * std::sqrt(len2);
      best.d = best.normal.dot(point - proj);
    }
  }
  if (best.s >= track.length) best.s -= track.length;
  return best;
}

/// Arc-length progress and signed lateral offset of a point.
inline std::pair<double, double> progress(const Track& track, const Eigen::Vector2d& point) {
  const TrackQuery q = project_to_track(track, point);
  return {q.s, q.d};
}

/// Lifts a raw projection arc length onto the continuous (multi-lap) scale
/// closest to a previous query.
inline double unwrap_progress(const Track& track, double s_raw, double s_prev) {
  const double laps = std::round((s_prev - s_raw) / track.length);
  return s_raw + laps * track.length;
}

/// Racing objective: linear penalty on the arc-length deficit behind a
/// constant-speed reference, a one-sided quadratic barrier on excursions
/// beyond the track half width, and the usual control penalties.
class TrackCost : public TrajectoryCost {
 public:
  TrackCost(Track track, double target_speed, double h, double progress_weight,
            double excursion_weight, ControlPenalty penalty)
      : track_(std::move(track)),
        target_speed_(target_speed),
        h_(h),
        w_progress_(progress_weight),
        w_excursion_(excursion_weight),
        penalty_(penalty) {
    ensure(target_speed_ >= 0.0, "target speed must be nonnegative");
    ensure(w_progress_ >= 0.0 && w_excursion_ >= 0.0, "track cost weights must be nonnegative");
    penalty_.validate();
  }

  /// Sets the continuous arc length the next evaluation unwraps against
  /// (the controller's running progress).
  void set_reference_progress(double s) { reference_s_ = s; }

  const Track& track() const { return track_; }

  double evaluate(const std::vector<SimState>& states, const Matrix2Xd& u, Matrix6Xd* dl_dz,
                  Matrix2Xd* dl_du) const override {
    const Eigen::Index n = u.cols();
    if (dl_dz != nullptr) dl_dz->setZero(6, n + 1);
    if (dl_du != nullptr) dl_du->setZero(2, n);

    double l = 0.0;
    const TrackQuery q0 =
        project_to_track(track_, {states[0].pose.x, states[0].pose.y});
    double prev_s = unwrap_progress(track_, q0.s, reference_s_);
    const double s0 = prev_s;
    for (Eigen::Index i = 1; i <= n; ++i) {
      const Eigen::Vector2d p{states[i].pose.x, states[i].pose.y};
      const TrackQuery q = project_to_track(track_, p);
      const double s = unwrap_progress(track_, q.s, prev_s);
      prev_s = s;

      const double s_ref = s0 + target_speed_ * h_ * static_cast<double>(i);
      const double deficit = s_ref - s;
      if (deficit > 0.0) {
        l += w_progress_ * deficit;
        if (dl_dz != nullptr) dl_dz->block<2, 1>(0, i) -= w_progress_ * q.tangent;
      }

      const double over = std::abs(q.d) - track_.half_width;
      l += w_excursion_ * barrier(over);
      if (dl_dz != nullptr && over > 0.0) {
        const double sgn = q.d >= 0.0 ? 1.0 : -1.0;
        dl_dz->block<2, 1>(0, i) += w_excursion_ * barrier_deriv(over) * sgn * q.normal;
      }
    }
    l += penalty_.evaluate(u, dl_du);
    return l;
  }

 private:
  Track track_;
  double target_speed_;
  double h_;
  double w_progress_;
  double w_excursion_;
  ControlPenalty penalty_;
  double reference_s_ = 0.0;
};

struct MpcConfig {
  int horizon = 20;
  double rate_hz = 20.0;
  int iteration_budget = 6;
  double target_speed = 2.0;
  double progress_weight = 4.0;
  double excursion_weight = 60.0;
  ControlPenalty penalty;
  LineSearchSchedule schedule;
  bool latency_compensation = true;
  int cycle_cap = 4000;
  std::uint64_t seed = 0;  ///< recorded in telemetry artifacts

  void validate() const {
    ensure(horizon >= 1, "horizon must be >= 1");
    ensure(rate_hz > 0.0, "control rate must be > 0");
    ensure(iteration_budget >= 0 && cycle_cap >= 1, "invalid budget or cycle cap");
    penalty.validate();
    schedule.validate();
  }

  double period() const { return 1.0 / rate_hz; }

  static MpcConfig from_json(const nlohmann::json& j) {
    MpcConfig c;
    try {
      c.horizon = j.at("horizon").get<int>();
      c.rate_hz = j.at("rate_hz").get<double>();
      c.iteration_budget = j.at("iteration_budget").get<int>();
      c.target_speed = j.at("target_speed").get<double>();
      c.progress_weight = j.at("progress_weight").get<double>();
      c.excursion_weight = j.at("excursion_weight").get<double>();
      const auto& w = j.at("control_weights");
      c.penalty.w_mag = w.at("mag").get<double>();
      c.penalty.w_smooth = w.at("smooth").get<double>();
      c.penalty.w_limits = w.at("limits").get<double>();
      const auto& bounds = j.at("bounds");
      c.penalty.lower << bounds.at("lower")[0], bounds.at("lower")[1];
      c.penalty.upper << bounds.at("upper")[0], bounds.at("upper")[1];
      const auto& ls = j.at("line_search");
      c.schedule.count = ls.at("count").get<int>();
      c.schedule.min_scale = ls.at("min_scale").get<double>();
      c.schedule.max_scale = ls.at("max_scale").get<double>();
      c.latency_compensation = j.at("latency_compensation").get<bool>();
      c.cycle_cap = j.at("cycle_cap").get<int>();
      if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("mpc config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static MpcConfig from_json_file(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }
};

/// Receding-horizon controller: warm starts from the previous solution
/// shifted by one, optionally compensates the one-cycle latency by
/// predicting the state under the pending control, and reoptimizes with a
/// fixed per-cycle iteration budget.
class MpcController {
 public:
  MpcController(std::shared_ptr<const TransitionModel> model, Track track, MpcConfig config)
      : model_(std::move(model)), track_(std::move(track)), config_(config) {
    config_.validate();
    cost_ = std::make_shared<TrackCost>(track_, config_.target_speed, config_.period(),
                                        config_.progress_weight, config_.excursion_weight,
                                        config_.penalty);
    prev_sequence_ = Matrix2Xd::Zero(2, config_.horizon);
    pending_control_.setZero();
  }

  struct StepOutput {
    ControlInput command;
    int iterations = 0;
    double cost = 0.0;
    bool degraded = false;  ///< optimizer aborted; fell back to the warm start
    Matrix2Xd warm_start;   ///< the sequence optimization started from
    Matrix2Xd sequence;     ///< the retained (optimized) sequence
    Matrix2Xd first_gradient;
    double progress_s = 0.0;
    double offset_d = 0.0;
  };

  StepOutput step(const SimState& measured) {
    StepOutput out;
    const TrackQuery q = project_to_track(track_, {measured.pose.x, measured.pose.y});
    running_s_ = first_cycle_ ? q.s : unwrap_progress(track_, q.s, running_s_);
    out.progress_s = running_s_;
    out.offset_d = q.d;

    const SimState z0 =
        config_.latency_compensation ? model_->step(measured, pending_control_) : measured;

    // warm start: previous solution shifted left by one, zero appended
    Matrix2Xd warm = Matrix2Xd::Zero(2, config_.horizon);
    if (!first_cycle_ && config_.horizon > 1) {
      warm.leftCols(config_.horizon - 1) = prev_sequence_.rightCols(config_.horizon - 1);
    }
    out.warm_start = warm;
    first_cycle_ = false;

    cost_->set_reference_progress(running_s_);
    TrajOptProblem problem;
    problem.n = config_.horizon;
    problem.h = config_.period();
    problem.z0 = z0;
    problem.model = model_;
    problem.cost = cost_;
    problem.schedule = config_.schedule;
    problem.max_iterations = config_.iteration_budget;
    problem.tolerance = 1e-10;

    try {
      const TrajOptResult result = optimize(problem, warm);
      prev_sequence_ = result.u;
      out.iterations = result.iterations;
      out.cost = result.cost_history.back();
      out.first_gradient = result.first_gradient;
    } catch (const NumericError&) {
      prev_sequence_ = warm;
      out.degraded = true;
    }
    out.sequence = prev_sequence_;
    pending_control_ = prev_sequence_.col(0);
    out.command = ControlInput(pending_control_[0], pending_control_[1]);
    return out;
  }

  const Track& track() const { return track_; }
  double running_progress() const { return running_s_; }

 private:
  std::shared_ptr<const TransitionModel> model_;
  Track track_;
  MpcConfig config_;
  std::shared_ptr<TrackCost> cost_;
  Matrix2Xd prev_sequence_;
  Eigen::Vector2d pending_control_;
  double running_s_ = 0.0;
  bool first_cycle_ = true;
};

struct CycleRecord {
  int cycle = 0;
  double t = 0.0;
  SimState state;
  ControlInput applied;  ///< the command the plant ran during this cycle
  double s = 0.0;
  double d = 0.0;
  int opt_iters = 0;
  double opt_cost = 0.0;
  double cycle_ms = 0.0;  ///< optimizer wall time (not deterministic)
  bool degraded = false;
};

struct LapTelemetry {
  std::vector<CycleRecord> cycles;
  std::vector<double> lap_times;
  bool completed = false;
  double track_length = 0.0;
  double mean_forward_speed = 0.0;
  double max_abs_offset = 0.0;
  double over_budget_fraction = 0.0;  ///< cycles whose optimizer exceeded the period
  Matrix2Xd first_cycle_gradient;
  std::vector<Matrix2Xd> warm_starts;  ///< per cycle, for the shift-identity check
  std::vector<Matrix2Xd> sequences;    ///< per cycle retained optimal sequences
};

/// Lockstep closed loop against the simulator plant. The command computed
/// in cycle k takes effect in cycle k+1, mirroring an optimizer that runs
/// for one control period; the controller's latency compensation accounts
/// for exactly that shift.
inline LapTelemetry run_closed_loop(const Track& track, const MpcConfig& config,
                                    std::shared_ptr<const TransitionModel> model,
                                    const SimParams& plant_params, int laps,
                                    const SimState& start) {
  ensure(laps >= 1, "need at least one lap");
  config.validate();
  plant_params.validate();

  MpcController controller(model, track, config);
  LapTelemetry telemetry;
  telemetry.track_length = track.length;
  const double h = config.period();

  SimState state = start;
  ControlInput pending;  // command the plant applies this cycle
  double start_s = 0.0;
  double speed_sum = 0.0;
  int over_budget = 0;
  int next_lap = 1;

  for (int cycle = 0; cycle < config.cycle_cap; ++cycle) {
    const auto t0 = std::chrono::steady_clock::now();
    const MpcController::StepOutput out = controller.step(state);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (cycle == 0) {
      start_s = out.progress_s;
      telemetry.first_cycle_gradient = out.first_gradient;
    }
    telemetry.warm_starts.push_back(out.warm_start);
    telemetry.sequences.push_back(out.sequence);

    CycleRecord rec;
    rec.cycle = cycle;
    rec.t = cycle * h;
    rec.state = state;
    rec.applied = pending;
    rec.s = out.progress_s;
    rec.d = out.offset_d;
    rec.opt_iters = out.iterations;
    rec.opt_cost = out.cost;
    rec.cycle_ms = ms;
    rec.degraded = out.degraded;
    telemetry.cycles.push_back(rec);

    speed_sum += state.vel.vx;
    telemetry.max_abs_offset = std::max(telemetry.max_abs_offset, std::abs(out.offset_d));
    if (ms > 1e3 * h) ++over_budget;

    if (out.progress_s - start_s >= next_lap * track.length) {
      telemetry.lap_times.push_back(rec.t);
      if (next_lap == laps) {
        telemetry.completed = true;
        break;
      }
      ++next_lap;
    }

    state = step(state, pending, plant_params, h);
    pending = out.command;  // takes effect next cycle
  }

  telemetry.mean_forward_speed =
      telemetry.cycles.empty() ? 0.0 : speed_sum / static_cast<double>(telemetry.cycles.size());
  telemetry.over_budget_fraction =
      telemetry.cycles.empty() ? 0.0
                               : static_cast<double>(over_budget) /
                                     static_cast<double>(telemetry.cycles.size());
  return telemetry;
}

/// CSV schema:
/// `cycle,t,x,y,heading,vx,vy,omega,throttle,steer,s,d,opt_iters,opt_cost,cycle_ms`.
inline void write_telemetry_csv(const LapTelemetry& telemetry,
                                const std::filesystem::path& path) {
  std::string out = "cycle,t,x,y,heading,vx,vy,omega,throttle,steer,s,d,opt_iters,opt_cost,cycle_ms\n";
  for (const CycleRecord& r : telemetry.cycles) {
    out += std::to_string(r.cycle) + ',' + format_double(r.t) + ',' + format_double(r.state.pose.x) +
           ',' + format_double(r.state.pose.y) + ',' + format_double(r.state.pose.heading) + ',' +
           format_double(r.state.vel.vx) + ',' + format_double(r.state.vel.vy) + ',' +
           format_double(r.state.vel.omega) + ',' + format_double(r.applied.throttle) + ',' +
           format_double(r.applied.steer) + ',' + format_double(r.s) + ',' + format_double(r.d) +
           ',' + std::to_string(r.opt_iters) + ',' + format_double(r.opt_cost) + ',' +
           format_double(r.cycle_ms) + '\n';
  }
  write_text_file(path, out);
}

inline nlohmann::json lap_summary_json(const LapTelemetry& telemetry, int laps_requested) {
  std::vector<double> grad;
  for (Eigen::Index i = 0; i < telemetry.first_cycle_gradient.cols(); ++i) {
    grad.push_back(telemetry.first_cycle_gradient(0, i));
    grad.push_back(telemetry.first_cycle_gradient(1, i));
  }
  return {{"laps_requested", laps_requested},
          {"completed", telemetry.completed},
          {"cycles", telemetry.cycles.size()},
          {"track_length", telemetry.track_length},
          {"lap_times", telemetry.lap_times},
          {"mean_forward_speed", telemetry.mean_forward_speed},
          {"max_abs_lateral_offset", telemetry.max_abs_offset},
          {"over_budget_fraction", telemetry.over_budget_fraction},
          {"first_cycle_gradient", grad}};
}

/// Desk-scale oval: two straights joined by semicircles, centered on the
/// origin.
inline Track make_oval_track(double straight = 4.0, double radius = 1.5, double half_width = 0.4,
                             int arc_points = 24) {
  Track t;
  t.half_width = half_width;
  const double hx = straight / 2.0;
  t.centerline.emplace_back(-hx, -radius);
  t.centerline.emplace_back(0.0, -radius);
  t.centerline.emplace_back(hx, -radius);
  for (int i = 1; i < arc_points; ++i) {
    const double a = -kPi / 2.0 + kPi * static_cast<double>(i) / arc_points;
    t.centerline.emplace_back(hx + radius * std::cos(a), radius * std::sin(a));
  }
  t.centerline.emplace_back(hx, radius);
  t.centerline.emplace_back(0.0, radius);
  t.centerline.emplace_back(-hx, radius);
  for (int i = 1; i < arc_points; ++i) {
    const double a = kPi / 2.0 + kPi * static_cast<double>(i) / arc_points;
    t.centerline.emplace_back(-hx + radius * std::cos(a), radius * std::sin(a));
  }
  t.build();
  return t;
}

}  // namespace driftopt

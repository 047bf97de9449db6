#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftopt/common.hpp"
#include "driftopt/types.hpp"

namespace driftopt {

/// Parameters of the drift-capable planar car plant. The defaults give a
/// roughly 4 m/s top speed and drift onset under hard steering at speed;
/// they are configuration, not contract.
struct SimParams {
  double wheelbase = 0.25;            ///< front-to-rear axle distance [m]
  double drive_gain = 8.0;            ///< rear longitudinal accel per unit throttle [m/s^2]
  double steer_gain = 0.35;           ///< max front wheel angle [rad]
  double static_accel_limit = 6.0;    ///< per-wheel grip before slip [m/s^2]
  double dynamic_accel_limit = 3.5;   ///< per-wheel grip while slipping [m/s^2]
  double drag_coeff = 0.75;           ///< linear velocity damping [1/s]
  double dt_sim = 1.0 / 240.0;        ///< inner integration step [s]

  void validate() const {
    ensure(wheelbase > 0.0, "wheelbase must be > 0");
    ensure(dt_sim > 0.0, "dt_sim must be > 0");
    ensure(dynamic_accel_limit > 0.0 && dynamic_accel_limit < static_accel_limit,
           "need 0 < dynamic_accel_limit < static_accel_limit");
    ensure(steer_gain > 0.0 && steer_gain < kPi / 2.0, "steer_gain must be in (0, pi/2)");
    ensure(drag_coeff >= 0.0, "drag_coeff must be >= 0");
  }

  static SimParams from_json(const nlohmann::json& j) {
    SimParams p;
    try {
      p.wheelbase = j.at("wheelbase").get<double>();
      p.drive_gain = j.at("drive_gain").get<double>();
      p.steer_gain = j.at("steer_gain").get<double>();
      p.static_accel_limit = j.at("static_accel_limit").get<double>();
      p.dynamic_accel_limit = j.at("dynamic_accel_limit").get<double>();
      p.drag_coeff = j.at("drag_coeff").get<double>();
      p.dt_sim = j.at("dt_sim").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("sim params: ") + e.what());
    }
    p.validate();
    return p;
  }

  static SimParams from_json_file(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }

  nlohmann::json to_json() const {
    return {{"wheelbase", wheelbase},
            {"drive_gain", drive_gain},
            {"steer_gain", steer_gain},
            {"static_accel_limit", static_accel_limit},
            {"dynamic_accel_limit", dynamic_accel_limit},
            {"drag_coeff", drag_coeff},
            {"dt_sim", dt_sim}};
  }
};

/// Per-wheel acceleration requests of the bicycle abstraction, expressed in
/// each wheel's own frame (lateral = along the wheel's left axis).
struct WheelTargets {
  double front_lateral = 0.0;
  double rear_lateral = 0.0;
  double rear_longitudinal = 0.0;
};

/// Acceleration vector of one wheel in its own frame.
struct WheelAccel {
  double longitudinal = 0.0;
  double lateral = 0.0;

  double norm() const { return std::hypot(longitudinal, lateral); }
};

struct FrictionResult {
  WheelAccel realized;
  bool slipped = false;
};

/// Accelerations each wheel asks for: the front wheel cancels its velocity
/// component across the steered rolling direction within one dt_sim, the
/// rear wheel cancels its sideways velocity, and throttle drives the rear
/// wheel longitudinally.
inline WheelTargets wheel_targets(const SimState& state, const ControlInput& control,
                                  const SimParams& params) {
  const double delta = control.steer * params.steer_gain;
  const double half = 0.5 * params.wheelbase;
  const double front_vx = state.vel.vx;
  const double front_vy = state.vel.vy + state.vel.omega * half;
  const double rear_vy = state.vel.vy - state.vel.omega * half;

  // velocity component along the steered wheel's left axis (-sin d, cos d)
  const double front_across = -front_vx * std::sin(delta) + front_vy * std::cos(delta);

  WheelTargets t;
  t.front_lateral = -front_across / params.dt_sim;
  t.rear_lateral = -rear_vy / params.dt_sim;
  t.rear_longitudinal = control.throttle * params.drive_gain;
  return t;
}

/// Caps a wheel's requested acceleration: within the static limit it is
/// realized unchanged (boundary inclusive); beyond it the wheel slips and
/// the request is rescaled to the dynamic limit, direction preserved.
inline FrictionResult apply_friction(const WheelAccel& requested, const SimParams& params) {
  const double norm = requested.norm();
  if (norm <= params.static_accel_limit) return {requested, false};
  const double scale = params.dynamic_accel_limit / norm;
  return {{requested.longitudinal * scale, requested.lateral * scale}, true};
}

/// Slip activity over an integration interval.
struct StepTelemetry {
  bool slip_front = false;
  bool slip_rear = false;
};

namespace detail {

/// One dt_sim update. The body is modeled as two point masses of 1/2 at the
/// axles (total mass 1, yaw inertia (wheelbase/2)^2), so a realized wheel
/// acceleration maps one-to-one onto that wheel's velocity change and the
/// no-slip corrections stay stable.
inline SimState sim_inner_step(const SimState& state, const ControlInput& control,
                               const SimParams& params, StepTelemetry* telemetry) {
  const double dt = params.dt_sim;
  const double delta = control.steer * params.steer_gain;

  const WheelTargets targets = wheel_targets(state, control, params);
  const FrictionResult front = apply_friction({0.0, targets.front_lateral}, params);
  const FrictionResult rear =
      apply_friction({targets.rear_longitudinal, targets.rear_lateral}, params);
  if (telemetry != nullptr) {
    telemetry->slip_front = telemetry->slip_front || front.slipped;
    telemetry->slip_rear = telemetry->slip_rear || rear.slipped;
  }

  // wheel-frame accelerations to body frame
  const double sd = std::sin(delta);
  const double cd = std::cos(delta);
  const double af_x = -front.realized.lateral * sd;
  const double af_y = front.realized.lateral * cd;
  const double ar_x = rear.realized.longitudinal;
  const double ar_y = rear.realized.lateral;

  const double acc_x = 0.5 * (af_x + ar_x) - params.drag_coeff * state.vel.vx;
  const double acc_y = 0.5 * (af_y + ar_y) - params.drag_coeff * state.vel.vy;
  const double acc_yaw = (af_y - ar_y) / params.wheelbase - params.drag_coeff * state.vel.omega;

  // semi-implicit: velocity first, then pose with the updated velocity
  BodyVelocity vel(state.vel.vx + dt * acc_x, state.vel.vy + dt * acc_y,
                   state.vel.omega + dt * acc_yaw);
  const double c = std::cos(state.pose.heading);
  const double s = std::sin(state.pose.heading);
  CarPose pose(state.pose.x + dt * (c * vel.vx - s * vel.vy),
               state.pose.y + dt * (s * vel.vx + c * vel.vy),
               state.pose.heading + dt * vel.omega);
  return {pose, vel};
}

inline int inner_step_count(double h, const SimParams& params) {
  ensure(h > 0.0, "step length must be > 0");
  const double ratio = h / params.dt_sim;
  const int k = static_cast<int>(std::llround(ratio));
  ensure(k >= 1 && std::abs(h - k * params.dt_sim) <= 1e-9 * h,
         "step length must be an integer multiple of dt_sim");
  return k;
}

}  // namespace detail

/// Advances the state by h (an integer multiple of dt_sim) holding the
/// control fixed.
inline SimState step(const SimState& state, const ControlInput& control, const SimParams& params,
                     double h, StepTelemetry* telemetry = nullptr) {
  const int k = detail::inner_step_count(h, params);
  SimState cur = state;
  for (int i = 0; i < k; ++i) cur = detail::sim_inner_step(cur, control, params, telemetry);
  return cur;
}

/// Rolls the plant out under a control sequence; returns n+1 states
/// including x0. telemetry, when given, receives one entry per step.
inline std::vector<SimState> rollout_sim(const SimState& x0, std::span<const ControlInput> controls,
                                         const SimParams& params, double h,
                                         std::vector<StepTelemetry>* telemetry = nullptr) {
  ensure(!controls.empty(), "rollout needs at least one control");
  std::vector<SimState> states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  for (const ControlInput& u : controls) {
    StepTelemetry t;
    states.push_back(step(states.back(), u, params, h, &t));
    if (telemetry != nullptr) telemetry->push_back(t);
  }
  return states;
}

/// One timestamped sample of a driving log.
struct LogRecord {
  double t = 0.0;
  CarPose pose;
  ControlInput control;   ///< command held during [t, t+h)
  bool slip_front = false;  ///< any slip during [t, t+h)
  bool slip_rear = false;
};

/// Excitation and arena settings for synthetic data collection.
struct CollectConfig {
  double duration = 960.0;  ///< seconds of driving
  double h = 0.05;          ///< record period [s]
  std::uint64_t seed = 0;
  double arena_half_x = 5.0;   ///< arena is 2*half_x by 2*half_y meters
  double arena_half_y = 2.5;
  // Ornstein-Uhlenbeck excitation: smoothed random walk per control axis,
  // biased to visit both traction and slip regimes.
  double throttle_mean = 0.35;
  double throttle_pull = 1.2;
  double throttle_sigma = 1.2;
  double steer_pull = 0.9;
  double steer_sigma = 1.8;

  void validate() const {
    ensure(duration > 0.0, "duration must be > 0");
    ensure(h > 0.0, "record period must be > 0");
    ensure(arena_half_x > 0.0 && arena_half_y > 0.0, "arena extents must be > 0");
  }
};

namespace detail {

/// Mirrors the car across an arena wall it just crossed; the world is
/// reflected, so forward speed is preserved while lateral velocity and yaw
/// rate change sign.
inline void reflect_into_arena(SimState& s, double half_x, double half_y) {
  if (s.pose.x > half_x || s.pose.x < -half_x) {
    const double wall = s.pose.x > half_x ? half_x : -half_x;
    s.pose.x = 2.0 * wall - s.pose.x;
    s.pose = CarPose(s.pose.x, s.pose.y, kPi - s.pose.heading);
    s.vel.vy = -s.vel.vy;
    s.vel.omega = -s.vel.omega;
  }
  if (s.pose.y > half_y || s.pose.y < -half_y) {
    const double wall = s.pose.y > half_y ? half_y : -half_y;
    s.pose.y = 2.0 * wall - s.pose.y;
    s.pose = CarPose(s.pose.x, s.pose.y, -s.pose.heading);
    s.vel.vy = -s.vel.vy;
    s.vel.omega = -s.vel.omega;
  }
}

}  // namespace detail

/// Drives the simulated car with a seeded smoothed-random excitation policy
/// inside the arena and emits records at 1/h Hz, endpoints inclusive.
/// Deterministic per seed.
inline std::vector<LogRecord> collect_dataset(const SimParams& params, const CollectConfig& cfg) {
  params.validate();
  cfg.validate();
  const int steps = static_cast<int>(std::llround(cfg.duration / cfg.h));
  Rng rng(cfg.seed);
  SimState state;
  double throttle = 0.0;
  double steer = 0.0;
  const double sqrt_h = std::sqrt(cfg.h);

  std::vector<LogRecord> records;
  records.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    throttle += cfg.throttle_pull * (cfg.throttle_mean - throttle) * cfg.h +
                cfg.throttle_sigma * sqrt_h * rng.normal();
    steer += cfg.steer_pull * (0.0 - steer) * cfg.h + cfg.steer_sigma * sqrt_h * rng.normal();
    throttle = std::clamp(throttle, -1.0, 1.0);
    steer = std::clamp(steer, -1.0, 1.0);
    const ControlInput u(throttle, steer);

    LogRecord rec;
    rec.t = k * cfg.h;
    rec.pose = state.pose;
    rec.control = u;
    if (k < steps) {
      StepTelemetry telem;
      state = step(state, u, params, cfg.h, &telem);
      detail::reflect_into_arena(state, cfg.arena_half_x, cfg.arena_half_y);
      rec.slip_front = telem.slip_front;
      rec.slip_rear = telem.slip_rear;
    }
    records.push_back(rec);
  }
  return records;
}

/// CSV schema: `t,x,y,heading,throttle,steer,slip_front,slip_rear`, one
/// header row, full-precision floats.
inline void write_pose_log_csv(const std::filesystem::path& path,
                               std::span<const LogRecord> records) {
  std::string out = "t,x,y,heading,throttle,steer,slip_front,slip_rear\n";
  for (const LogRecord& r : records) {
    out += format_double(r.t) + ',' + format_double(r.pose.x) + ',' + format_double(r.pose.y) +
           ',' + format_double(r.pose.heading) + ',' + format_double(r.control.throttle) + ',' +
           format_double(r.control.steer) + ',' + (r.slip_front ? "1" : "0") + ',' +
           (r.slip_rear ? "1" : "0") + '\n';
  }
  write_text_file(path, out);
}

inline std::vector<LogRecord> read_pose_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  ensure(in.good(), "cannot open pose log: " + path.string());
  std::string line;
  std::getline(in, line);
  ensure(line == "t,x,y,heading,throttle,steer,slip_front,slip_rear",
         "unexpected pose log header in " + path.string());
  std::vector<LogRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 8> f{};
    std::size_t pos = 0;
    for (int i = 0; i < 8; ++i) {
      const std::size_t next = line.find(',', pos);
      f[i] = std::stod(line.substr(pos, next - pos));
      pos = next == std::string::npos ? line.size() : next + 1;
    }
    LogRecord r;
    r.t = f[0];
    r.pose = CarPose(f[1], f[2], f[3]);
    r.control = ControlInput(f[4], f[5]);
    r.slip_front = f[6] != 0.0;
    r.slip_rear = f[7] != 0.0;
    records.push_back(r);
  }
  return records;
}

}  // namespace driftopt

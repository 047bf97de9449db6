#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "driftopt/dataset.hpp"
#include "driftopt/sim.hpp"
#include "oracle_utils.hpp"

namespace driftopt {
namespace {

SimParams test_params() {
  SimParams p;
  p.validate();
  return p;
}

TEST(SimParams, InvariantsRejectBadValues) {
  SimParams p = test_params();
  p.dynamic_accel_limit = p.static_accel_limit;  // slipping must reduce grip
  EXPECT_THROW(p.validate(), ValidationError);
  p = test_params();
  p.wheelbase = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = test_params();
  p.steer_gain = 2.0;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(WheelTargets, StationaryZeroControlIsAllZero) {
  const SimParams p = test_params();
  const WheelTargets t = wheel_targets(SimState{}, ControlInput{}, p);
  EXPECT_EQ(t.front_lateral, 0.0);
  EXPECT_EQ(t.rear_lateral, 0.0);
  EXPECT_EQ(t.rear_longitudinal, 0.0);
}

TEST(WheelTargets, StraightRollingNeedsNoCorrection) {
  const SimParams p = test_params();
  const SimState s{CarPose{}, BodyVelocity{1.0, 0.0, 0.0}};
  const WheelTargets t = wheel_targets(s, ControlInput{}, p);
  EXPECT_EQ(t.front_lateral, 0.0);
  EXPECT_EQ(t.rear_lateral, 0.0);
}

TEST(WheelTargets, FullSteerMatchesProjectionOracle) {
  const SimParams p = test_params();
  const SimState s{CarPose{}, BodyVelocity{2.0, 0.0, 0.0}};
  const WheelTargets t = wheel_targets(s, ControlInput{0.0, 1.0}, p);
  // independent 2-D projection: front wheel velocity (2, 0), steered left
  // axis (-sin d, cos d); the request cancels that component within dt
  const double delta = p.steer_gain;
  const double across = 2.0 * -std::sin(delta) + 0.0 * std::cos(delta);
  EXPECT_NEAR(t.front_lateral, -across / p.dt_sim, 1e-12);
  EXPECT_EQ(t.rear_lateral, 0.0);
}

TEST(ApplyFriction, ZeroRequestDoesNotSlip) {
  const FrictionResult r = apply_friction({0.0, 0.0}, test_params());
  EXPECT_FALSE(r.slipped);
  EXPECT_EQ(r.realized.norm(), 0.0);
}

TEST(ApplyFriction, StaticBoundaryIsInclusive) {
  const SimParams p = test_params();
  const FrictionResult r = apply_friction({p.static_accel_limit, 0.0}, p);
  EXPECT_FALSE(r.slipped);
  EXPECT_EQ(r.realized.longitudinal, p.static_accel_limit);
}

TEST(ApplyFriction, OverLimitRescalesToDynamic) {
  SimParams p = test_params();
  p.static_accel_limit = 5.0;
  p.dynamic_accel_limit = 3.0;
  const FrictionResult r = apply_friction({6.0, 8.0}, p);
  EXPECT_TRUE(r.slipped);
  EXPECT_NEAR(r.realized.longitudinal, 1.8, 1e-12);
  EXPECT_NEAR(r.realized.lateral, 2.4, 1e-12);
}

TEST(ApplyFriction, CapHoldsOnRandomRequests) {
  const SimParams p = test_params();
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const WheelAccel req{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)};
    const FrictionResult r = apply_friction(req, p);
    EXPECT_LE(r.realized.norm(), p.static_accel_limit + 1e-12);
    if (r.slipped) {
      EXPECT_NEAR(r.realized.norm(), p.dynamic_accel_limit, 1e-12);
    } else {
      EXPECT_EQ(r.realized.longitudinal, req.longitudinal);
      EXPECT_EQ(r.realized.lateral, req.lateral);
    }
  }
}

TEST(Step, StationaryIsAFixedPoint) {
  const SimParams p = test_params();
  const SimState out = step(SimState{}, ControlInput{}, p, 0.05);
  EXPECT_EQ(out.pose.x, 0.0);
  EXPECT_EQ(out.pose.y, 0.0);
  EXPECT_EQ(out.pose.heading, 0.0);
  EXPECT_EQ(out.vel.vx, 0.0);
}

TEST(Step, CoastingAdvancesExactly) {
  SimParams p = test_params();
  p.drag_coeff = 0.0;
  const SimState s{CarPose{}, BodyVelocity{1.0, 0.0, 0.0}};
  const SimState out = step(s, ControlInput{}, p, 0.05);
  EXPECT_NEAR(out.pose.x, 0.05, 1e-12);
  EXPECT_EQ(out.pose.y, 0.0);
  EXPECT_EQ(out.pose.heading, 0.0);
}

TEST(Step, RejectsNonMultipleStep) {
  const SimParams p = test_params();
  EXPECT_THROW(step(SimState{}, ControlInput{}, p, 0.05 + 0.3 * p.dt_sim), ValidationError);
  EXPECT_THROW(step(SimState{}, ControlInput{}, p, -0.05), ValidationError);
}

TEST(Step, FullSteerHighSpeedEntryDrifts) {
  const SimParams p = test_params();
  SimState s{CarPose{}, BodyVelocity{3.5, 0.0, 0.0}};
  StepTelemetry telem;
  s = step(s, ControlInput{0.3, 1.0}, p, 0.25, &telem);
  EXPECT_TRUE(telem.slip_front || telem.slip_rear);
  EXPECT_GT(std::abs(s.vel.vy), 0.1);
  const double kinematic_rate = s.vel.vx * std::tan(p.steer_gain) / p.wheelbase;
  EXPECT_LT(std::abs(s.vel.omega), std::abs(kinematic_rate));
}

TEST(Rollout, RestStaysAtRest) {
  const SimParams p = test_params();
  const std::vector<ControlInput> controls(10, ControlInput{});
  const std::vector<SimState> states = rollout_sim(SimState{}, controls, p, 0.05);
  ASSERT_EQ(states.size(), 11u);
  for (const SimState& z : states) {
    EXPECT_EQ(z.pose.x, 0.0);
    EXPECT_EQ(z.vel.vx, 0.0);
  }
}

TEST(Rollout, MatchesSequentialSteps) {
  const SimParams p = test_params();
  Rng rng(3);
  std::vector<ControlInput> controls;
  for (int i = 0; i < 60; ++i) {
    controls.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  }
  const SimState x0{CarPose{0.3, -0.2, 0.4}, BodyVelocity{0.5, 0.0, 0.1}};
  const std::vector<SimState> states = rollout_sim(x0, controls, p, 0.05);
  ASSERT_EQ(states.size(), 61u);
  SimState cur = x0;
  for (int i = 0; i < 60; ++i) {
    cur = step(cur, controls[i], p, 0.05);
    EXPECT_EQ(states[i + 1].pose.x, cur.pose.x);
    EXPECT_EQ(states[i + 1].pose.y, cur.pose.y);
    EXPECT_EQ(states[i + 1].vel.omega, cur.vel.omega);
  }
  EXPECT_THROW(rollout_sim(x0, {}, p, 0.05), ValidationError);
}

TEST(Rollout, SingleControlHasLengthTwo) {
  const SimParams p = test_params();
  const std::vector<ControlInput> controls{ControlInput{0.5, 0.0}};
  const std::vector<SimState> states = rollout_sim(SimState{}, controls, p, 0.05);
  ASSERT_EQ(states.size(), 2u);
  const SimState expect = step(SimState{}, controls[0], p, 0.05);
  EXPECT_EQ(states[1].pose.x, expect.pose.x);
}

TEST(Sim, NoSlipRegimeMatchesKinematicBicycle) {
  const SimParams p = test_params();
  struct Case {
    double steer_angle;
    double v0;
  };
  for (const Case c : {Case{0.0, 1.0}, Case{0.1, 1.0}}) {
    const double steer_input = c.steer_angle / p.steer_gain;
    const double omega0 = c.v0 * std::tan(c.steer_angle) / p.wheelbase;
    SimState sim_state{CarPose{}, BodyVelocity{c.v0, omega0 * p.wheelbase / 2.0, omega0}};
    testing::KinematicBicycleState oracle{0.0, 0.0, 0.0, c.v0};

    int inner_steps = 0;
    for (int k = 1; k <= 20; ++k) {
      StepTelemetry telem;
      sim_state = step(sim_state, ControlInput{0.0, steer_input}, p, 0.05, &telem);
      oracle = testing::kinematic_bicycle_step(oracle, ControlInput{0.0, steer_input}, p, 0.05);
      inner_steps += 12;
      EXPECT_FALSE(telem.slip_front || telem.slip_rear);
      const double err = std::hypot(sim_state.pose.x - oracle.x, sim_state.pose.y - oracle.y);
      EXPECT_LE(err, 10.0 * p.dt_sim * c.v0 * inner_steps);
    }
  }
}

TEST(Sim, PoseInvarianceUnderRigidTransform) {
  const SimParams p = test_params();
  Rng rng(11);
  std::vector<ControlInput> controls;
  for (int i = 0; i < 60; ++i) {
    controls.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  }
  const SimState x0{CarPose{0.0, 0.0, 0.2}, BodyVelocity{1.0, -0.1, 0.3}};
  const double phi = 1.1;
  const double tx = 3.0, ty = -2.0;
  const SimState x0t{CarPose{tx + std::cos(phi) * x0.pose.x - std::sin(phi) * x0.pose.y,
                             ty + std::sin(phi) * x0.pose.x + std::cos(phi) * x0.pose.y,
                             x0.pose.heading + phi},
                     x0.vel};
  const std::vector<SimState> a = rollout_sim(x0, controls, p, 0.05);
  const std::vector<SimState> b = rollout_sim(x0t, controls, p, 0.05);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ex = tx + std::cos(phi) * a[i].pose.x - std::sin(phi) * a[i].pose.y;
    const double ey = ty + std::sin(phi) * a[i].pose.x + std::cos(phi) * a[i].pose.y;
    EXPECT_NEAR(b[i].pose.x, ex, 1e-9);
    EXPECT_NEAR(b[i].pose.y, ey, 1e-9);
    EXPECT_NEAR(wrap_angle_diff(b[i].pose.heading, a[i].pose.heading + phi), 0.0, 1e-9);
    EXPECT_NEAR(b[i].vel.vx, a[i].vel.vx, 1e-9);
    EXPECT_NEAR(b[i].vel.vy, a[i].vel.vy, 1e-9);
  }
}

TEST(Sim, SpeedNonIncreasingWhenCoasting) {
  const SimParams p = test_params();
  // enter a drifty state, then coast
  SimState s{CarPose{}, BodyVelocity{}};
  for (int i = 0; i < 20; ++i) s = step(s, ControlInput{1.0, 0.8}, p, 0.05);
  double speed = std::hypot(s.vel.vx, s.vel.vy);
  for (int i = 0; i < 60; ++i) {
    s = step(s, ControlInput{0.0, 0.8}, p, 0.05);
    const double next = std::hypot(s.vel.vx, s.vel.vy);
    EXPECT_LE(next, speed + 1e-12);
    speed = next;
  }
}

TEST(CollectDataset, RecordCountIsInclusive) {
  CollectConfig cfg;
  cfg.duration = 1.0;
  cfg.h = 0.05;
  cfg.seed = 1;
  const std::vector<LogRecord> records = collect_dataset(test_params(), cfg);
  EXPECT_EQ(records.size(), 21u);
  EXPECT_DOUBLE_EQ(records.back().t, 1.0);
}

TEST(CollectDataset, DeterministicPerSeed) {
  CollectConfig cfg;
  cfg.duration = 5.0;
  cfg.seed = 42;
  const std::vector<LogRecord> a = collect_dataset(test_params(), cfg);
  const std::vector<LogRecord> b = collect_dataset(test_params(), cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pose.x, b[i].pose.x);
    EXPECT_EQ(a[i].pose.y, b[i].pose.y);
    EXPECT_EQ(a[i].control.throttle, b[i].control.throttle);
  }
}

TEST(CollectDataset, FifteenMinutesCoversBothRegimes) {
  CollectConfig cfg;
  cfg.duration = 900.0;
  cfg.seed = 5;
  const std::vector<LogRecord> records = collect_dataset(test_params(), cfg);
  EXPECT_EQ(records.size(), 18001u);
  int slip = 0;
  int grip = 0;
  for (const LogRecord& r : records) {
    if (r.slip_front || r.slip_rear) {
      ++slip;
    } else {
      ++grip;
    }
    EXPECT_LE(std::abs(r.pose.x), cfg.arena_half_x + 1e-9);
    EXPECT_LE(std::abs(r.pose.y), cfg.arena_half_y + 1e-9);
  }
  EXPECT_GT(slip, 0);
  EXPECT_GT(grip, 0);
}

TEST(CollectDataset, RejectsZeroDuration) {
  CollectConfig cfg;
  cfg.duration = 0.0;
  EXPECT_THROW(collect_dataset(test_params(), cfg), ValidationError);
}

TEST(PoseLogCsv, RoundTripsExactly) {
  CollectConfig cfg;
  cfg.duration = 2.0;
  cfg.seed = 9;
  const std::vector<LogRecord> records = collect_dataset(test_params(), cfg);
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "driftopt_sim_test_log.csv";
  write_pose_log_csv(path, records);
  const std::vector<LogRecord> loaded = read_pose_log_csv(path);
  ASSERT_EQ(loaded.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(loaded[i].t, records[i].t);
    EXPECT_EQ(loaded[i].pose.x, records[i].pose.x);
    EXPECT_EQ(loaded[i].pose.heading, records[i].pose.heading);
    EXPECT_EQ(loaded[i].control.steer, records[i].control.steer);
    EXPECT_EQ(loaded[i].slip_front, records[i].slip_front);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace driftopt

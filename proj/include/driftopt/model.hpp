#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "driftopt/common.hpp"
#include "driftopt/mlp.hpp"
#include "driftopt/sim.hpp"
#include "driftopt/types.hpp"

namespace driftopt {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix62d = Eigen::Matrix<double, 6, 2>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Matrix2Xd = Eigen::Matrix<double, 2, Eigen::Dynamic>;

/// One-step state transition used by trajectory rollouts: advances the full
/// (pose, velocity) state by a fixed period h under a raw (unclamped)
/// control. Implementations must be pure functions of their arguments so
/// that independent candidates can be evaluated in any order, or in
/// lockstep batches, with identical results.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;

  virtual double h() const = 0;

  virtual SimState step(const SimState& z, const Eigen::Vector2d& u) const = 0;

  /// d step / d state (6x6) and d step / d control (6x2).
  virtual void jacobians(const SimState& z, const Eigen::Vector2d& u, Matrix6d& a,
                         Matrix62d& b) const = 0;

  /// Lockstep batch step, one independent candidate per column. The default
  /// loops over step(); models with batched arithmetic override it.
  virtual void step_batch(const Matrix6Xd& z, const Matrix2Xd& u, Matrix6Xd& out) const {
    out.resize(6, z.cols());
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      out.col(k) = step(SimState::from_vec(z.col(k)), u.col(k)).vec();
    }
  }
};

namespace detail {

/// Central-difference Jacobians of an arbitrary transition step. The eight
/// probe pairs are independent and each writes its own column, so they may
/// run in parallel with results identical to a sequential loop.
inline void fd_jacobians(const TransitionModel& model, const SimState& z,
                         const Eigen::Vector2d& u, double delta, Matrix6d& a, Matrix62d& b) {
  Vector6d zv = z.vec();
  parallel::for_each(8, [&](std::size_t probe) {
    if (probe < 6) {
      const int i = static_cast<int>(probe);
      Vector6d hi = zv, lo = zv;
      hi[i] += delta;
      lo[i] -= delta;
      a.col(i) = (model.step(SimState::from_vec(hi), u).vec() -
                  model.step(SimState::from_vec(lo), u).vec()) /
                 (2.0 * delta);
    } else {
      const int i = static_cast<int>(probe - 6);
      Eigen::Vector2d hi = u, lo = u;
      hi[i] += delta;
      lo[i] -= delta;
      b.col(i) = (model.step(z, hi).vec() - model.step(z, lo).vec()) / (2.0 * delta);
    }
  });
  // the heading row of a raw difference can straddle the +-pi seam
  for (int i = 0; i < 6; ++i) {
    if (std::abs(a(2, i)) > kPi / delta * 0.5) {
      Vector6d hi = zv, lo = zv;
      hi[i] += delta;
      lo[i] -= delta;
      const double dh = wrap_angle_diff(model.step(SimState::from_vec(hi), u).pose.heading,
                                        model.step(SimState::from_vec(lo), u).pose.heading);
      a(2, i) = dh / (2.0 * delta);
    }
  }
  for (int i = 0; i < 2; ++i) {
    if (std::abs(b(2, i)) > kPi / delta * 0.5) {
      Eigen::Vector2d hi = u, lo = u;
      hi[i] += delta;
      lo[i] -= delta;
      const double dh = wrap_angle_diff(model.step(z, hi).pose.heading,
                                        model.step(z, lo).pose.heading);
      b(2, i) = dh / (2.0 * delta);
    }
  }
}

}  // namespace detail

/// Neural transition: the network predicts the next local velocity and the
/// pose advances by the rotated velocity, x_{i+1} = x_i + h R(heading_i) v_{i+1}.
class LearnedTransition : public TransitionModel {
 public:
  LearnedTransition(MlpModel model, double step_h) : model_(std::move(model)), h_(step_h) {
    ensure(h_ > 0.0, "transition period must be > 0");
  }

  double h() const override { return h_; }
  const MlpModel& model() const { return model_; }

  SimState step(const SimState& z, const Eigen::Vector2d& u) const override {
    Eigen::Matrix<double, kMlpInputs, 1> in;
    in << z.vel.vx, z.vel.vy, z.vel.omega, u[0], u[1];
    const Eigen::Vector3d v_next = mlp_forward(model_, in);
    return compose(z.pose, v_next, h_);
  }

  void step_batch(const Matrix6Xd& z, const Matrix2Xd& u, Matrix6Xd& out) const override {
    Eigen::Matrix<double, kMlpInputs, Eigen::Dynamic> in(kMlpInputs, z.cols());
    in.topRows<3>() = z.bottomRows<3>();
    in.bottomRows<2>() = u;
    const Eigen::Matrix3Xd v_next = mlp_forward_batch(model_, in);
    out.resize(6, z.cols());
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      out.col(k) =
          compose(CarPose(z(0, k), z(1, k), z(2, k)), v_next.col(k), h_).vec();
    }
  }

  /// Analytic blocks assembled from the network Jacobian, the rotation
  /// R(heading_i), and the h-scaled chain terms including dR/dheading.
  void jacobians(const SimState& z, const Eigen::Vector2d& u, Matrix6d& a,
                 Matrix62d& b) const override {
    Eigen::Matrix<double, kMlpInputs, 1> in;
    in << z.vel.vx, z.vel.vy, z.vel.omega, u[0], u[1];
    const Eigen::Vector3d v_next = mlp_forward(model_, in);
    const Eigen::Matrix<double, 3, 5> jm = mlp_input_jacobian(model_, in);
    const Eigen::Matrix3d jv = jm.leftCols<3>();   // d v_next / d v
    const Eigen::Matrix<double, 3, 2> ju = jm.rightCols<2>();  // d v_next / d u

    const double c = std::cos(z.pose.heading);
    const double s = std::sin(z.pose.heading);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    Eigen::Matrix2d drot;  // dR/dheading
    drot << -s, -c, c, -s;

    a.setZero();
    a.block<2, 2>(0, 0).setIdentity();
    a.block<2, 1>(0, 2) = h_ * drot * v_next.head<2>();
    a.block<2, 3>(0, 3) = h_ * rot * jv.topRows<2>();
    a(2, 2) = 1.0;
    a.block<1, 3>(2, 3) = h_ * jv.row(2);
    a.block<3, 3>(3, 3) = jv;

    b.setZero();
    b.block<2, 2>(0, 0) = h_ * rot * ju.topRows<2>();
    b.block<1, 2>(2, 0) = h_ * ju.row(2);
    b.block<3, 2>(3, 0) = ju;
  }

  static SimState compose(const CarPose& pose, const Eigen::Vector3d& v_next, double h) {
    const Eigen::Vector3d global = body_to_global(pose.heading, {v_next[0], v_next[1], v_next[2]});
    return {CarPose(pose.x + h * global[0], pose.y + h * global[1],
                    pose.heading + h * v_next[2]),
            BodyVelocity(v_next[0], v_next[1], v_next[2])};
  }

 private:
  MlpModel model_;
  double h_;
};

/// The simulator wrapped as an oracle transition; its rollouts coincide
/// exactly with plant rollouts. Controls are clamped like the plant clamps
/// them; Jacobians come from central differences.
class SimPlantTransition : public TransitionModel {
 public:
  SimPlantTransition(const SimParams& params, double step_h, double fd_delta = 1e-6)
      : params_(params), h_(step_h), fd_delta_(fd_delta) {
    params_.validate();
    detail::inner_step_count(h_, params_);
  }

  double h() const override { return h_; }

  SimState step(const SimState& z, const Eigen::Vector2d& u) const override {
    return driftopt::step(z, ControlInput(u[0], u[1]), params_, h_);
  }

  void jacobians(const SimState& z, const Eigen::Vector2d& u, Matrix6d& a,
                 Matrix62d& b) const override {
    detail::fd_jacobians(*this, z, u, fd_delta_, a, b);
  }

 private:
  SimParams params_;
  double h_;
  double fd_delta_;
};

/// Degenerate baseline: the next velocity equals the current one.
class ConstantVelocityTransition : public TransitionModel {
 public:
  explicit ConstantVelocityTransition(double step_h) : h_(step_h) {}

  double h() const override { return h_; }

  SimState step(const SimState& z, const Eigen::Vector2d&) const override {
    return LearnedTransition::compose(z.pose, z.vel.vec(), h_);
  }

  void jacobians(const SimState& z, const Eigen::Vector2d& u, Matrix6d& a,
                 Matrix62d& b) const override {
    detail::fd_jacobians(*this, z, u, 1e-6, a, b);
  }

 private:
  double h_;
};

/// Replaces a model's analytic Jacobians with parallel central differences;
/// mirrors the finite-difference mode used for the online experiments and
/// serves as a cross-check of the analytic path.
class FiniteDifferenceTransition : public TransitionModel {
 public:
  FiniteDifferenceTransition(std::shared_ptr<const TransitionModel> inner, double delta = 1e-6)
      : inner_(std::move(inner)), delta_(delta) {}

  double h() const override { return inner_->h(); }

  SimState step(const SimState& z, const Eigen::Vector2d& u) const override {
    return inner_->step(z, u);
  }

  void step_batch(const Matrix6Xd& z, const Matrix2Xd& u, Matrix6Xd& out) const override {
    inner_->step_batch(z, u, out);
  }

  void jacobians(const SimState& z, const Eigen::Vector2d& u, Matrix6d& a,
                 Matrix62d& b) const override {
    detail::fd_jacobians(*inner_, z, u, delta_, a, b);
  }

 private:
  std::shared_ptr<const TransitionModel> inner_;
  double delta_;
};

/// Rolls a model out; returns n+1 states including z0.
inline std::vector<SimState> rollout_model(const TransitionModel& model, const SimState& z0,
                                           const Matrix2Xd& controls) {
  std::vector<SimState> states;
  states.reserve(controls.cols() + 1);
  states.push_back(z0);
  for (Eigen::Index i = 0; i < controls.cols(); ++i) {
    states.push_back(model.step(states.back(), controls.col(i)));
  }
  return states;
}

/// Lockstep rollout of K candidate control sequences from a shared initial
/// state. Returns n+1 matrices of 6xK states (entry 0 repeats z0).
inline std::vector<Matrix6Xd> rollout_batch(const TransitionModel& model, const SimState& z0,
                                            const std::vector<Matrix2Xd>& candidates) {
  const int count = static_cast<int>(candidates.size());
  ensure(count > 0, "batch rollout needs at least one candidate");
  const Eigen::Index n = candidates.front().cols();

  std::vector<Matrix6Xd> states(n + 1);
  states[0] = z0.vec().replicate(1, count);
  Matrix2Xd u_step(2, count);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < count; ++k) u_step.col(k) = candidates[k].col(i);
    model.step_batch(states[i], u_step, states[i + 1]);
  }
  return states;
}

}  // namespace driftopt

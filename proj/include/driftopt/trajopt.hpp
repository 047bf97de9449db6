#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftopt/common.hpp"
#include "driftopt/model.hpp"
#include "driftopt/types.hpp"

namespace driftopt {

/// One-sided quadratic barrier: B(s) = s^2 for s > 0, else 0. C^1 at the
/// joint.
inline double barrier(double s) { return s > 0.0 ? s * s : 0.0; }
inline double barrier_deriv(double s) { return s > 0.0 ? 2.0 * s : 0.0; }

/// Control-trajectory penalties shared by every cost: magnitude and change
/// regularizers plus soft box limits through the one-sided barrier.
struct ControlPenalty {
  double w_mag = 1e-3;
  double w_smooth = 1e-2;
  double w_limits = 10.0;
  Eigen::Vector2d lower{-1.0, -1.0};
  Eigen::Vector2d upper{1.0, 1.0};

  void validate() const {
    ensure(w_mag >= 0.0 && w_smooth >= 0.0 && w_limits >= 0.0,
           "penalty weights must be nonnegative");
    ensure((lower.array() < upper.array()).all(), "control bounds must satisfy lower < upper");
  }

  /// Returns the penalty value; accumulates d/du into grad when given.
  double evaluate(const Matrix2Xd& u, Matrix2Xd* grad) const {
    double l = 0.0;
    const Eigen::Index n = u.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
      l += w_mag * u.col(i).squaredNorm();
      if (grad != nullptr) grad->col(i) += 2.0 * w_mag * u.col(i);
      if (i > 0) {
        const Eigen::Vector2d d = u.col(i) - u.col(i - 1);
        l += w_smooth * d.squaredNorm();
        if (grad != nullptr) {
          grad->col(i) += 2.0 * w_smooth * d;
          grad->col(i - 1) -= 2.0 * w_smooth * d;
        }
      }
      for (int axis = 0; axis < 2; ++axis) {
        l += w_limits * (barrier(lower[axis] - u(axis, i)) + barrier(u(axis, i) - upper[axis]));
        if (grad != nullptr) {
          (*grad)(axis, i) += w_limits * (barrier_deriv(u(axis, i) - upper[axis]) -
                                          barrier_deriv(lower[axis] - u(axis, i)));
        }
      }
    }
    return l;
  }
};

/// Cost over a rolled-out trajectory. states has n+1 entries (z0 first); u
/// is 2 x n. When the gradient outputs are non-null they are resized,
/// zeroed, and filled: dl_dz is 6 x (n+1) (column 0 belongs to the fixed
/// initial state and is ignored by the optimizer), dl_du is the direct
/// 2 x n dependence only.
class TrajectoryCost {
 public:
  virtual ~TrajectoryCost() = default;
  virtual double evaluate(const std::vector<SimState>& states, const Matrix2Xd& u,
                          Matrix6Xd* dl_dz, Matrix2Xd* dl_du) const = 0;
};

/// A target pose for one trajectory step, weighted quadratically.
struct TargetSpec {
  int step = 0;  ///< in [1, n]
  CarPose pose;
  double weight = 1.0;
};

struct CostSpec {
  std::vector<TargetSpec> targets;
  ControlPenalty penalty;
};

/// Quadratic pose-target cost plus the control penalties. The heading
/// residual is wrap-aware.
class TargetCost : public TrajectoryCost {
 public:
  explicit TargetCost(CostSpec spec) : spec_(std::move(spec)) { spec_.penalty.validate(); }

  const CostSpec& spec() const { return spec_; }

  double evaluate(const std::vector<SimState>& states, const Matrix2Xd& u, Matrix6Xd* dl_dz,
                  Matrix2Xd* dl_du) const override {
    const Eigen::Index n = u.cols();
    if (dl_dz != nullptr) dl_dz->setZero(6, n + 1);
    if (dl_du != nullptr) dl_du->setZero(2, n);

    double l = 0.0;
    for (const TargetSpec& t : spec_.targets) {
      ensure(t.step >= 1 && t.step <= n, "target step outside the horizon");
      ensure(t.weight >= 0.0, "target weight must be nonnegative");
      const CarPose& p = states[t.step].pose;
      const double dx = p.x - t.pose.x;
      const double dy = p.y - t.pose.y;
      const double dth = wrap_angle_diff(p.heading, t.pose.heading);
      l += t.weight * (dx * dx + dy * dy + dth * dth);
      if (dl_dz != nullptr) {
        (*dl_dz)(0, t.step) += 2.0 * t.weight * dx;
        (*dl_dz)(1, t.step) += 2.0 * t.weight * dy;
        (*dl_dz)(2, t.step) += 2.0 * t.weight * dth;
      }
    }
    l += spec_.penalty.evaluate(u, dl_du);
    return l;
  }

 private:
  CostSpec spec_;
};

struct LineSearchSchedule {
  int count = 512;
  double min_scale = 1e-6;
  double max_scale = 1.0;

  void validate() const {
    ensure(count >= 1, "line search needs at least one candidate");
    ensure(min_scale > 0.0 && min_scale <= max_scale, "need 0 < min_scale <= max_scale");
  }

  /// Logarithmically spaced scales over [min_scale, max_scale], inclusive.
  std::vector<double> scales() const {
    validate();
    std::vector<double> out(count);
    if (count == 1) {
      out[0] = max_scale;
      return out;
    }
    const double ratio = max_scale / min_scale;
    for (int k = 0; k < count; ++k) {
      out[k] = min_scale * std::pow(ratio, static_cast<double>(k) / (count - 1));
    }
    return out;
  }
};

struct TrajOptProblem {
  int n = 1;
  double h = 0.05;
  SimState z0;
  std::shared_ptr<const TransitionModel> model;
  std::shared_ptr<const TrajectoryCost> cost;
  LineSearchSchedule schedule;
  int max_iterations = 300;
  double tolerance = 1e-8;  ///< relative cost decrease considered a stall

  void validate() const {
    ensure(n >= 1, "horizon must be >= 1");
    ensure(h > 0.0, "h must be > 0");
    ensure(model != nullptr && cost != nullptr, "problem needs a model and a cost");
    ensure(std::abs(model->h() - h) <= 1e-12 * std::max(1.0, h),
           "problem h must match the model's step period");
    ensure(max_iterations >= 0 && tolerance >= 0.0, "invalid iteration limit or tolerance");
    schedule.validate();
  }
};

namespace detail {

inline int first_non_finite_state(const std::vector<SimState>& states) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vector6d z = states[i].vec();
    if (!z.allFinite()) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

/// Evaluates the total cost of a control sequence through a fresh rollout.
inline double evaluate_cost(const TrajOptProblem& problem, const Matrix2Xd& u,
                            std::vector<SimState>* states_out = nullptr) {
  std::vector<SimState> states = rollout_model(*problem.model, problem.z0, u);
  const int bad = detail::first_non_finite_state(states);
  if (bad >= 0) throw NumericError("non-finite state at step " + std::to_string(bad));
  const double l = problem.cost->evaluate(states, u, nullptr, nullptr);
  if (!std::isfinite(l)) throw NumericError("non-finite cost");
  if (states_out != nullptr) *states_out = std::move(states);
  return l;
}

/// Spec'd convenience: cost of an existing rollout plus its exact partials.
inline double total_cost(const TrajOptProblem& problem, const std::vector<SimState>& states,
                         const Matrix2Xd& u, Matrix6Xd& dl_dz, Matrix2Xd& dl_du) {
  return problem.cost->evaluate(states, u, &dl_dz, &dl_du);
}

struct StepJacobians {
  Matrix6d a;   ///< d z_{i+1} / d z_i
  Matrix62d b;  ///< d z_{i+1} / d u_i
};

/// Per-step blocks of the dynamics residual g_i = z_{i+1} - F(z_i, u_i)
/// over the augmented (pose, velocity) state.
inline std::vector<StepJacobians> residual_jacobians(const TrajOptProblem& problem,
                                                     const std::vector<SimState>& states,
                                                     const Matrix2Xd& u) {
  std::vector<StepJacobians> blocks(u.cols());
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    problem.model->jacobians(states[i], u.col(i), blocks[i].a, blocks[i].b);
  }
  return blocks;
}

struct CostGradient {
  double cost = 0.0;
  Matrix2Xd grad;  ///< dl/du, 2 x n
};

/// dl/du by the adjoint backward recursion. The residual Jacobian dg/dz is
/// unit-block-lower-bidiagonal, so the implicit-function-theorem solve
/// -(dg/dz)^-T applied to dl/dz is exactly this backward substitution; no
/// dense dz/du is ever formed.
inline CostGradient cost_gradient(const TrajOptProblem& problem, const Matrix2Xd& u) {
  const Eigen::Index n = u.cols();
  std::vector<SimState> states = rollout_model(*problem.model, problem.z0, u);
  const int bad = detail::first_non_finite_state(states);
  if (bad >= 0) throw NumericError("non-finite state at step " + std::to_string(bad));

  Matrix6Xd dl_dz;
  Matrix2Xd dl_du;
  CostGradient out;
  out.cost = problem.cost->evaluate(states, u, &dl_dz, &dl_du);
  if (!std::isfinite(out.cost)) throw NumericError("non-finite cost");

  out.grad.resize(2, n);
  Vector6d lambda = dl_dz.col(n);
  Matrix6d a;
  Matrix62d b;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    problem.model->jacobians(states[i], u.col(i), a, b);
    out.grad.col(i) = dl_du.col(i) + b.transpose() * lambda;
    lambda = a.transpose() * lambda + dl_dz.col(i);
  }
  if (!out.grad.allFinite()) throw NumericError("non-finite gradient");
  return out;
}

struct LineSearchResult {
  bool accepted = false;
  Matrix2Xd u;
  double cost = std::numeric_limits<double>::infinity();
  double alpha = 0.0;
  std::vector<SimState> states;
};

/// Scales the gradient by every schedule constant, evaluates all candidate
/// rollouts in one lockstep batch, and keeps the lowest cost if it strictly
/// improves. Ties break toward the smallest scale.
inline LineSearchResult line_search(const TrajOptProblem& problem, const Matrix2Xd& u,
                                    const Matrix2Xd& grad, double current_cost) {
  LineSearchResult result;
  if (grad.isZero(0.0)) return result;  // no candidate can differ from u

  const std::vector<double> scales = problem.schedule.scales();
  const int count = static_cast<int>(scales.size());
  std::vector<Matrix2Xd> candidates(count);
  for (int k = 0; k < count; ++k) candidates[k] = u - scales[k] * grad;

  const std::vector<Matrix6Xd> states = rollout_batch(*problem.model, problem.z0, candidates);
  const Eigen::Index n = u.cols();

  // candidate costs are independent pure evaluations; each slot is written
  // once, so the outcome is identical to a sequential loop
  std::vector<double> costs(count, std::numeric_limits<double>::infinity());
  parallel::for_each(count, [&](std::size_t k) {
    std::vector<SimState> traj(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) {
      const Vector6d z = states[i].col(k);
      if (!z.allFinite()) return;
      traj[i] = SimState::from_vec(z);
    }
    const double l = problem.cost->evaluate(traj, candidates[k], nullptr, nullptr);
    if (std::isfinite(l)) costs[k] = l;
  });

  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int k = 0; k < count; ++k) {
    if (costs[k] < best_cost) {  // ties keep the smaller scale
      best_cost = costs[k];
      best = k;
    }
  }

  if (best >= 0 && best_cost < current_cost) {
    result.accepted = true;
    result.cost = best_cost;
    result.alpha = scales[best];
    result.states.resize(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) {
      result.states[i] = SimState::from_vec(states[i].col(best));
    }
    result.u = std::move(candidates[best]);
  }
  return result;
}

struct TrajOptResult {
  Matrix2Xd u;                  ///< optimal controls, 2 x n
  std::vector<SimState> states;  ///< predicted trajectory, n+1 entries
  std::vector<double> cost_history;   ///< initial cost, then each accepted cost
  std::vector<double> alpha_history;  ///< accepted step scale per iteration
  Matrix2Xd first_gradient;           ///< dl/du at the first iterate (empty if never computed)
  std::string termination;
  int iterations = 0;
};

/// Gradient descent with the batched line search, iterated until no
/// candidate improves, the relative decrease stalls for 3 consecutive
/// iterations, or the iteration budget runs out.
inline TrajOptResult optimize(const TrajOptProblem& problem, const Matrix2Xd& u_init) {
  problem.validate();
  ensure(u_init.cols() == problem.n, "u_init must have n controls");

  TrajOptResult result;
  result.u = u_init;
  double current = evaluate_cost(problem, result.u, &result.states);
  result.cost_history.push_back(current);
  result.termination = "max_iterations";

  int stall = 0;
  for (int iter = 1; iter <= problem.max_iterations; ++iter) {
    const CostGradient cg = cost_gradient(problem, result.u);
    if (iter == 1) result.first_gradient = cg.grad;

    const LineSearchResult ls = line_search(problem, result.u, cg.grad, current);
    if (!ls.accepted) {
      result.termination = "no_acceptable_step";
      break;
    }
    if (!(ls.cost < current)) throw NumericError("line search acceptance is not monotone");

    const double rel = (current - ls.cost) / std::max(std::abs(current), 1e-300);
    result.u = ls.u;
    result.states = ls.states;
    current = ls.cost;
    result.cost_history.push_back(current);
    result.alpha_history.push_back(ls.alpha);
    result.iterations = iter;

    if (rel < problem.tolerance) {
      if (++stall >= 3) {
        result.termination = "converged";
        break;
      }
    } else {
      stall = 0;
    }
  }
  return result;
}

/// Offline scenario description (loaded from JSON).
struct Scenario {
  int n = 40;
  double h = 0.05;
  CarPose x0;
  BodyVelocity v0;
  CostSpec cost;
  LineSearchSchedule schedule;
  int max_iterations = 300;
  double tolerance = 1e-8;
  std::string model_path;  ///< optional; the CLI flag overrides it

  static Scenario from_json(const nlohmann::json& j) {
    Scenario s;
    try {
      s.n = j.at("n").get<int>();
      s.h = j.at("h").get<double>();
      const auto& x0 = j.at("x0");
      s.x0 = CarPose(x0[0], x0[1], x0[2]);
      const auto& v0 = j.at("v0");
      s.v0 = BodyVelocity(v0[0], v0[1], v0[2]);
      for (const auto& t : j.at("targets")) {
        const auto& pose = t.at("pose");
        s.cost.targets.push_back(
            {t.at("step").get<int>(), CarPose(pose[0], pose[1], pose[2]),
             t.at("weight").get<double>()});
      }
      const auto& w = j.at("weights");
      s.cost.penalty.w_mag = w.at("mag").get<double>();
      s.cost.penalty.w_smooth = w.at("smooth").get<double>();
      s.cost.penalty.w_limits = w.at("limits").get<double>();
      const auto& bounds = j.at("bounds");
      s.cost.penalty.lower << bounds.at("lower")[0], bounds.at("lower")[1];
      s.cost.penalty.upper << bounds.at("upper")[0], bounds.at("upper")[1];
      const auto& ls = j.at("line_search");
      s.schedule.count = ls.at("count").get<int>();
      s.schedule.min_scale = ls.at("min_scale").get<double>();
      s.schedule.max_scale = ls.at("max_scale").get<double>();
      s.max_iterations = j.at("max_iterations").get<int>();
      s.tolerance = j.at("tolerance").get<double>();
      if (j.contains("model")) s.model_path = j.at("model").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("scenario: ") + e.what());
    }
    return s;
  }

  static Scenario from_json_file(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }

  TrajOptProblem make_problem(std::shared_ptr<const TransitionModel> model) const {
    TrajOptProblem p;
    p.n = n;
    p.h = h;
    p.z0 = {x0, v0};
    p.model = std::move(model);
    p.cost = std::make_shared<TargetCost>(cost);
    p.schedule = schedule;
    p.max_iterations = max_iterations;
    p.tolerance = tolerance;
    p.validate();
    return p;
  }
};

/// CSV schema: `step,x,y,heading,vx,vy,omega,throttle,steer`; row i holds
/// state i and the control that produced it.
inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const std::vector<SimState>& states, const Matrix2Xd& u) {
  std::string out = "step,x,y,heading,vx,vy,omega,throttle,steer\n";
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(states.size()); ++i) {
    const SimState& z = states[i];
    out += std::to_string(i) + ',' + format_double(z.pose.x) + ',' + format_double(z.pose.y) +
           ',' + format_double(z.pose.heading) + ',' + format_double(z.vel.vx) + ',' +
           format_double(z.vel.vy) + ',' + format_double(z.vel.omega) + ',' +
           format_double(u(0, i - 1)) + ',' + format_double(u(1, i - 1)) + '\n';
  }
  write_text_file(path, out);
}

inline nlohmann::json result_report_json(const TrajOptResult& result) {
  return {{"termination", result.termination},
          {"iterations", result.iterations},
          {"final_cost", result.cost_history.back()},
          {"cost_history", result.cost_history},
          {"alpha_history", result.alpha_history}};
}

}  // namespace driftopt

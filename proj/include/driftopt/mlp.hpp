#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftopt/common.hpp"
#include "driftopt/dataset.hpp"
#include "driftopt/types.hpp"

namespace driftopt {

enum class Activation { kRelu, kGelu };
enum class LossKind { kL1, kL2, kRelative };

inline std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "gelu"; }
inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kL1: return "l1";
    case LossKind::kL2: return "l2";
    default: return "relative";
  }
}
inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "gelu") return Activation::kGelu;
  throw ValidationError("unknown activation: " + s);
}
inline LossKind loss_from_string(const std::string& s) {
  if (s == "l1") return LossKind::kL1;
  if (s == "l2") return LossKind::kL2;
  if (s == "relative") return LossKind::kRelative;
  throw ValidationError("unknown loss: " + s);
}

inline constexpr int kMlpInputs = 5;   // v (3) + u (2)
inline constexpr int kMlpOutputs = 3;  // next v

struct MlpSpec {
  std::vector<int> layer_sizes;  ///< including input (5) and output (3)
  Activation activation = Activation::kGelu;
  std::uint64_t seed = 0;

  void validate() const {
    ensure(layer_sizes.size() >= 3, "need at least one hidden layer");
    ensure(layer_sizes.front() == kMlpInputs, "input layer must have 5 units");
    ensure(layer_sizes.back() == kMlpOutputs, "output layer must have 3 units");
    for (int s : layer_sizes) ensure(s >= 1, "layer sizes must be >= 1");
  }

  /// Convenience builder: `hidden` layers of `width` units.
  static MlpSpec make(int hidden, int width, Activation act, std::uint64_t seed) {
    MlpSpec spec;
    spec.layer_sizes.push_back(kMlpInputs);
    for (int i = 0; i < hidden; ++i) spec.layer_sizes.push_back(width);
    spec.layer_sizes.push_back(kMlpOutputs);
    spec.activation = act;
    spec.seed = seed;
    spec.validate();
    return spec;
  }
};

struct MlpWeights {
  std::vector<Eigen::MatrixXd> w;  ///< per layer, (out x in)
  std::vector<Eigen::VectorXd> b;

  int param_count() const {
    int n = 0;
    for (std::size_t l = 0; l < w.size(); ++l) n += static_cast<int>(w[l].size() + b[l].size());
    return n;
  }
};

/// Input/output standardization; raw velocities span decades, so the
/// network always sees standardized features.
struct Normalizer {
  Eigen::Matrix<double, kMlpInputs, 1> in_mean = Eigen::Matrix<double, kMlpInputs, 1>::Zero();
  Eigen::Matrix<double, kMlpInputs, 1> in_scale = Eigen::Matrix<double, kMlpInputs, 1>::Ones();
  Eigen::Vector3d out_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d out_scale = Eigen::Vector3d::Ones();

  void validate() const {
    ensure((in_scale.array() > 0.0).all() && (out_scale.array() > 0.0).all(),
           "normalizer scales must be strictly positive");
  }
};

/// The learned state transition f_theta plus its normalizers.
struct MlpModel {
  MlpSpec spec;
  MlpWeights weights;
  Normalizer norm;
};

inline double activation_value(Activation kind, double x) {
  if (kind == Activation::kRelu) return x > 0.0 ? x : 0.0;
  // exact GELU: x * Phi(x)
  return x * 0.5 * std::erfc(-x * 0.70710678118654752440);
}

/// Derivative convention: relu'(0) = 0; gelu' = Phi(x) + x phi(x).
inline double activation_deriv(Activation kind, double x) {
  if (kind == Activation::kRelu) return x > 0.0 ? 1.0 : 0.0;
  const double phi = std::exp(-0.5 * x * x) * 0.39894228040143267794;
  const double Phi = 0.5 * std::erfc(-x * 0.70710678118654752440);
  return Phi + x * phi;
}

namespace detail {

inline void activate_in_place(Activation kind, Eigen::MatrixXd& m) {
  m = m.unaryExpr([kind](double x) { return activation_value(kind, x); });
}

inline Eigen::MatrixXd activation_deriv_of(Activation kind, const Eigen::MatrixXd& pre) {
  return pre.unaryExpr([kind](double x) { return activation_deriv(kind, x); });
}

}  // namespace detail

/// He-style seeded initialization; biases start at zero.
inline MlpWeights init_weights(const MlpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  MlpWeights weights;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    Eigen::MatrixXd w(out, in);
    const double scale = std::sqrt(2.0 / in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = scale * rng.normal();
    }
    weights.w.push_back(std::move(w));
    weights.b.push_back(Eigen::VectorXd::Zero(out));
  }
  return weights;
}

/// Batched forward pass on raw (unstandardized) inputs, one sample per
/// column. Hidden layers use the activation; the output layer is linear.
inline Eigen::Matrix3Xd mlp_forward_batch(const MlpModel& model,
                                          const Eigen::Matrix<double, kMlpInputs, Eigen::Dynamic>& in) {
  const std::size_t nl = model.weights.w.size();
  ensure(nl + 1 == model.spec.layer_sizes.size(), "weights do not match spec");
  Eigen::MatrixXd a =
      ((in.colwise() - model.norm.in_mean).array().colwise() / model.norm.in_scale.array())
          .matrix();
  for (std::size_t l = 0; l < nl; ++l) {
    Eigen::MatrixXd z = model.weights.w[l] * a;
    z.colwise() += model.weights.b[l];
    if (l + 1 < nl) detail::activate_in_place(model.spec.activation, z);
    a = std::move(z);
  }
  return ((a.array().colwise() * model.norm.out_scale.array()).colwise() +
          model.norm.out_mean.array())
      .matrix();
}

inline Eigen::Vector3d mlp_forward(const MlpModel& model,
                                   const Eigen::Matrix<double, kMlpInputs, 1>& in) {
  return mlp_forward_batch(model, in);
}

/// Predicted next local velocity for (v, u).
inline BodyVelocity mlp_forward(const MlpModel& model, const BodyVelocity& v,
                                const ControlInput& u) {
  Eigen::Matrix<double, kMlpInputs, 1> in;
  in << v.vx, v.vy, v.omega, u.throttle, u.steer;
  const Eigen::Vector3d out = mlp_forward(model, in);
  return {out[0], out[1], out[2]};
}

/// Exact 3x5 Jacobian of the raw-input forward map, by reverse
/// accumulation through the layers and the normalizers.
inline Eigen::Matrix<double, kMlpOutputs, kMlpInputs> mlp_input_jacobian(
    const MlpModel& model, const Eigen::Matrix<double, kMlpInputs, 1>& in) {
  const std::size_t nl = model.weights.w.size();
  ensure(nl + 1 == model.spec.layer_sizes.size(), "weights do not match spec");

  Eigen::VectorXd a = (in - model.norm.in_mean).cwiseQuotient(model.norm.in_scale);
  std::vector<Eigen::VectorXd> pre;  // hidden pre-activations
  pre.reserve(nl - 1);
  for (std::size_t l = 0; l + 1 < nl; ++l) {
    Eigen::VectorXd z = model.weights.w[l] * a + model.weights.b[l];
    pre.push_back(z);
    a = z.unaryExpr([&](double x) { return activation_value(model.spec.activation, x); });
  }

  Eigen::MatrixXd j = model.weights.w[nl - 1];
  for (std::size_t l = nl - 1; l-- > 0;) {
    const Eigen::VectorXd d = pre[l].unaryExpr(
        [&](double x) { return activation_deriv(model.spec.activation, x); });
    j = (j * d.asDiagonal()) * model.weights.w[l];
  }
  return model.norm.out_scale.asDiagonal() * j *
         model.norm.in_scale.cwiseInverse().asDiagonal();
}

inline Eigen::Matrix<double, kMlpOutputs, kMlpInputs> mlp_input_jacobian(const MlpModel& model,
                                                                         const BodyVelocity& v,
                                                                         const ControlInput& u) {
  Eigen::Matrix<double, kMlpInputs, 1> in;
  in << v.vx, v.vy, v.omega, u.throttle, u.steer;
  return mlp_input_jacobian(model, in);
}

struct LossValueGrad {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();  ///< d loss / d prediction
};

/// L1, L2, or the relative loss |e|_1 / (|v_true|_1 + eps). The subgradient
/// of |.| at 0 is taken as 0.
inline LossValueGrad loss_value_and_grad(LossKind kind, double epsilon,
                                         const Eigen::Vector3d& pred,
                                         const Eigen::Vector3d& truth) {
  const Eigen::Vector3d e = pred - truth;
  const Eigen::Vector3d sign_e =
      e.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  LossValueGrad out;
  switch (kind) {
    case LossKind::kL1:
      out.value = e.cwiseAbs().sum();
      out.grad = sign_e;
      break;
    case LossKind::kL2:
      out.value = e.squaredNorm();
      out.grad = 2.0 * e;
      break;
    case LossKind::kRelative: {
      ensure(epsilon > 0.0, "relative loss needs epsilon > 0");
      const double denom = truth.cwiseAbs().sum() + epsilon;
      out.value = e.cwiseAbs().sum() / denom;
      out.grad = sign_e / denom;
      break;
    }
  }
  return out;
}

struct ParamGradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  double mean_loss = 0.0;
};

namespace detail {

/// Packs pairs into standardized input/target matrices, one column each.
inline void pack_pairs(const MlpModel& model, std::span<const TrainingPair> pairs,
                       Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  x.resize(kMlpInputs, n);
  y.resize(kMlpOutputs, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const TrainingPair& p = pairs[i];
    x.col(i) << p.v_in.vx, p.v_in.vy, p.v_in.omega, p.u.throttle, p.u.steer;
    y.col(i) << p.v_out.vx, p.v_out.vy, p.v_out.omega;
  }
  x = ((x.colwise() - model.norm.in_mean).array().colwise() / model.norm.in_scale.array())
          .matrix();
  y = ((y.colwise() - model.norm.out_mean).array().colwise() / model.norm.out_scale.array())
          .matrix();
}

/// Mean loss over standardized inputs/targets packed column-wise.
inline double batch_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         LossKind kind, double epsilon) {
  const std::size_t nl = model.weights.w.size();
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < nl; ++l) {
    Eigen::MatrixXd z = model.weights.w[l] * a;
    z.colwise() += model.weights.b[l];
    if (l + 1 < nl) activate_in_place(model.spec.activation, z);
    a = std::move(z);
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    total += loss_value_and_grad(kind, epsilon, a.col(i), y.col(i)).value;
  }
  return total / static_cast<double>(a.cols());
}

/// Backpropagation over packed standardized columns.
inline ParamGradients batch_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& y, LossKind kind, double epsilon) {
  const std::size_t nl = model.weights.w.size();
  const Eigen::Index bsize = x.cols();

  std::vector<Eigen::MatrixXd> acts;  // post-activation outputs, acts[0] = input
  std::vector<Eigen::MatrixXd> pre;   // hidden pre-activations
  acts.reserve(nl + 1);
  pre.reserve(nl - 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < nl; ++l) {
    Eigen::MatrixXd z = model.weights.w[l] * acts.back();
    z.colwise() += model.weights.b[l];
    if (l + 1 < nl) {
      pre.push_back(z);
      activate_in_place(model.spec.activation, z);
    }
    acts.push_back(std::move(z));
  }

  ParamGradients g;
  g.w.resize(nl);
  g.b.resize(nl);

  Eigen::MatrixXd delta(kMlpOutputs, bsize);
  double total = 0.0;
  for (Eigen::Index i = 0; i < bsize; ++i) {
    const LossValueGrad lv = loss_value_and_grad(kind, epsilon, acts.back().col(i), y.col(i));
    total += lv.value;
    delta.col(i) = lv.grad;
  }
  g.mean_loss = total / static_cast<double>(bsize);
  delta /= static_cast<double>(bsize);

  for (std::size_t l = nl; l-- > 0;) {
    g.w[l] = delta * acts[l].transpose();
    g.b[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (model.weights.w[l].transpose() * delta)
                  .cwiseProduct(activation_deriv_of(model.spec.activation, pre[l - 1]));
    }
  }
  return g;
}

}  // namespace detail

/// Exact gradient of the mean batch loss with respect to every weight and
/// bias. The loss is evaluated on standardized velocities (with an identity
/// normalizer this is the plain loss).
inline ParamGradients param_gradients(const MlpModel& model, std::span<const TrainingPair> batch,
                                      LossKind kind, double epsilon) {
  ensure(!batch.empty(), "gradient needs a nonempty batch");
  Eigen::MatrixXd x, y;
  detail::pack_pairs(model, batch, x, y);
  return detail::batch_gradients(model, x, y, kind, epsilon);
}

struct TrainConfig {
  LossKind loss = LossKind::kRelative;
  double epsilon = 1e-2;  ///< relative-loss epsilon, standardized units
  double learning_rate = 1e-3;
  int batch_size = 256;
  int epochs = 200;
  std::uint64_t seed = 0;  ///< mini-batch shuffling seed
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    ensure(epsilon > 0.0, "epsilon must be > 0");
    ensure(learning_rate > 0.0, "learning rate must be > 0");
    ensure(batch_size >= 1 && epochs >= 0, "invalid batch size or epoch count");
  }
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> test_loss;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Fits the normalizer on the training pairs (std floored at 1e-6), then
/// runs seeded mini-batch Adam. Deterministic per seed.
inline TrainResult train_mlp(const MlpSpec& spec, std::span<const TrainingPair> train_pairs,
                             std::span<const TrainingPair> test_pairs, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  ensure(!train_pairs.empty(), "training needs a nonempty dataset");

  TrainResult result;
  result.model.spec = spec;
  result.model.weights = init_weights(spec);

  {  // per-feature mean/std over the training pairs
    Eigen::Matrix<double, kMlpInputs, 1> in_mean = Eigen::Matrix<double, kMlpInputs, 1>::Zero();
    Eigen::Matrix<double, kMlpInputs, 1> in_sq = Eigen::Matrix<double, kMlpInputs, 1>::Zero();
    Eigen::Vector3d out_mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d out_sq = Eigen::Vector3d::Zero();
    for (const TrainingPair& p : train_pairs) {
      Eigen::Matrix<double, kMlpInputs, 1> xi;
      xi << p.v_in.vx, p.v_in.vy, p.v_in.omega, p.u.throttle, p.u.steer;
      in_mean += xi;
      in_sq += xi.cwiseProduct(xi);
      const Eigen::Vector3d yi = p.v_out.vec();
      out_mean += yi;
      out_sq += yi.cwiseProduct(yi);
    }
    const double n = static_cast<double>(train_pairs.size());
    in_mean /= n;
    out_mean /= n;
    Normalizer& norm = result.model.norm;
    norm.in_mean = in_mean;
    norm.in_scale = (in_sq / n - in_mean.cwiseProduct(in_mean))
                        .cwiseMax(0.0)
                        .cwiseSqrt()
                        .cwiseMax(1e-6);
    norm.out_mean = out_mean;
    norm.out_scale = (out_sq / n - out_mean.cwiseProduct(out_mean))
                         .cwiseMax(0.0)
                         .cwiseSqrt()
                         .cwiseMax(1e-6);
  }

  Eigen::MatrixXd train_x, train_y, test_x, test_y;
  detail::pack_pairs(result.model, train_pairs, train_x, train_y);
  if (!test_pairs.empty()) detail::pack_pairs(result.model, test_pairs, test_x, test_y);

  MlpWeights& weights = result.model.weights;
  const std::size_t nl = weights.w.size();
  std::vector<Eigen::MatrixXd> mw(nl), vw(nl);
  std::vector<Eigen::VectorXd> mb(nl), vb(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(weights.w[l].rows(), weights.w[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(weights.b[l].size());
    vb[l] = mb[l];
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::MatrixXd bx(kMlpInputs, cfg.batch_size), by(kMlpOutputs, cfg.batch_size);

  long step_count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsize = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      bx.resize(kMlpInputs, bsize);
      by.resize(kMlpOutputs, bsize);
      for (std::size_t i = 0; i < bsize; ++i) {
        bx.col(i) = train_x.col(order[start + i]);
        by.col(i) = train_y.col(order[start + i]);
      }
      const ParamGradients g =
          detail::batch_gradients(result.model, bx, by, cfg.loss, cfg.epsilon);
      epoch_loss += g.mean_loss * static_cast<double>(bsize);
      seen += bsize;

      ++step_count;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
      for (std::size_t l = 0; l < nl; ++l) {
        mw[l] = cfg.beta1 * mw[l] + (1.0 - cfg.beta1) * g.w[l];
        vw[l] = cfg.beta2 * vw[l] + (1.0 - cfg.beta2) * g.w[l].cwiseProduct(g.w[l]);
        weights.w[l] -= cfg.learning_rate *
                        (mw[l] / bc1)
                            .cwiseQuotient(((vw[l] / bc2).cwiseSqrt().array() + cfg.adam_epsilon)
                                               .matrix());
        mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * g.b[l];
        vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * g.b[l].cwiseProduct(g.b[l]);
        weights.b[l] -= cfg.learning_rate *
                        (mb[l] / bc1)
                            .cwiseQuotient(((vb[l] / bc2).cwiseSqrt().array() + cfg.adam_epsilon)
                                               .matrix());
      }
    }
    result.history.train_loss.push_back(epoch_loss / static_cast<double>(seen));
    result.history.test_loss.push_back(
        test_pairs.empty()
            ? std::numeric_limits<double>::quiet_NaN()
            : detail::batch_loss(result.model, test_x, test_y, cfg.loss, cfg.epsilon));
  }
  return result;
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const MlpModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < model.weights.w.size(); ++l) {
    const Eigen::MatrixXd& w = model.weights.w[l];
    std::vector<double> flat(w.size());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[r * w.cols() + c] = w(r, c);
    }
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weight", flat},
                      {"bias", std::vector<double>(model.weights.b[l].begin(),
                                                   model.weights.b[l].end())}});
  }
  const auto vec = [](const auto& v) { return std::vector<double>(v.begin(), v.end()); };
  return {{"format_version", kModelFormatVersion},
          {"spec",
           {{"layer_sizes", model.spec.layer_sizes},
            {"activation", to_string(model.spec.activation)},
            {"seed", model.spec.seed}}},
          {"normalizer",
           {{"in_mean", vec(model.norm.in_mean)},
            {"in_scale", vec(model.norm.in_scale)},
            {"out_mean", vec(model.norm.out_mean)},
            {"out_scale", vec(model.norm.out_scale)}}},
          {"layers", layers}};
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  ensure(j.at("format_version").get<int>() == kModelFormatVersion,
         "unsupported model format version");
  MlpModel model;
  model.spec.layer_sizes = j.at("spec").at("layer_sizes").get<std::vector<int>>();
  model.spec.activation = activation_from_string(j.at("spec").at("activation").get<std::string>());
  model.spec.seed = j.at("spec").at("seed").get<std::uint64_t>();
  model.spec.validate();

  const auto load_vec = [&](const nlohmann::json& a, auto& v) {
    ensure(a.size() == static_cast<std::size_t>(v.size()), "normalizer size mismatch");
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = a[i].get<double>();
  };
  load_vec(j.at("normalizer").at("in_mean"), model.norm.in_mean);
  load_vec(j.at("normalizer").at("in_scale"), model.norm.in_scale);
  load_vec(j.at("normalizer").at("out_mean"), model.norm.out_mean);
  load_vec(j.at("normalizer").at("out_scale"), model.norm.out_scale);
  model.norm.validate();

  for (std::size_t l = 0; l + 1 < model.spec.layer_sizes.size(); ++l) {
    const nlohmann::json& layer = j.at("layers").at(l);
    const Eigen::Index rows = layer.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = layer.at("cols").get<Eigen::Index>();
    ensure(rows == model.spec.layer_sizes[l + 1] && cols == model.spec.layer_sizes[l],
           "layer shape does not match spec");
    Eigen::MatrixXd w(rows, cols);
    const auto& flat = layer.at("weight");
    ensure(flat.size() == static_cast<std::size_t>(rows * cols), "weight size mismatch");
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = flat[r * cols + c].get<double>();
    }
    Eigen::VectorXd b(rows);
    const auto& bias = layer.at("bias");
    ensure(bias.size() == static_cast<std::size_t>(rows), "bias size mismatch");
    for (Eigen::Index r = 0; r < rows; ++r) b[r] = bias[r].get<double>();
    model.weights.w.push_back(std::move(w));
    model.weights.b.push_back(std::move(b));
  }
  return model;
}

inline void save_model_json(const MlpModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model).dump() + "\n");
}

inline MlpModel load_model_json(const std::filesystem::path& path) {
  return model_from_json(nlohmann::json::parse(read_text_file(path)));
}

/// CSV schema: `epoch,train_loss,test_loss`.
inline void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::string out = "epoch,train_loss,test_loss\n";
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out += std::to_string(e) + ',' + format_double(history.train_loss[e]) + ',' +
           format_double(history.test_loss[e]) + '\n';
  }
  write_text_file(path, out);
}

}  // namespace driftopt

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftopt/common.hpp"
#include "driftopt/sim.hpp"
#include "driftopt/types.hpp"

namespace driftopt {

/// A uniformly sampled pose/control recording. Controls may have the same
/// length as the poses or one fewer entry; u_i is the command held during
/// [t_i, t_{i+1}).
struct PoseLog {
  std::vector<double> timestamps;
  std::vector<CarPose> poses;
  std::vector<ControlInput> controls;

  void validate() const {
    ensure(poses.size() >= 3, "pose log needs at least 3 frames");
    ensure(timestamps.size() == poses.size(), "timestamps and poses must align");
    ensure(controls.size() == poses.size() || controls.size() + 1 == poses.size(),
           "controls must have pose count or pose count - 1 entries");
    const double h = timestamps[1] - timestamps[0];
    ensure(h > 0.0, "timestamps must be strictly increasing");
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
      const double d = timestamps[i] - timestamps[i - 1];
      ensure(d > 0.0 && std::abs(d - h) <= 1e-6 * h, "timestamps must be uniformly spaced");
    }
  }

  double step() const { return timestamps[1] - timestamps[0]; }
  std::size_t size() const { return poses.size(); }

  static PoseLog from_records(std::span<const LogRecord> records) {
    PoseLog log;
    log.timestamps.reserve(records.size());
    log.poses.reserve(records.size());
    log.controls.reserve(records.size());
    for (const LogRecord& r : records) {
      log.timestamps.push_back(r.t);
      log.poses.push_back(r.pose);
      log.controls.push_back(r.control);
    }
    return log;
  }
};

/// One supervised sample: local velocity and control in, next local
/// velocity out.
struct TrainingPair {
  BodyVelocity v_in;
  ControlInput u;
  BodyVelocity v_out;
};

/// Savitzky-Golay smoothing: each output sample is the center value of a
/// least-squares polynomial fit over the window; boundary samples reuse the
/// nearest full window's polynomial evaluated at their offset.
inline std::vector<double> savgol_smooth(std::span<const double> series, int window,
                                         int poly_order) {
  const int n = static_cast<int>(series.size());
  ensure(window >= 3 && window % 2 == 1, "window must be odd and >= 3");
  ensure(window <= n, "window must not exceed the series length");
  ensure(poly_order >= 0 && poly_order < window, "poly_order must be in [0, window)");

  const int half = window / 2;
  // Vandermonde over offsets -half..half; evaluation weights for offset d
  // are t(d)^T (A^T A)^-1 A^T.
  Eigen::MatrixXd vand(window, poly_order + 1);
  for (int r = 0; r < window; ++r) {
    double p = 1.0;
    for (int c = 0; c <= poly_order; ++c) {
      vand(r, c) = p;
      p *= static_cast<double>(r - half);
    }
  }
  const Eigen::MatrixXd pinv =
      (vand.transpose() * vand).ldlt().solve(vand.transpose());  // (p+1) x window

  // weights[half + d] = row of convolution weights evaluating the fit at offset d
  Eigen::MatrixXd weights(window, window);
  for (int d = -half; d <= half; ++d) {
    Eigen::RowVectorXd t(poly_order + 1);
    double p = 1.0;
    for (int c = 0; c <= poly_order; ++c) {
      t(c) = p;
      p *= static_cast<double>(d);
    }
    weights.row(half + d) = t * pinv;
  }

  std::vector<double> out(n);
  const auto window_dot = [&](int start, int weight_row) {
    double acc = 0.0;
    for (int j = 0; j < window; ++j) acc += weights(weight_row, j) * series[start + j];
    return acc;
  };
  for (int i = 0; i < n; ++i) {
    if (i < half) {
      out[i] = window_dot(0, i);  // left window, offset i - half
    } else if (i >= n - half) {
      out[i] = window_dot(n - window, i - (n - 1 - half) + half);
    } else {
      out[i] = window_dot(i - half, half);
    }
  }
  return out;
}

namespace detail {

/// Central differences divided by h, one-sided at the endpoints. The
/// heading channel must already be continuous (unwrapped).
inline std::vector<double> difference_series(std::span<const double> series, double h) {
  const int n = static_cast<int>(series.size());
  std::vector<double> out(n);
  out[0] = (series[1] - series[0]) / h;
  for (int i = 1; i + 1 < n; ++i) out[i] = (series[i + 1] - series[i - 1]) / (2.0 * h);
  out[n - 1] = (series[n - 1] - series[n - 2]) / h;
  return out;
}

inline std::vector<double> unwrap_headings(std::span<const CarPose> poses) {
  std::vector<double> h(poses.size());
  h[0] = poses[0].heading;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    h[i] = h[i - 1] + wrap_angle_diff(poses[i].heading, poses[i - 1].heading);
  }
  return h;
}

}  // namespace detail

/// Global-frame velocities (xdot, ydot, heading rate) from a pose log via
/// finite differences; heading is differenced across the +-pi seam safely.
/// Output length equals the pose count.
inline std::vector<Eigen::Vector3d> finite_diff_velocities(const PoseLog& log) {
  log.validate();
  const double h = log.step();
  const int n = static_cast<int>(log.size());
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = log.poses[i].x;
    ys[i] = log.poses[i].y;
  }
  const std::vector<double> heading = detail::unwrap_headings(log.poses);
  const std::vector<double> xdot = detail::difference_series(xs, h);
  const std::vector<double> ydot = detail::difference_series(ys, h);
  const std::vector<double> hdot = detail::difference_series(heading, h);
  std::vector<Eigen::Vector3d> out(n);
  for (int i = 0; i < n; ++i) out[i] = {xdot[i], ydot[i], hdot[i]};
  return out;
}

/// Rotates a global-frame velocity into the body frame of a car with the
/// given heading.
inline BodyVelocity to_local_frame(double heading, const Eigen::Vector3d& global_vel) {
  return global_to_body(heading, global_vel);
}

struct SmoothingConfig {
  int window = 9;
  int poly_order = 2;
};

/// The preprocessing pipeline: smooth the pose channels (heading unwrapped
/// first), finite-difference to velocities, localize each velocity with its
/// own frame's smoothed heading, and emit (v_i, u_i; v_{i+1}) pairs.
/// An N-frame log yields N-2 pairs: the pair whose target would be the
/// one-sided final velocity estimate is dropped.
inline std::vector<TrainingPair> build_pairs(const PoseLog& log, const SmoothingConfig& cfg) {
  log.validate();
  const int n = static_cast<int>(log.size());
  const double h = log.step();

  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = log.poses[i].x;
    ys[i] = log.poses[i].y;
  }
  const std::vector<double> raw_heading = detail::unwrap_headings(log.poses);
  const std::vector<double> sx = savgol_smooth(xs, cfg.window, cfg.poly_order);
  const std::vector<double> sy = savgol_smooth(ys, cfg.window, cfg.poly_order);
  const std::vector<double> sheading = savgol_smooth(raw_heading, cfg.window, cfg.poly_order);

  const std::vector<double> xdot = detail::difference_series(sx, h);
  const std::vector<double> ydot = detail::difference_series(sy, h);
  const std::vector<double> hdot = detail::difference_series(sheading, h);

  std::vector<BodyVelocity> local(n);
  for (int i = 0; i < n; ++i) {
    local[i] = to_local_frame(wrap_angle(sheading[i]), {xdot[i], ydot[i], hdot[i]});
  }

  std::vector<TrainingPair> pairs;
  pairs.reserve(n - 2);
  for (int i = 0; i + 2 < n; ++i) {
    pairs.push_back({local[i], log.controls[i], local[i + 1]});
  }
  return pairs;
}

/// Train/test pairs plus held-out validation trajectories.
struct SplitDataset {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> test;
  std::vector<PoseLog> validation;
};

struct SplitConfig {
  double train_ratio = 15.0 / 16.0;
  double test_ratio = 1.0 / 16.0;
  int validation_count = 40;
  int validation_steps = 60;  ///< steps per validation trajectory (frames = steps + 1)
  std::uint64_t seed = 0;
  SmoothingConfig smoothing;

  void validate() const {
    ensure(train_ratio > 0.0 && test_ratio > 0.0, "split ratios must be positive");
    ensure(train_ratio + test_ratio <= 1.0 + 1e-12, "split ratios must sum to at most 1");
    ensure(validation_count >= 0 && validation_steps >= 1, "invalid validation request");
  }
};

/// Splits time-ordered pairs into contiguous train/test blocks (consecutive
/// frames are near-duplicates, so shuffling would leak) and carves the
/// validation trajectories from held-out logs. A guard gap derived from the
/// smoothing window keeps the blocks from sharing source frames.
inline SplitDataset split_dataset(std::span<const TrainingPair> pairs,
                                  std::span<const PoseLog> validation_sources,
                                  const SplitConfig& cfg) {
  cfg.validate();
  const std::size_t n = pairs.size();
  const std::size_t gap = cfg.smoothing.window / 2 + 2;
  const std::size_t n_train = static_cast<std::size_t>(cfg.train_ratio * n);
  const std::size_t n_test = static_cast<std::size_t>(cfg.test_ratio * n);
  ensure(n_train >= 1 && n_train + gap + 1 <= n, "not enough pairs for the requested split");

  SplitDataset out;
  out.train.assign(pairs.begin(), pairs.begin() + n_train);
  const std::size_t test_begin = n_train + gap;
  const std::size_t test_end = std::min(n, test_begin + n_test);
  ensure(test_begin < test_end, "not enough pairs for the requested test block");
  out.test.assign(pairs.begin() + test_begin, pairs.begin() + test_end);

  const int frames = cfg.validation_steps + 1;
  for (const PoseLog& log : validation_sources) {
    std::size_t offset = 0;
    while (out.validation.size() < static_cast<std::size_t>(cfg.validation_count) &&
           offset + frames <= log.size()) {
      PoseLog seg;
      seg.timestamps.assign(log.timestamps.begin() + offset,
                            log.timestamps.begin() + offset + frames);
      seg.poses.assign(log.poses.begin() + offset, log.poses.begin() + offset + frames);
      const std::size_t ctrl_end = std::min(log.controls.size(), offset + frames);
      seg.controls.assign(log.controls.begin() + offset, log.controls.begin() + ctrl_end);
      out.validation.push_back(std::move(seg));
      offset += frames;
    }
  }
  ensure(out.validation.size() == static_cast<std::size_t>(cfg.validation_count),
         "insufficient data for the requested validation trajectories");
  return out;
}

/// NDJSON: one {"v_in":[..3],"u":[..2],"v_out":[..3]} object per line.
inline void write_pairs_ndjson(const std::filesystem::path& path,
                               std::span<const TrainingPair> pairs) {
  std::string out;
  for (const TrainingPair& p : pairs) {
    nlohmann::json j{{"v_in", {p.v_in.vx, p.v_in.vy, p.v_in.omega}},
                     {"u", {p.u.throttle, p.u.steer}},
                     {"v_out", {p.v_out.vx, p.v_out.vy, p.v_out.omega}}};
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<TrainingPair> read_pairs_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path);
  ensure(in.good(), "cannot open pairs file: " + path.string());
  std::vector<TrainingPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    TrainingPair p;
    p.v_in = BodyVelocity(j.at("v_in")[0], j.at("v_in")[1], j.at("v_in")[2]);
    p.u = ControlInput(j.at("u")[0], j.at("u")[1]);
    p.v_out = BodyVelocity(j.at("v_out")[0], j.at("v_out")[1], j.at("v_out")[2]);
    pairs.push_back(p);
  }
  return pairs;
}

inline void write_pose_log_csv(const std::filesystem::path& path, const PoseLog& log) {
  std::vector<LogRecord> records(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    records[i].t = log.timestamps[i];
    records[i].pose = log.poses[i];
    if (i < log.controls.size()) records[i].control = log.controls[i];
  }
  write_pose_log_csv(path, std::span<const LogRecord>(records));
}

inline PoseLog read_pose_log(const std::filesystem::path& path) {
  const std::vector<LogRecord> records = read_pose_log_csv(path);
  return PoseLog::from_records(records);
}

/// Splits, persists every artifact under out_dir, and writes manifest.json
/// listing files, h, counts, and the seed.
inline SplitDataset split_and_save(std::span<const TrainingPair> pairs,
                                   std::span<const PoseLog> validation_sources,
                                   const SplitConfig& cfg, const std::filesystem::path& out_dir) {
  SplitDataset ds = split_dataset(pairs, validation_sources, cfg);
  std::filesystem::create_directories(out_dir / "validation");
  write_pairs_ndjson(out_dir / "train.ndjson", ds.train);
  write_pairs_ndjson(out_dir / "test.ndjson", ds.test);

  double h = 0.05;
  nlohmann::json val_files = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.validation.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "validation/val_%03zu.csv", i);
    write_pose_log_csv(out_dir / name, ds.validation[i]);
    val_files.push_back(name);
    h = ds.validation[i].step();
  }

  nlohmann::json manifest{
      {"h", h},
      {"seed", cfg.seed},
      {"counts",
       {{"train", ds.train.size()}, {"test", ds.test.size()}, {"validation", ds.validation.size()}}},
      {"files",
       {{"train_pairs", "train.ndjson"}, {"test_pairs", "test.ndjson"},
        {"validation_logs", val_files}}}};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return ds;
}

/// Loads a dataset previously written by split_and_save.
inline SplitDataset load_dataset(const std::filesystem::path& dir) {
  const nlohmann::json manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  SplitDataset ds;
  ds.train = read_pairs_ndjson(dir / manifest.at("files").at("train_pairs").get<std::string>());
  ds.test = read_pairs_ndjson(dir / manifest.at("files").at("test_pairs").get<std::string>());
  ensure(manifest.at("files").contains("validation_logs"),
         "dataset manifest is missing files.validation_logs");
  for (const auto& f : manifest.at("files").at("validation_logs")) {
    ds.validation.push_back(read_pose_log(dir / f.get<std::string>()));
  }
  return ds;
}

}  // namespace driftopt

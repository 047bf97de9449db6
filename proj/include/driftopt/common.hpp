#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

namespace driftopt {

/// Raised for invalid configuration, arguments, or violated preconditions.
/// The CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces non-finite values or otherwise fails
/// numerically. The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void ensure(bool condition, const std::string& what) {
  if (!condition) throw ValidationError(what);
}

/// Deterministic random source. All draws are derived from raw mt19937_64
/// output so that streams are reproducible across standard libraries; the
/// distribution adapters in <random> do not guarantee that.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi_ * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n), bias-free.
  std::uint64_t integer(std::uint64_t n) {
    std::uint64_t x, r;
    do {
      x = gen_();
      r = x % n;
    } while (x - r > std::uint64_t(0) - n);
    return r;
  }

  /// Fisher-Yates shuffle with this source.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[integer(i)]);
    }
  }

  std::uint64_t raw() { return gen_(); }

 private:
  static constexpr double kTwoPi_ = 6.28318530717958647692;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

namespace parallel {

inline std::atomic<int>& max_jobs_slot() {
  static std::atomic<int> jobs{0};  // 0 = hardware concurrency
  return jobs;
}

inline void set_max_jobs(int jobs) { max_jobs_slot().store(jobs); }

inline int max_jobs() {
  const int j = max_jobs_slot().load();
  if (j > 0) return j;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs f(i) for i in [0, n). Work items must be independent and write to
/// disjoint locations; then the result is identical to a sequential loop.
template <class F>
void for_each(std::size_t n, F&& f) {
  const int jobs = std::min<std::size_t>(max_jobs(), n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    }));
  }
  for (auto& w : workers) w.get();
}

}  // namespace parallel

/// Shortest exact decimal form of a double (round-trips bit-exactly).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest_len);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << content;
}

inline std::string sha256_of_file(const std::filesystem::path& path) {
  return sha256_hex(read_text_file(path));
}

}  // namespace driftopt

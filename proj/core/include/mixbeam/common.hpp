// Shared aliases, error types and small numeric helpers.
#ifndef MIXBEAM_COMMON_HPP
#define MIXBEAM_COMMON_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixbeam {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kSpeedOfSound = 343.0;  // m/s

// Base class for all recoverable engine errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input data is malformed or inconsistent (bad WAV, channel mismatch, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Configuration is internally inconsistent.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A matrix that must be invertible is singular beyond the loading tolerance.
class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(const std::string& msg) : Error(msg) {}
};

// Multichannel time-domain audio. Column m holds channel m, so each channel
// is contiguous in memory. Equal channel lengths hold by construction.
struct Audio {
  double sample_rate = 16000.0;
  Eigen::ArrayXXd samples;  // num_samples x num_channels

  Audio() = default;
  Audio(double sr, Eigen::Index num_samples, Eigen::Index num_channels)
      : sample_rate(sr), samples(Eigen::ArrayXXd::Zero(num_samples, num_channels)) {}

  Eigen::Index num_samples() const { return samples.rows(); }
  Eigen::Index num_channels() const { return samples.cols(); }

  // Assembles from per-channel buffers; throws DataError on length mismatch.
  static Audio from_channels(double sr, const std::vector<std::vector<double>>& channels) {
    Audio out;
    out.sample_rate = sr;
    if (channels.empty()) throw DataError("Audio::from_channels: no channels");
    const std::size_t len = channels.front().size();
    for (const auto& c : channels) {
      if (c.size() != len) throw DataError("Audio::from_channels: channel length mismatch");
    }
    out.samples.resize(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(channels.size()));
    for (std::size_t m = 0; m < channels.size(); ++m) {
      for (std::size_t i = 0; i < len; ++i) {
        out.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = channels[m][i];
      }
    }
    return out;
  }
};

// Deterministic RNG used by the simulator and tests. Wraps a fixed-width
// generator and a hand-rolled Box-Muller gaussian so that output streams do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  // xorshift* core
  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (cached second value)
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  // complex circular gaussian, unit variance per complex sample
  std::complex<double> cgaussian() { return {gaussian() * M_SQRT1_2, gaussian() * M_SQRT1_2}; }

  // derive an independent stream for a sub-entity (source, mic, ...)
  Rng fork(std::uint64_t tag) const {
    return Rng(state_ ^ (0x9E3779B97F4A7C15ULL * (tag + 0x632BE59BD9B4E019ULL)));
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mixbeam

#endif  // MIXBEAM_COMMON_HPP

// Streaming STFT analysis/synthesis with perfect reconstruction.
//
// Frame t of the analysis covers input samples [t*hop - (window_len-hop),
// t*hop + hop); the leading window_len-hop samples of frame 0 are zeros.
// Emitting frame t therefore needs input only up to sample t*hop + hop,
// which keeps the pipeline causal with one hop of algorithmic latency.
#ifndef MIXBEAM_STFT_HPP
#define MIXBEAM_STFT_HPP

#include <memory>
#include <vector>

#include "mixbeam/common.hpp"

namespace mixbeam {

enum class WindowType { SqrtHann };

struct StftConfig {
  double sample_rate = 16000.0;
  int window_len = 320;  // 20 ms at 16 kHz
  int hop = 80;          // 5 ms at 16 kHz
  WindowType window = WindowType::SqrtHann;
  int fft_size = 320;    // must equal window_len

  int num_bins() const { return fft_size / 2 + 1; }
  void validate() const;  // throws ConfigError on violated invariants
};

// One analysis frame: column f holds the M-channel observation at bin f.
struct MultichannelSpectrum {
  long frame_index = 0;
  CMat bins;  // num_channels x num_bins

  Eigen::Index num_channels() const { return bins.rows(); }
  Eigen::Index num_bins() const { return bins.cols(); }
  bool all_finite() const { return bins.allFinite(); }
};

// Periodic window of the given type; length window_len.
std::vector<double> make_window(WindowType type, int window_len);

// Overlap-added product of the analysis/synthesis window pair, evaluated on
// one hop of the steady state. Returns {mean, max relative deviation}.
// The pair satisfies constant overlap-add when the deviation is ~0.
struct ColaProfile {
  double constant = 0.0;
  double max_rel_deviation = 0.0;
};
ColaProfile cola_profile(const StftConfig& cfg);

class StftAnalyzer {
 public:
  StftAnalyzer(const StftConfig& cfg, int num_channels);
  ~StftAnalyzer();
  StftAnalyzer(StftAnalyzer&&) noexcept;
  StftAnalyzer& operator=(StftAnalyzer&&) noexcept;

  // Appends samples (num x channels); emits all frames they complete.
  std::vector<MultichannelSpectrum> push(const Eigen::Ref<const Eigen::ArrayXXd>& block);
  // Emits the final zero-padded frame if a partial hop is pending.
  std::vector<MultichannelSpectrum> flush();
  // Emits window_len/hop - 1 zero-input frames that carry the remaining
  // overlap of the last real samples, so a downstream synthesizer can
  // reconstruct the signal through its very end. Call after flush().
  std::vector<MultichannelSpectrum> drain();

  const StftConfig& config() const;
  int num_channels() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class StftSynthesizer {
 public:
  StftSynthesizer(const StftConfig& cfg, int num_channels);
  ~StftSynthesizer();
  StftSynthesizer(StftSynthesizer&&) noexcept;
  StftSynthesizer& operator=(StftSynthesizer&&) noexcept;

  // Consumes the next frame (indices must be consecutive from 0) and returns
  // every output sample that no future frame can change.
  Eigen::ArrayXXd push(const MultichannelSpectrum& frame);
  // Returns the remaining tail. Total output length is num_frames*hop.
  Eigen::ArrayXXd flush();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Batch helpers. analyze emits ceil(len/hop) frames; synthesize returns
// frames.size()*hop samples, or target_len if non-negative.
std::vector<MultichannelSpectrum> analyze(const Audio& audio, const StftConfig& cfg);
Audio synthesize(const std::vector<MultichannelSpectrum>& frames, const StftConfig& cfg,
                 Eigen::Index target_len = -1);

}  // namespace mixbeam

#endif  // MIXBEAM_STFT_HPP

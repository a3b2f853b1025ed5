// Streaming multichannel enhancement engine.
//
// Per frequency bin the engine tracks the captured-signal SCM (and, in
// online mode, a speech-presence-gated interference SCM) and applies the
// configured beamformer. Filters are applied in factored matrix-vector form
// so the per-bin cost stays O(M^2):
//   mod_pmwf:  y = phi_x (phi_v^-1 x) / (gamma + lambda_x)
//   gev_mvdr:  y = b (u^H x),  b = phi_v u / (u^H phi_v u)
//   ur_mwf:    y = x - phi_v (phi_x^-1 x)
#ifndef MIXBEAM_ENHANCER_HPP
#define MIXBEAM_ENHANCER_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixbeam/beamformers.hpp"
#include "mixbeam/scm_tracking.hpp"
#include "mixbeam/stft.hpp"

namespace mixbeam {

enum class NoiseScmMode { PrecomputedFromFile, OnlineSpp };

struct RunConfig {
  BeamformerKind beamformer = BeamformerKind::ModPmwfApprox;
  double gamma = 0.0;
  std::optional<double> beta;  // forgetting factor; per-beamformer default when unset
  double alpha = 0.9998;       // interference forgetting factor
  NoiseScmMode noise_scm_mode = NoiseScmMode::PrecomputedFromFile;
  StftConfig stft;
  int power_iters = 1;
  std::uint64_t seed = 0;
  // online mode without a noise file: allow blind interference-SCM init
  bool online_fallback_init = true;

  // 0.85 for mod_pmwf/gev_mvdr, 0.99 for ur_mwf
  double resolved_beta() const;
  void validate() const;
};

RunConfig run_config_from_json(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

struct TimingReport {
  long frames = 0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double hop_budget_ms = 0.0;
  long over_budget_frames = 0;
  double realtime_factor = 0.0;  // processing time / audio time
};
std::string timing_report_to_json(const TimingReport& rep);

class Enhancer {
 public:
  // noise_scms: per-bin interference SCMs (required for precomputed mode,
  // optional warm start for online mode).
  Enhancer(const RunConfig& cfg, int num_channels,
           const std::vector<HermitianScm>* noise_scms = nullptr);
  ~Enhancer();
  Enhancer(Enhancer&&) noexcept;
  Enhancer& operator=(Enhancer&&) noexcept;

  // Advances all per-bin state with the captured frame and returns the
  // enhanced frame (all M outputs).
  MultichannelSpectrum process_frame(const MultichannelSpectrum& x);

  // Applies the current filters (as left by the last process_frame) to
  // another spectrum without touching any state. Used for shadow filtering
  // of ground-truth components.
  MultichannelSpectrum apply_current(const MultichannelSpectrum& s) const;

  // Full M x M weight matrices of the current filters, one per bin. O(M^3)
  // per bin; diagnostics and tests only.
  std::vector<CMat> current_weights() const;

  // Current per-bin interference SCM estimate (tracked state in online mode,
  // the supplied estimate otherwise).
  std::vector<HermitianScm> interference_scms() const;

  TimingReport timing_report() const;
  long degenerate_bin_events() const;
  long skipped_frames() const;
  int num_channels() const;
  const RunConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Batch pipeline: analyze -> enhance -> synthesize, streaming frame by frame.
struct EnhanceResult {
  Audio enhanced;
  TimingReport timing;
};
EnhanceResult enhance_audio(const RunConfig& cfg, const Audio& x,
                            const std::vector<HermitianScm>* noise_scms = nullptr);

// Same pass with shadow filtering of the ground-truth components by the
// weights computed from x. d_hat + v_hat matches enhanced up to linearity
// rounding.
struct ScenePassResult {
  Audio enhanced;
  Audio d_hat;
  Audio v_hat;
  TimingReport timing;
};
ScenePassResult enhance_with_components(const RunConfig& cfg, const Audio& x, const Audio& d,
                                        const Audio& v,
                                        const std::vector<HermitianScm>* noise_scms = nullptr);

}  // namespace mixbeam

#endif  // MIXBEAM_ENHANCER_HPP

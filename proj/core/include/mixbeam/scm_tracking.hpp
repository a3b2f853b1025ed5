// Online spatial covariance estimation.
//
// ScmTracker keeps the captured-signal SCM with exponential forgetting,
// phi <- beta*phi + (1-beta)*x*x^H, optionally co-tracking phi^-1 (and
// log det phi) through rank-1 updates. InterferenceTracker does the same
// for the interference SCM with a speech-presence-gated forgetting factor
// alpha' = alpha + (1-alpha)*q.
#ifndef MIXBEAM_SCM_TRACKING_HPP
#define MIXBEAM_SCM_TRACKING_HPP

#include <optional>
#include <vector>

#include "mixbeam/hermitian.hpp"
#include "mixbeam/stft.hpp"

namespace mixbeam {

class ScmTracker {
 public:
  // phi0 seeds the estimate; enable track_inverse to maintain phi^-1/logdet.
  ScmTracker(double beta, HermitianScm phi0, bool track_inverse = false);

  // Rank-1 recursive update. Frames containing NaN/Inf are skipped (the
  // tracker is left untouched and skipped_frames() is incremented).
  void update(const CVec& x);

  const HermitianScm& phi() const { return phi_; }
  const CMat& phi_inv() const;
  double logdet() const;
  double beta() const { return beta_; }
  bool tracks_inverse() const { return track_inverse_; }
  long frames() const { return frames_; }
  long skipped_frames() const { return skipped_; }

  // frames between full re-inversions that arrest rank-1 drift
  static constexpr long kReinvertPeriod = 1000;

 private:
  void refresh_inverse();

  double beta_;
  HermitianScm phi_;
  bool track_inverse_;
  CMat phi_inv_;
  double logdet_ = 0.0;
  long frames_ = 0;
  long skipped_ = 0;
};

class InterferenceTracker {
 public:
  InterferenceTracker(double alpha, HermitianScm phi_v0, bool track_inverse = true);

  // Gated update with speech presence probability q in [0, 1]. q = 1 freezes
  // the estimate bit-for-bit. NaN frames are skipped as in ScmTracker.
  void update(const CVec& x, double q);

  // Override the base forgetting factor for the next updates (warmup ramps).
  void set_alpha(double alpha);

  const HermitianScm& phi_v() const { return phi_v_; }
  const CMat& phi_v_inv() const;
  double logdet() const;
  double alpha() const { return alpha_; }
  double q_last() const { return q_last_; }
  long frames() const { return frames_; }
  long skipped_frames() const { return skipped_; }

 private:
  void refresh_inverse();

  double alpha_;
  HermitianScm phi_v_;
  bool track_inverse_;
  CMat phi_v_inv_;
  double logdet_ = 0.0;
  double q_last_ = 0.0;
  long frames_ = 0;
  long skipped_ = 0;
};

struct SppEstimate {
  double q = 0.5;
  bool degenerate = false;  // phi_x not invertible; q is uninformative
};

// Speech presence probability from the Gaussian likelihood ratio
//   Lambda = [det(phi_v)/det(phi_x)] * exp(x^H (phi_v^-1 - phi_x^-1) x),
//   q = Lambda / (1 + Lambda),
// with the exponent clamped to [-30, 30]. Evaluated in the log domain.
SppEstimate spp_estimate(const CVec& x, const CMat& phi_v_inv, const HermitianScm& phi_x);

// Hot-path variant with all determinant/inverse state precomputed.
double spp_estimate_cached(const CVec& x, const CMat& phi_v_inv, double logdet_v,
                           const CMat& phi_x_inv, double logdet_x);

// Per-bin time average of x*x^H over noise-only audio. Throws DataError when
// fewer than min_frames frames are available or (unless allow_zero) when the
// audio is identically zero.
std::vector<HermitianScm> init_from_noise(const Audio& audio, const StftConfig& cfg,
                                          long min_frames = 10, bool allow_zero = false);

}  // namespace mixbeam

#endif  // MIXBEAM_SCM_TRACKING_HPP

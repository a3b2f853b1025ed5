#include "mixbeam/scm_tracking.hpp"

#include <algorithm>
#include <cmath>

namespace mixbeam {

namespace {
constexpr double kSppExponentClamp = 30.0;

double sigmoid(double v) {
  if (v >= 0) {
    const double e = std::exp(-v);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}
}  // namespace

ScmTracker::ScmTracker(double beta, HermitianScm phi0, bool track_inverse)
    : beta_(beta), phi_(std::move(phi0)), track_inverse_(track_inverse) {
  if (!(beta_ >= 0.0) || beta_ > 1.0) throw ConfigError("ScmTracker: beta must lie in [0, 1]");
  if (track_inverse_ && beta_ == 0.0)
    throw ConfigError("ScmTracker: beta = 0 makes phi rank-1, inverse tracking impossible");
  if (track_inverse_) refresh_inverse();
}

void ScmTracker::refresh_inverse() {
  phi_inv_ = invert_hpd(phi_);
  logdet_ = logdet_hpd(phi_.m + CMat::Identity(phi_.dim(), phi_.dim()) *
                                    (kDiagonalLoading * std::abs(phi_.m.trace().real()) /
                                     static_cast<double>(phi_.dim())));
}

const CMat& ScmTracker::phi_inv() const {
  if (!track_inverse_) throw ConfigError("ScmTracker: inverse tracking disabled");
  return phi_inv_;
}

double ScmTracker::logdet() const {
  if (!track_inverse_) throw ConfigError("ScmTracker: inverse tracking disabled");
  return logdet_;
}

void ScmTracker::update(const CVec& x) {
  if (x.size() != phi_.dim()) throw DataError("ScmTracker: observation dimension mismatch");
  if (!x.allFinite()) {
    ++skipped_;
    return;
  }
  ++frames_;
  if (beta_ < 1.0) {
    if (track_inverse_) {
      logdet_ = rank1_logdet_update(logdet_, phi_inv_, x, beta_);
      phi_inv_ = rank1_inverse_update(phi_inv_, x, beta_);
    }
    phi_.m = beta_ * phi_.m + (1.0 - beta_) * (x * x.adjoint());
    phi_.symmetrize();
    if (track_inverse_ && frames_ % kReinvertPeriod == 0) refresh_inverse();
  }
}

InterferenceTracker::InterferenceTracker(double alpha, HermitianScm phi_v0, bool track_inverse)
    : alpha_(alpha), phi_v_(std::move(phi_v0)), track_inverse_(track_inverse) {
  if (!(alpha_ > 0.0) || alpha_ > 1.0) throw ConfigError("InterferenceTracker: alpha must lie in (0, 1]");
  if (track_inverse_) refresh_inverse();
}

void InterferenceTracker::set_alpha(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("InterferenceTracker: alpha must lie in (0, 1]");
  alpha_ = alpha;
}

void InterferenceTracker::refresh_inverse() {
  phi_v_inv_ = invert_hpd(phi_v_);
  logdet_ = logdet_hpd(phi_v_.m + CMat::Identity(phi_v_.dim(), phi_v_.dim()) *
                                      (kDiagonalLoading * std::abs(phi_v_.m.trace().real()) /
                                       static_cast<double>(phi_v_.dim())));
}

const CMat& InterferenceTracker::phi_v_inv() const {
  if (!track_inverse_) throw ConfigError("InterferenceTracker: inverse tracking disabled");
  return phi_v_inv_;
}

double InterferenceTracker::logdet() const {
  if (!track_inverse_) throw ConfigError("InterferenceTracker: inverse tracking disabled");
  return logdet_;
}

void InterferenceTracker::update(const CVec& x, double q) {
  if (x.size() != phi_v_.dim()) throw DataError("InterferenceTracker: observation dimension mismatch");
  if (!(q >= 0.0) || q > 1.0)
    throw std::invalid_argument("InterferenceTracker: q must lie in [0, 1]");
  if (!x.allFinite()) {
    ++skipped_;
    return;
  }
  ++frames_;
  q_last_ = q;
  if (q >= 1.0) return;  // q = 1 freezes the estimate bit-for-bit
  const double alpha_eff = alpha_ + (1.0 - alpha_) * q;
  if (alpha_eff >= 1.0) return;
  if (track_inverse_) {
    logdet_ = rank1_logdet_update(logdet_, phi_v_inv_, x, alpha_eff);
    phi_v_inv_ = rank1_inverse_update(phi_v_inv_, x, alpha_eff);
  }
  phi_v_.m = alpha_eff * phi_v_.m + (1.0 - alpha_eff) * (x * x.adjoint());
  phi_v_.symmetrize();
  // rank-1 inverse tracking is only accurate for small steps; rebuild after
  // aggressive updates and periodically to arrest drift
  if (track_inverse_ && (alpha_eff < 0.9 || frames_ % ScmTracker::kReinvertPeriod == 0))
    refresh_inverse();
}

double spp_estimate_cached(const CVec& x, const CMat& phi_v_inv, double logdet_v,
                           const CMat& phi_x_inv, double logdet_x) {
  const double quad_v = (x.dot(phi_v_inv * x)).real();
  const double quad_x = (x.dot(phi_x_inv * x)).real();
  const double exponent = std::clamp(quad_v - quad_x, -kSppExponentClamp, kSppExponentClamp);
  const double log_lambda = logdet_v - logdet_x + exponent;
  return sigmoid(log_lambda);
}

SppEstimate spp_estimate(const CVec& x, const CMat& phi_v_inv, const HermitianScm& phi_x) {
  SppEstimate out;
  if (x.size() != phi_x.dim() || phi_v_inv.rows() != phi_x.dim())
    throw DataError("spp_estimate: shape mismatch");
  double logdet_x = 0.0;
  CMat phi_x_inv;
  try {
    logdet_x = logdet_hpd(phi_x.m);
    phi_x_inv = invert_hpd(phi_x);
  } catch (const SingularMatrixError&) {
    out.q = 0.5;
    out.degenerate = true;
    return out;
  }
  // det(phi_v) = 1/det(phi_v_inv)
  const double logdet_v = -logdet_hpd(phi_v_inv);
  out.q = spp_estimate_cached(x, phi_v_inv, logdet_v, phi_x_inv, logdet_x);
  return out;
}

std::vector<HermitianScm> init_from_noise(const Audio& audio, const StftConfig& cfg,
                                          long min_frames, bool allow_zero) {
  const auto frames = analyze(audio, cfg);
  if (static_cast<long>(frames.size()) < min_frames)
    throw DataError("init_from_noise: insufficient data (" + std::to_string(frames.size()) +
                    " frames, need " + std::to_string(min_frames) + ")");
  const bool silent = (audio.samples == 0.0).all();
  if (silent && !allow_zero) throw DataError("init_from_noise: audio is identically zero");

  const auto M = audio.num_channels();
  const int F = cfg.num_bins();
  std::vector<HermitianScm> scms(static_cast<size_t>(F), HermitianScm(M));
  for (const auto& frame : frames) {
    for (int f = 0; f < F; ++f) {
      const auto x = frame.bins.col(f);
      scms[static_cast<size_t>(f)].m.noalias() += x * x.adjoint();
    }
  }
  const double scale = 1.0 / static_cast<double>(frames.size());
  for (auto& s : scms) {
    s.m *= scale;
    s.symmetrize();
  }
  return scms;
}

}  // namespace mixbeam

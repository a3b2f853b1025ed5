// Per-frequency beamforming weight matrices, applied as y = W^H x.
//
// Mod-PMWF replaces the single-source desired SCM of a PMWF with the SCM of
// the whole desired mixture, which makes it a power-weighted sum of MVDR
// beamformers, one per source, without knowing the number of sources. The
// practical form estimates the desired-mixture SCM by the captured SCM.
#ifndef MIXBEAM_BEAMFORMERS_HPP
#define MIXBEAM_BEAMFORMERS_HPP

#include <vector>

#include "mixbeam/hermitian.hpp"

namespace mixbeam {

enum class BeamformerKind {
  ModPmwfApprox,
  ModPmwfExact,
  PmwfSingle,
  MvdrPerSource,
  GevMvdr,
  MaxSnr,
  UrMwf,
  Identity,
};

const char* to_string(BeamformerKind kind);

// Noise-reduction / speech-distortion tradeoff weight, gamma >= 0.
struct TradeoffGamma {
  double gamma = 0.0;
  TradeoffGamma() = default;
  explicit TradeoffGamma(double g) : gamma(g) {
    if (!(g >= 0.0)) throw ConfigError("TradeoffGamma: gamma must be >= 0");
  }
};

struct BeamformerWeights {
  BeamformerKind kind = BeamformerKind::Identity;
  CMat W;  // M x M; output y = W^H x
  bool degenerate = false;    // silence fallback (W = I/M) was taken
  bool rank_warning = false;  // pmwf_single input failed the rank-1 check

  Eigen::Index dim() const { return W.rows(); }
};

// W = phi_v^-1 phi_x / (gamma + lambda_x), lambda_x = tr(phi_v^-1 phi_x).
// Near-silent frames (gamma + lambda_x < 1e-12) fall back to W = I/M.
BeamformerWeights mod_pmwf_approx(const CMat& phi_v_inv, const HermitianScm& phi_x,
                                  const TradeoffGamma& gamma = {});

// Same with the true desired-mixture SCM phi_d in place of phi_x.
BeamformerWeights mod_pmwf_exact(const CMat& phi_v_inv, const HermitianScm& phi_d,
                                 const TradeoffGamma& gamma = {});

// MVDR for one source: W = phi_v^-1 phi_d_n / tr(phi_v^-1 phi_d_n).
// Distortionless on its source: W^H h = h when phi_d_n = sigma^2 h h^H.
// Throws DataError for a silent source (lambda <= 1e-12).
BeamformerWeights per_source_mvdr(const CMat& phi_v_inv, const HermitianScm& phi_d_n);

struct DecompositionWeights {
  std::vector<double> mu;      // mu_n = lambda_n / (gamma + sum lambda)
  std::vector<double> lambda;  // lambda_n = tr(phi_v^-1 phi_d_n)
  double lambda_total = 0.0;
};

// Per-source weights of the Mod-PMWF expansion; sum(mu) = 1 at gamma = 0.
DecompositionWeights decomposition_weights(const CMat& phi_v_inv,
                                           const std::vector<HermitianScm>& phi_d_list,
                                           const TradeoffGamma& gamma = {});

// Single-source PMWF, W = phi_v^-1 phi_d1 / (gamma + lambda). phi_d1 should
// be rank-1; a failed rank check sets rank_warning and proceeds.
BeamformerWeights pmwf_single(const CMat& phi_v_inv, const HermitianScm& phi_d1,
                              const TradeoffGamma& gamma = {});

struct GevMvdrResult {
  BeamformerWeights weights;
  CVec u;  // updated dominant generalized eigenvector estimate
  bool degenerate = false;
};

// GEV-based MVDR: u from warm-started power iteration on (phi_x, phi_v),
// then W = u u^H phi_v / tr(u u^H phi_v). A degenerate iteration reuses
// u_prev.
GevMvdrResult gev_mvdr(const HermitianScm& phi_v, const CMat& phi_v_inv, const HermitianScm& phi_x,
                       const CVec& u_prev, int iters = 1);

// MaxSNR matrix form W = u b^H with b = phi_v u / tr(u u^H phi_v);
// algebraically identical to gev_mvdr for the same u.
BeamformerWeights max_snr_form(const HermitianScm& phi_v, const CVec& u);

// W = phi_x^-1 (phi_x - phi_v), with a loaded solve for singular phi_x.
BeamformerWeights ur_mwf(const HermitianScm& phi_x, const HermitianScm& phi_v);

// eta = lambda_d / (gamma + lambda_d): the scalar relating weights at
// gamma > 0 to the gamma = 0 weights. eta = 1 at gamma = 0.
double eta_factor(double lambda_d, const TradeoffGamma& gamma);

// y = W^H x.
CVec apply(const BeamformerWeights& weights, const CVec& x);

}  // namespace mixbeam

#endif  // MIXBEAM_BEAMFORMERS_HPP

#include "mixbeam/beamformers.hpp"

#include <Eigen/Eigenvalues>

namespace mixbeam {

namespace {
constexpr double kSilenceEps = 1e-12;

BeamformerWeights scaled_cross_form(BeamformerKind kind, const CMat& phi_v_inv, const CMat& phi,
                                    double gamma) {
  BeamformerWeights out;
  out.kind = kind;
  const Eigen::Index M = phi.rows();
  const double lambda = trace_of_product(phi_v_inv, phi);
  const double denom = gamma + lambda;
  if (!(denom > kSilenceEps)) {
    out.W = CMat::Identity(M, M) / static_cast<double>(M);
    out.degenerate = true;
    return out;
  }
  out.W = (phi_v_inv * phi) / denom;
  return out;
}
}  // namespace

const char* to_string(BeamformerKind kind) {
  switch (kind) {
    case BeamformerKind::ModPmwfApprox: return "mod_pmwf";
    case BeamformerKind::ModPmwfExact: return "mod_pmwf_exact";
    case BeamformerKind::PmwfSingle: return "pmwf";
    case BeamformerKind::MvdrPerSource: return "mvdr";
    case BeamformerKind::GevMvdr: return "gev_mvdr";
    case BeamformerKind::MaxSnr: return "max_snr";
    case BeamformerKind::UrMwf: return "ur_mwf";
    case BeamformerKind::Identity: return "identity";
  }
  return "unknown";
}

BeamformerWeights mod_pmwf_approx(const CMat& phi_v_inv, const HermitianScm& phi_x,
                                  const TradeoffGamma& gamma) {
  if (phi_v_inv.rows() != phi_x.dim()) throw DataError("mod_pmwf_approx: shape mismatch");
  return scaled_cross_form(BeamformerKind::ModPmwfApprox, phi_v_inv, phi_x.m, gamma.gamma);
}

BeamformerWeights mod_pmwf_exact(const CMat& phi_v_inv, const HermitianScm& phi_d,
                                 const TradeoffGamma& gamma) {
  if (phi_v_inv.rows() != phi_d.dim()) throw DataError("mod_pmwf_exact: shape mismatch");
  return scaled_cross_form(BeamformerKind::ModPmwfExact, phi_v_inv, phi_d.m, gamma.gamma);
}

BeamformerWeights per_source_mvdr(const CMat& phi_v_inv, const HermitianScm& phi_d_n) {
  if (phi_v_inv.rows() != phi_d_n.dim()) throw DataError("per_source_mvdr: shape mismatch");
  BeamformerWeights out;
  out.kind = BeamformerKind::MvdrPerSource;
  const double lambda = trace_of_product(phi_v_inv, phi_d_n.m);
  if (!(lambda > kSilenceEps)) throw DataError("per_source_mvdr: silent source (lambda ~ 0)");
  out.W = (phi_v_inv * phi_d_n.m) / lambda;
  return out;
}

DecompositionWeights decomposition_weights(const CMat& phi_v_inv,
                                           const std::vector<HermitianScm>& phi_d_list,
                                           const TradeoffGamma& gamma) {
  if (phi_d_list.empty()) throw DataError("decomposition_weights: no sources");
  DecompositionWeights out;
  out.lambda.reserve(phi_d_list.size());
  for (const auto& phi : phi_d_list) {
    const double l = trace_of_product(phi_v_inv, phi.m);
    if (l < 0 && l > -kSilenceEps) {
      out.lambda.push_back(0.0);
    } else {
      out.lambda.push_back(l);
    }
    out.lambda_total += out.lambda.back();
  }
  if (!(out.lambda_total > kSilenceEps))
    throw DataError("decomposition_weights: all sources silent");
  out.mu.reserve(phi_d_list.size());
  for (double l : out.lambda) out.mu.push_back(l / (gamma.gamma + out.lambda_total));
  return out;
}

BeamformerWeights pmwf_single(const CMat& phi_v_inv, const HermitianScm& phi_d1,
                              const TradeoffGamma& gamma) {
  if (phi_v_inv.rows() != phi_d1.dim()) throw DataError("pmwf_single: shape mismatch");
  BeamformerWeights out = scaled_cross_form(BeamformerKind::PmwfSingle, phi_v_inv, phi_d1.m,
                                            gamma.gamma);
  out.kind = BeamformerKind::PmwfSingle;
  if (phi_d1.dim() > 1) {
    Eigen::SelfAdjointEigenSolver<CMat> es(phi_d1.m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double top = ev(ev.size() - 1);
    const double second = ev(ev.size() - 2);
    if (top > 0 && second > 1e-6 * top) out.rank_warning = true;
  }
  return out;
}

GevMvdrResult gev_mvdr(const HermitianScm& phi_v, const CMat& phi_v_inv, const HermitianScm& phi_x,
                       const CVec& u_prev, int iters) {
  GevMvdrResult res;
  auto pi = power_iteration(phi_v_inv, phi_x, u_prev, iters);
  res.degenerate = pi.degenerate;
  res.u = pi.degenerate ? u_prev : pi.u;
  res.weights = max_snr_form(phi_v, res.u);
  res.weights.kind = BeamformerKind::GevMvdr;
  return res;
}

BeamformerWeights max_snr_form(const HermitianScm& phi_v, const CVec& u) {
  if (phi_v.dim() != u.size()) throw DataError("max_snr_form: shape mismatch");
  BeamformerWeights out;
  out.kind = BeamformerKind::MaxSnr;
  const CVec pv_u = phi_v.m * u;
  const double tr = (u.dot(pv_u)).real();  // tr(u u^H phi_v) = u^H phi_v u
  if (!(tr > kSilenceEps)) {
    out.W = CMat::Identity(u.size(), u.size()) / static_cast<double>(u.size());
    out.degenerate = true;
    return out;
  }
  const CVec b = pv_u / tr;
  out.W = u * b.adjoint();
  return out;
}

BeamformerWeights ur_mwf(const HermitianScm& phi_x, const HermitianScm& phi_v) {
  if (phi_x.dim() != phi_v.dim()) throw DataError("ur_mwf: shape mismatch");
  BeamformerWeights out;
  out.kind = BeamformerKind::UrMwf;
  out.W = solve_hpd(phi_x, phi_x.m - phi_v.m);
  return out;
}

double eta_factor(double lambda_d, const TradeoffGamma& gamma) {
  if (!(lambda_d >= 0.0)) throw DataError("eta_factor: lambda_d must be >= 0");
  if (gamma.gamma == 0.0) return 1.0;
  return lambda_d / (gamma.gamma + lambda_d);
}

CVec apply(const BeamformerWeights& weights, const CVec& x) {
  if (weights.W.rows() != x.size()) throw DataError("apply: dimension mismatch");
  return weights.W.adjoint() * x;
}

}  // namespace mixbeam

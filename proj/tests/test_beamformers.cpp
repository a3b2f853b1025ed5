#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mixbeam/beamformers.hpp"
#include "oracles.hpp"

using namespace mixbeam;

namespace {
double rel_inf(const CMat& got, const CMat& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(want.cwiseAbs().maxCoeff(), 1e-300);
}
}  // namespace

TEST_CASE("mod_pmwf_approx: phi_x = phi_v gives W = I/M") {
  Rng rng(1);
  for (Eigen::Index m : {2, 4, 6}) {
    const auto phi_v = test::random_hpd(rng, m);
    const CMat phi_v_inv = invert_hpd(phi_v);
    const auto w = mod_pmwf_approx(phi_v_inv, phi_v);
    CHECK(rel_inf(w.W, CMat::Identity(m, m) / static_cast<double>(m)) < 1e-10);
    CHECK(!w.degenerate);
  }
}

TEST_CASE("mod_pmwf_approx: scalar M = 1 passes the signal through") {
  CMat phi_v_inv(1, 1);
  phi_v_inv(0, 0) = 1.0 / 0.3;
  HermitianScm phi_x(CMat(CMat::Constant(1, 1, 2.7)));
  const auto w = mod_pmwf_approx(phi_v_inv, phi_x);
  CHECK(std::abs(w.W(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("mod_pmwf: silence falls back to I/M with the degenerate flag") {
  const CMat phi_v_inv = CMat::Identity(3, 3);
  HermitianScm silence(3);
  const auto w = mod_pmwf_approx(phi_v_inv, silence);
  CHECK(w.degenerate);
  CHECK(rel_inf(w.W, CMat::Identity(3, 3) / 3.0) == 0.0);
}

TEST_CASE("decomposition identity: mod_pmwf_exact = sum of weighted per-source MVDRs") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);  // 2..6
    const int n_src = 1 + static_cast<int>(rng.next_u64() % 4);                // 1..4
    const double gamma_val = std::vector<double>{0.0, 0.5, 1.0}[trial % 3];

    const auto phi_v = test::random_hpd(rng, m);
    const CMat phi_v_inv = invert_hpd(phi_v);
    std::vector<HermitianScm> sources;
    CMat phi_d_sum = CMat::Zero(m, m);
    for (int n = 0; n < n_src; ++n) {
      sources.push_back(test::random_rank1(rng, m, rng.uniform(0.1, 4.0)));
      phi_d_sum += sources.back().m;
    }

    const TradeoffGamma gamma(gamma_val);
    const auto exact = mod_pmwf_exact(phi_v_inv, HermitianScm(phi_d_sum), gamma);
    const auto dec = decomposition_weights(phi_v_inv, sources, gamma);

    CMat sum = CMat::Zero(m, m);
    for (int n = 0; n < n_src; ++n)
      sum += dec.mu[static_cast<size_t>(n)] * per_source_mvdr(phi_v_inv, sources[static_cast<size_t>(n)]).W;

    CHECK(rel_inf(exact.W, sum) < 1e-10);
    if (gamma_val == 0.0) {
      double mu_total = 0.0;
      for (double mu : dec.mu) mu_total += mu;
      CHECK(std::abs(mu_total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("approximation identity: approx = mu_d' exact + mu_v' I/M") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const double gamma_val = std::vector<double>{0.0, 0.5, 1.0}[trial % 3];
    const auto phi_v = test::random_hpd(rng, m);
    const CMat phi_v_inv = invert_hpd(phi_v);
    const auto phi_d = test::random_hpd(rng, m, 0.01);
    const HermitianScm phi_x(CMat(phi_v.m + phi_d.m));

    const TradeoffGamma gamma(gamma_val);
    const auto approx = mod_pmwf_approx(phi_v_inv, phi_x, gamma);
    const auto exact = mod_pmwf_exact(phi_v_inv, phi_d, gamma);

    const double lambda_d = trace_of_product(phi_v_inv, phi_d.m);
    const double lambda_v = static_cast<double>(m);
    const double mu_d = (gamma_val + lambda_d) / (gamma_val + lambda_d + lambda_v);
    const double mu_v = lambda_v / (gamma_val + lambda_d + lambda_v);
    CHECK(std::abs(mu_d + mu_v - 1.0) < 1e-12);

    const CMat combo = mu_d * exact.W + mu_v * CMat::Identity(m, m) / static_cast<double>(m);
    CHECK(rel_inf(approx.W, combo) < 1e-10);
  }
}

TEST_CASE("gamma scaling: W(gamma) = eta * W(0)") {
  Rng rng(4);
  const Eigen::Index m = 4;
  const auto phi_v = test::random_hpd(rng, m);
  const CMat phi_v_inv = invert_hpd(phi_v);
  const auto phi_d = test::random_hpd(rng, m);
  const double lambda_d = trace_of_product(phi_v_inv, phi_d.m);

  const auto w0 = mod_pmwf_exact(phi_v_inv, phi_d, TradeoffGamma(0.0));
  for (double g : {0.1, 1.0, 10.0}) {
    const auto wg = mod_pmwf_exact(phi_v_inv, phi_d, TradeoffGamma(g));
    const double eta = eta_factor(lambda_d, TradeoffGamma(g));
    CHECK(rel_inf(wg.W, eta * w0.W) < 1e-12);
  }
}

TEST_CASE("per_source_mvdr: distortionless and scale invariant") {
  // phi_v = I, h = e1: W = e1 e1^H
  {
    CMat I3 = CMat::Identity(3, 3);
    CVec h = CVec::Zero(3);
    h(0) = 1.0;
    const auto w = per_source_mvdr(I3, HermitianScm(CMat(h * h.adjoint())));
    CMat expect = CMat::Zero(3, 3);
    expect(0, 0) = 1.0;
    CHECK(rel_inf(w.W, expect) < 1e-12);
    CHECK((w.W.adjoint() * h - h).norm() < 1e-12);
  }

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const auto phi_v = test::random_hpd(rng, m);
    const CMat phi_v_inv = invert_hpd(phi_v);
    const CVec h = test::random_cvec(rng, m);
    const HermitianScm phi_d(CMat(h * h.adjoint()));

    const auto w = per_source_mvdr(phi_v_inv, phi_d);
    CHECK((w.W.adjoint() * h - h).norm() < 1e-10 * h.norm());

    // scaling the source SCM cancels
    const auto w2 = per_source_mvdr(phi_v_inv, HermitianScm(CMat(7.5 * phi_d.m)));
    CHECK(rel_inf(w2.W, w.W) < 1e-12);
  }

  CHECK_THROWS_AS(per_source_mvdr(CMat::Identity(2, 2), HermitianScm(2)), DataError);
}

TEST_CASE("decomposition_weights: arithmetic examples") {
  Rng rng(6);
  const auto phi_v = test::random_hpd(rng, 3);
  const CMat phi_v_inv = invert_hpd(phi_v);

  // one source, gamma = 0 -> mu = 1
  const auto one = decomposition_weights(phi_v_inv, {test::random_rank1(rng, 3)}, TradeoffGamma(0.0));
  CHECK(one.mu.size() == 1);
  CHECK(one.mu[0] == doctest::Approx(1.0).epsilon(1e-12));

  // two equal-lambda sources -> (0.5, 0.5)
  const auto s = test::random_rank1(rng, 3);
  const auto two = decomposition_weights(phi_v_inv, {s, s}, TradeoffGamma(0.0));
  CHECK(two.mu[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.mu[1] == doctest::Approx(0.5).epsilon(1e-12));

  // gamma = lambda_d -> sum mu = 0.5
  const auto dec = decomposition_weights(phi_v_inv, {s}, TradeoffGamma(0.0));
  const auto half = decomposition_weights(phi_v_inv, {s}, TradeoffGamma(dec.lambda_total));
  CHECK(half.mu[0] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(decomposition_weights(phi_v_inv, {HermitianScm(3)}, TradeoffGamma(0.0)), DataError);
}

TEST_CASE("pmwf_single: gamma = 0 is the MVDR; M = 1, gamma = 1 is the Wiener gain") {
  Rng rng(7);
  const Eigen::Index m = 4;
  const auto phi_v = test::random_hpd(rng, m);
  const CMat phi_v_inv = invert_hpd(phi_v);
  const auto phi_d = test::random_rank1(rng, m);

  const auto pm = pmwf_single(phi_v_inv, phi_d, TradeoffGamma(0.0));
  const auto mv = per_source_mvdr(phi_v_inv, phi_d);
  CHECK(rel_inf(pm.W, mv.W) < 1e-12);

  // scalar Wiener gain
  const double pd = 1.7, pv = 0.4;
  CMat inv1(1, 1);
  inv1(0, 0) = 1.0 / pv;
  const auto w1 = pmwf_single(inv1, HermitianScm(CMat(CMat::Constant(1, 1, pd))), TradeoffGamma(1.0));
  CHECK(std::abs(w1.W(0, 0).real() - pd / (pd + pv)) < 1e-12);
}

TEST_CASE("pmwf_single: matches the SDW-MWF direct-inverse oracle on rank-1 sources") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 4);
    const auto phi_v = test::random_hpd(rng, m);
    const CMat phi_v_inv = invert_hpd(phi_v);
    const auto phi_d = test::random_rank1(rng, m, rng.uniform(0.2, 3.0));
    const double g = rng.uniform(0.3, 2.0);

    const auto fast = pmwf_single(phi_v_inv, phi_d, TradeoffGamma(g));
    // (phi_d + gamma phi_v)^-1 phi_d by direct dense solve
    const CMat direct = (phi_d.m + g * phi_v.m).ldlt().solve(phi_d.m);
    CHECK(rel_inf(fast.W, direct) < 1e-9);
    CHECK(!fast.rank_warning);
  }

  // full-rank input trips the rank warning but proceeds
  const auto phi_v = test::random_hpd(rng, 3);
  const auto full = test::random_hpd(rng, 3);
  const auto w = pmwf_single(invert_hpd(phi_v), full, TradeoffGamma(0.5));
  CHECK(w.rank_warning);
}

TEST_CASE("gev_mvdr: diagonal case converges to e1 e1^H and tr(W) = 1") {
  HermitianScm phi_v(CMat(CMat::Identity(2, 2)));
  HermitianScm phi_x(CMat(Eigen::Vector2cd(4.0, 1.0).asDiagonal()));
  CVec u0(2);
  u0 << M_SQRT1_2, M_SQRT1_2;
  const auto res = gev_mvdr(phi_v, CMat::Identity(2, 2), phi_x, u0, 50);
  CMat expect = CMat::Zero(2, 2);
  expect(0, 0) = 1.0;
  CHECK(rel_inf(res.weights.W, expect) < 1e-6);
  CHECK(std::abs(res.weights.W.trace().real() - 1.0) < 1e-10);
  CHECK(std::abs(res.weights.W.trace().imag()) < 1e-10);
}

TEST_CASE("gev_mvdr equals the MaxSNR form u b^H") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const auto phi_v = test::random_hpd(rng, m);
    const auto phi_x = test::random_hpd(rng, m);
    const CVec u0 = test::random_cvec(rng, m);

    const auto res = gev_mvdr(phi_v, invert_hpd(phi_v), phi_x, u0, 3);
    const auto snr = max_snr_form(phi_v, res.u);
    CHECK((res.weights.W - snr.W).cwiseAbs().maxCoeff() < 1e-12 * snr.W.cwiseAbs().maxCoeff());
    CHECK(std::abs(res.weights.W.trace().real() - 1.0) < 1e-10);
  }
}

TEST_CASE("gev_mvdr: steering identity makes the converged filter distortionless") {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 3 + static_cast<Eigen::Index>(rng.next_u64() % 3);
    const auto phi_v = test::random_hpd(rng, m);
    const CMat phi_v_inv = invert_hpd(phi_v);
    CVec h = test::random_cvec(rng, m);
    // strong single source so the dominant pair is well separated
    const double s = 20.0 / (h.dot(phi_v_inv * h)).real();
    const HermitianScm phi_x(CMat(phi_v.m + s * (h * h.adjoint())));

    const auto res = gev_mvdr(phi_v, phi_v_inv, phi_x, test::random_cvec(rng, m), 50);
    CHECK((res.weights.W.adjoint() * h - h).norm() < 1e-8 * h.norm());
  }
}

TEST_CASE("gev_mvdr: degenerate power iteration reuses u_prev") {
  HermitianScm phi_v(CMat(CMat::Identity(3, 3)));
  HermitianScm zero(3);
  CVec u0(3);
  u0 << 0.0, 1.0, 0.0;
  const auto res = gev_mvdr(phi_v, CMat::Identity(3, 3), zero, u0, 1);
  CHECK(res.degenerate);
  CHECK(test::cos_similarity(res.u, u0) > 1.0 - 1e-12);
}

TEST_CASE("ur_mwf: limits and the scalar Wiener gain") {
  Rng rng(11);
  const auto phi_x = test::random_hpd(rng, 3);

  const auto w_allpass = ur_mwf(phi_x, HermitianScm(3));
  CHECK(rel_inf(w_allpass.W, CMat::Identity(3, 3)) < 1e-8);

  const auto w_null = ur_mwf(phi_x, phi_x);
  CHECK(w_null.W.cwiseAbs().maxCoeff() < 1e-8);

  const double px = 2.0, pv = 0.5;
  const auto w1 = ur_mwf(HermitianScm(CMat(CMat::Constant(1, 1, px))),
                         HermitianScm(CMat(CMat::Constant(1, 1, pv))));
  CHECK(std::abs(w1.W(0, 0).real() - (px - pv) / px) < 1e-9);
}

TEST_CASE("eta_factor: endpoints") {
  CHECK(eta_factor(3.0, TradeoffGamma(0.0)) == 1.0);
  CHECK(eta_factor(3.0, TradeoffGamma(3.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eta_factor(0.0, TradeoffGamma(2.0)) == 0.0);
}

TEST_CASE("apply: identity, zero, and the naive matvec oracle") {
  Rng rng(12);
  const CVec x = test::random_cvec(rng, 4);

  BeamformerWeights ident{BeamformerKind::Identity, CMat::Identity(4, 4), false, false};
  CHECK((mixbeam::apply(ident, x) - x).norm() == 0.0);

  BeamformerWeights zero{BeamformerKind::Identity, CMat::Zero(4, 4), false, false};
  CHECK(mixbeam::apply(zero, x).norm() == 0.0);

  BeamformerWeights w{BeamformerKind::ModPmwfApprox, test::random_cmat(rng, 4, 4), false, false};
  const CVec got = mixbeam::apply(w, x);
  CVec naive = CVec::Zero(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) naive(i) += std::conj(w.W(j, i)) * x(j);
  CHECK((got - naive).norm() < 1e-12 * naive.norm());

  CHECK_THROWS_AS(mixbeam::apply(w, test::random_cvec(rng, 3)), DataError);
}

TEST_CASE("weight-scale invariance: joint scaling of phi_x and phi_v at gamma = 0") {
  Rng rng(13);
  const Eigen::Index m = 4;
  const auto phi_v = test::random_hpd(rng, m);
  const auto phi_x = test::random_hpd(rng, m);
  const double c = 37.5;
  const HermitianScm phi_v_s(CMat(c * phi_v.m));
  const HermitianScm phi_x_s(CMat(c * phi_x.m));

  const auto w1 = mod_pmwf_approx(invert_hpd(phi_v), phi_x);
  const auto w2 = mod_pmwf_approx(invert_hpd(phi_v_s), phi_x_s);
  CHECK(rel_inf(w2.W, w1.W) < 1e-12);

  const CVec u0 = test::random_cvec(rng, m);
  const auto g1 = gev_mvdr(phi_v, invert_hpd(phi_v), phi_x, u0, 5);
  const auto g2 = gev_mvdr(phi_v_s, invert_hpd(phi_v_s), phi_x_s, u0, 5);
  CHECK(rel_inf(g2.weights.W, g1.weights.W) < 1e-12);

  const auto u1 = ur_mwf(phi_x, phi_v);
  const auto u2 = ur_mwf(phi_x_s, phi_v_s);
  CHECK(rel_inf(u2.W, u1.W) < 1e-12);
}

TEST_CASE("TradeoffGamma rejects negative values") {
  CHECK_THROWS_AS(TradeoffGamma(-0.1), ConfigError);
}

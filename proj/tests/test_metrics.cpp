#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mixbeam/metrics.hpp"
#include "oracles.hpp"

using namespace mixbeam;

namespace {
Audio mono_of(std::vector<double> samples) {
  return Audio::from_channels(16000.0, {std::move(samples)});
}

SegmentSet segs_of(Eigen::Index delta, std::vector<Eigen::Index> active) {
  SegmentSet s;
  s.delta = delta;
  s.active = std::move(active);
  return s;
}
}  // namespace

TEST_CASE("segdir: single-segment arithmetic, caps, averaging order") {
  // one segment with energies 100 and 1 -> 20 dB
  const Audio d = mono_of({10.0, 0.0, 0.0, 0.0});
  const Audio v = mono_of({1.0, 0.0, 0.0, 0.0});
  CHECK(segdir(d, v, segs_of(4, {0})) == doctest::Approx(20.0).epsilon(1e-12));

  // silent interference hits the +100 dB cap
  const Audio zero = mono_of({0.0, 0.0, 0.0, 0.0});
  CHECK(segdir(d, zero, segs_of(4, {0})) == 100.0);
  // 0/0 counts as 0 dB
  CHECK(segdir(zero, zero, segs_of(4, {0})) == 0.0);

  // two segments at 10 and 30 dB average to 20 dB (mean of per-segment dB)
  const Audio d2 = mono_of({std::sqrt(10.0), 0.0, std::sqrt(1000.0), 0.0});
  const Audio v2 = mono_of({1.0, 0.0, 1.0, 0.0});
  CHECK(segdir(d2, v2, segs_of(2, {0, 1})) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("segddr: exact reconstruction caps, zero output gives 0 dB, 2x gain gives 0 dB") {
  Rng rng(1);
  Audio d(16000.0, 800, 2);
  for (Eigen::Index i = 0; i < 800; ++i)
    for (int m = 0; m < 2; ++m) d.samples(i, m) = rng.gaussian();
  const auto segs = segs_of(800, {0});

  CHECK(segddr(d, d, segs) == 100.0);

  Audio zero(16000.0, 800, 2);
  CHECK(segddr(zero, d, segs) == doctest::Approx(0.0).epsilon(1e-12));

  Audio twice(16000.0, 800, 2);
  twice.samples = 2.0 * d.samples;
  CHECK(segddr(twice, d, segs) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("metrics are invariant to a joint global gain") {
  Rng rng(2);
  Audio d(16000.0, 1600, 2), v(16000.0, 1600, 2);
  for (Eigen::Index i = 0; i < 1600; ++i)
    for (int m = 0; m < 2; ++m) {
      d.samples(i, m) = rng.gaussian();
      v.samples(i, m) = 0.3 * rng.gaussian();
    }
  const auto segs = segs_of(800, {0, 1});

  Audio dg = d, vg = v;
  const double g = 0.01724;
  dg.samples *= g;
  vg.samples *= g;
  CHECK(std::abs(segdir(dg, vg, segs) - segdir(d, v, segs)) < 1e-12);

  Audio dh = d;
  dh.samples = 0.8 * d.samples + 0.05 * v.samples;  // some distorted estimate
  Audio dhg = dh;
  dhg.samples *= g;
  CHECK(std::abs(segddr(dhg, dg, segs) - segddr(dh, d, segs)) < 1e-12);
}

TEST_CASE("segdir increases strictly when the interference shrinks") {
  Rng rng(3);
  Audio d(16000.0, 800, 1), v(16000.0, 800, 1);
  for (Eigen::Index i = 0; i < 800; ++i) {
    d.samples(i, 0) = rng.gaussian();
    v.samples(i, 0) = rng.gaussian();
  }
  const auto segs = segs_of(800, {0});
  const double base = segdir(d, v, segs);
  Audio v_small = v;
  v_small.samples *= 0.5;
  CHECK(segdir(d, v_small, segs) > base);
}

TEST_CASE("segdir: empty active set and shape mismatches are errors") {
  const Audio d = mono_of({1.0, 2.0});
  CHECK_THROWS_AS(segdir(d, d, segs_of(2, {})), DataError);
  const Audio longer = mono_of({1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(segdir(d, longer, segs_of(2, {0})), DataError);
  CHECK_THROWS_AS(segdir(longer, longer, segs_of(2, {0, 5})), DataError);  // outside signal
}

TEST_CASE("active_segments: continuous source, half-file silence, threshold sensitivity") {
  // continuous loud source: every segment active
  {
    Audio d(16000.0, 4000, 1);
    for (Eigen::Index i = 0; i < 4000; ++i) d.samples(i, 0) = std::sin(0.2 * static_cast<double>(i));
    const auto segs = active_segments({d}, 800);
    CHECK(segs.active.size() == 5);
  }
  // exact half-file silence: half the segments active
  {
    Audio d(16000.0, 4000, 1);
    for (Eigen::Index i = 0; i < 2000; ++i) d.samples(i, 0) = std::sin(0.2 * static_cast<double>(i));
    const auto segs = active_segments({d}, 500);
    CHECK(segs.active == std::vector<Eigen::Index>{0, 1, 2, 3});
  }
  // a -35 dB segment sits between the -40 and -30 dB thresholds
  {
    Audio d(16000.0, 1600, 1);
    for (Eigen::Index i = 0; i < 800; ++i) d.samples(i, 0) = std::sin(0.2 * static_cast<double>(i));
    const double g = std::pow(10.0, -35.0 / 20.0);
    for (Eigen::Index i = 800; i < 1600; ++i)
      d.samples(i, 0) = g * std::sin(0.2 * static_cast<double>(i));
    const auto at40 = active_segments({d}, 800, -40.0);
    const auto at30 = active_segments({d}, 800, -30.0);
    CHECK(at40.active == std::vector<Eigen::Index>{0, 1});
    CHECK(at30.active == std::vector<Eigen::Index>{0});
  }
  // all-silent input is flagged
  {
    Audio d(16000.0, 1600, 1);
    const auto segs = active_segments({d}, 800);
    CHECK(segs.all_silent);
    CHECK(segs.active.empty());
  }
}

TEST_CASE("component_pass: identity and zero weight streams") {
  StftConfig cfg;
  Rng rng(4);
  const Eigen::Index len = 8000;
  Audio d(16000.0, len, 2), v(16000.0, len, 2);
  for (Eigen::Index i = 0; i < len; ++i)
    for (int m = 0; m < 2; ++m) {
      d.samples(i, m) = rng.gaussian();
      v.samples(i, m) = rng.gaussian();
    }

  const auto identity_stream = [&](long) {
    return std::vector<CMat>(static_cast<size_t>(cfg.num_bins()), CMat::Identity(2, 2));
  };
  const auto res = component_pass(identity_stream, d, v, cfg);
  const Eigen::Index skip = cfg.window_len;
  const auto in = d.samples.middleRows(skip, len - 2 * skip);
  const auto out = res.d_hat.samples.middleRows(skip, len - 2 * skip);
  CHECK(std::sqrt((in - out).square().sum() / in.square().sum()) < 1e-10);

  const auto zero_stream = [&](long) {
    return std::vector<CMat>(static_cast<size_t>(cfg.num_bins()), CMat::Zero(2, 2));
  };
  const auto res0 = component_pass(zero_stream, d, v, cfg);
  CHECK(res0.d_hat.samples.abs().maxCoeff() == 0.0);
  CHECK(res0.v_hat.samples.abs().maxCoeff() == 0.0);
}

TEST_CASE("component_pass: linearity, filtered(d) + filtered(v) = filtered(d+v)") {
  StftConfig cfg;
  Rng rng(5);
  const Eigen::Index len = 8000;
  Audio d(16000.0, len, 2), v(16000.0, len, 2);
  for (Eigen::Index i = 0; i < len; ++i)
    for (int m = 0; m < 2; ++m) {
      d.samples(i, m) = rng.gaussian();
      v.samples(i, m) = 0.4 * rng.gaussian();
    }
  Audio x(16000.0, len, 2);
  x.samples = d.samples + v.samples;

  // deterministic pseudo-random weights per (frame, bin)
  const auto stream = [&](long t) {
    std::vector<CMat> ws(static_cast<size_t>(cfg.num_bins()));
    Rng wrng(1000 + static_cast<std::uint64_t>(t));
    for (auto& W : ws) W = test::random_cmat(wrng, 2, 2) * 0.5;
    return ws;
  };

  const auto parts = component_pass(stream, d, v, cfg);
  const auto whole = component_pass(stream, x, x, cfg);
  const Eigen::ArrayXXd sum = parts.d_hat.samples + parts.v_hat.samples;
  const double rel =
      std::sqrt((sum - whole.d_hat.samples).square().sum() / whole.d_hat.samples.square().sum());
  CHECK(rel < 1e-8);
}

TEST_CASE("metric_report: identity beamformer has zero improvement") {
  Rng rng(6);
  const Eigen::Index len = 4000;
  Audio d(16000.0, len, 2), v(16000.0, len, 2);
  for (Eigen::Index i = 0; i < len; ++i)
    for (int m = 0; m < 2; ++m) {
      d.samples(i, m) = rng.gaussian();
      v.samples(i, m) = 0.5 * rng.gaussian();
    }
  const auto segs = segs_of(800, {0, 1, 2, 3, 4});
  const auto rep = metric_report(d, v, d, v, segs, true);
  CHECK(rep.segdir_improvement_db == 0.0);
  CHECK(rep.segddr_db == 100.0);
  CHECK(rep.per_segment.size() == 5);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mixbeam/enhancer.hpp"
#include "mixbeam/metrics.hpp"
#include "mixbeam/scene.hpp"
#include "oracles.hpp"

using namespace mixbeam;

namespace {

SceneOutput small_scene(std::uint64_t seed, double duration = 3.0) {
  SceneSpec spec;
  spec.seed = seed;
  spec.sources.push_back({{1.0, 0.0, 0.0}, speech_like_source(duration, 16000.0, seed * 2 + 1), -1});
  spec.sources.push_back({{-1.0, 0.0, 0.0}, speech_like_source(duration, 16000.0, seed * 2 + 2), -1});
  return render_scene(spec);
}

std::vector<HermitianScm> noise_scms_for(const SceneSpec& spec, double gain, const StftConfig& stft,
                                          std::uint64_t seed) {
  Audio noise = make_diffuse_noise(spec.mic_geometry, 5.0, spec.sample_rate, seed, spec.noise_num_waves);
  noise.samples *= gain;
  return init_from_noise(noise, stft);
}

}  // namespace

TEST_CASE("run config: defaults and the per-beamformer beta table") {
  const RunConfig def = run_config_from_json("{}");
  CHECK(def.beamformer == BeamformerKind::ModPmwfApprox);
  CHECK(def.gamma == 0.0);
  CHECK(def.alpha == 0.9998);
  CHECK(def.resolved_beta() == 0.85);
  CHECK(def.power_iters == 1);
  CHECK(def.stft.window_len == 320);
  CHECK(def.stft.hop == 80);

  const RunConfig gev = run_config_from_json(R"({"beamformer": "gev_mvdr"})");
  CHECK(gev.resolved_beta() == 0.85);
  const RunConfig ur = run_config_from_json(R"({"beamformer": "ur_mwf"})");
  CHECK(ur.resolved_beta() == 0.99);
  const RunConfig explicit_beta = run_config_from_json(R"({"beamformer": "ur_mwf", "beta": 0.5})");
  CHECK(explicit_beta.resolved_beta() == 0.5);
}

TEST_CASE("run config: malformed inputs carry diagnostics") {
  CHECK_THROWS_AS(run_config_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"beamformer": "lcmv"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"typo_key": 1})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"beta": 1.5})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"gamma": -1.0})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"stft": {"hop": 99}})"), ConfigError);

  // round trip
  RunConfig cfg;
  cfg.gamma = 0.5;
  cfg.beta = 0.9;
  const RunConfig back = run_config_from_json(run_config_to_json(cfg));
  CHECK(back.gamma == 0.5);
  CHECK(back.resolved_beta() == 0.9);
}

TEST_CASE("enhancer rejects invalid channel/mode combinations") {
  RunConfig cfg;
  CHECK_THROWS_AS(Enhancer(cfg, 1, nullptr), DataError);    // mono + mod_pmwf
  CHECK_THROWS_AS(Enhancer(cfg, 5, nullptr), ConfigError);  // precomputed mode without noise SCMs

  RunConfig online = cfg;
  online.noise_scm_mode = NoiseScmMode::OnlineSpp;
  online.online_fallback_init = false;
  CHECK_THROWS_AS(Enhancer(online, 5, nullptr), ConfigError);  // no warmup noise, no fallback

  RunConfig ident = cfg;
  ident.beamformer = BeamformerKind::Identity;
  CHECK_NOTHROW(Enhancer(ident, 1, nullptr));
}

TEST_CASE("identity beamformer: output equals input within the STFT tolerance") {
  RunConfig cfg;
  cfg.beamformer = BeamformerKind::Identity;
  Rng rng(1);
  const Eigen::Index len = 8000;
  Audio x(16000.0, len, 2);
  for (Eigen::Index i = 0; i < len; ++i)
    for (int m = 0; m < 2; ++m) x.samples(i, m) = rng.gaussian();

  const auto res = enhance_audio(cfg, x);
  REQUIRE(res.enhanced.num_samples() == len);
  const Eigen::Index skip = cfg.stft.window_len;
  const auto in = x.samples.middleRows(skip, len - 2 * skip);
  const auto out = res.enhanced.samples.middleRows(skip, len - 2 * skip);
  CHECK(std::sqrt((in - out).square().sum() / in.square().sum()) < 1e-10);
  CHECK(res.timing.frames == 100);
}

TEST_CASE("determinism: identical runs produce bit-identical output") {
  const auto scene = small_scene(3, 2.0);
  SceneSpec spec;  // reproduce the gain for the calibration noise
  RunConfig cfg;
  const auto scms = noise_scms_for(spec, scene.noise_gain, cfg.stft, 999);

  const auto a = enhance_audio(cfg, scene.captured, &scms);
  const auto b = enhance_audio(cfg, scene.captured, &scms);
  CHECK((a.enhanced.samples - b.enhanced.samples).abs().maxCoeff() == 0.0);
}

TEST_CASE("causality: truncating the input reproduces the output prefix bit-identically") {
  const auto scene = small_scene(4, 2.0);
  SceneSpec spec;
  RunConfig cfg;
  const auto scms = noise_scms_for(spec, scene.noise_gain, cfg.stft, 999);

  const auto full = enhance_audio(cfg, scene.captured, &scms);

  const Eigen::Index k = 150;  // frames
  Audio head(16000.0, k * cfg.stft.hop, scene.captured.num_channels());
  head.samples = scene.captured.samples.topRows(k * cfg.stft.hop);
  const auto part = enhance_audio(cfg, head, &scms);

  // everything synthesized strictly from the first k frames must match
  const Eigen::Index settled = (k - 4) * cfg.stft.hop;
  const auto a = full.enhanced.samples.topRows(settled);
  const auto b = part.enhanced.samples.topRows(settled);
  CHECK((a - b).abs().maxCoeff() == 0.0);
}

TEST_CASE("timing report fields are coherent") {
  const auto scene = small_scene(5, 2.0);
  SceneSpec spec;
  RunConfig cfg;
  const auto scms = noise_scms_for(spec, scene.noise_gain, cfg.stft, 999);
  const auto res = enhance_audio(cfg, scene.captured, &scms);

  CHECK(res.timing.frames == scene.captured.num_samples() / cfg.stft.hop);
  CHECK(res.timing.hop_budget_ms == doctest::Approx(5.0));
  CHECK(res.timing.p50_ms <= res.timing.p99_ms);
  CHECK(res.timing.p99_ms <= res.timing.max_ms);
  CHECK(res.timing.mean_ms > 0.0);
  CHECK(res.timing.realtime_factor > 0.0);

  const std::string j = timing_report_to_json(res.timing);
  CHECK(j.find("p99_ms") != std::string::npos);
}

TEST_CASE("component shadow filtering: d_hat + v_hat equals the enhanced signal") {
  const auto scene = small_scene(6, 2.0);
  SceneSpec spec;
  for (BeamformerKind kind :
       {BeamformerKind::ModPmwfApprox, BeamformerKind::GevMvdr, BeamformerKind::UrMwf}) {
    RunConfig cfg;
    cfg.beamformer = kind;
    const auto scms = noise_scms_for(spec, scene.noise_gain, cfg.stft, 999);
    const auto res =
        enhance_with_components(cfg, scene.captured, scene.desired, scene.interference, &scms);

    const Eigen::ArrayXXd sum = res.d_hat.samples + res.v_hat.samples;
    const double rel =
        std::sqrt((sum - res.enhanced.samples).square().sum() / res.enhanced.samples.square().sum());
    CHECK(rel < 1e-8);
    CHECK(res.enhanced.samples.isFinite().all());
  }
}

TEST_CASE("current_weights matches the factored application path") {
  const auto scene = small_scene(7, 1.0);
  SceneSpec spec;
  for (BeamformerKind kind :
       {BeamformerKind::ModPmwfApprox, BeamformerKind::GevMvdr, BeamformerKind::UrMwf}) {
    RunConfig cfg;
    cfg.beamformer = kind;
    const auto scms = noise_scms_for(spec, scene.noise_gain, cfg.stft, 999);
    Enhancer enh(cfg, 5, &scms);

    const auto frames = analyze(scene.captured, cfg.stft);
    for (int t = 0; t < 40; ++t) enh.process_frame(frames[static_cast<size_t>(t)]);

    const auto ws = enh.current_weights();
    const auto applied = enh.apply_current(frames[40]);
    for (int f : {5, 60, 120}) {
      const CVec via_w = ws[static_cast<size_t>(f)].adjoint() * frames[40].bins.col(f);
      const CVec via_fast = applied.bins.col(f);
      CHECK((via_w - via_fast).norm() < 1e-10 * (via_fast.norm() + 1e-12));
    }
  }
}

TEST_CASE("online SPP mode runs blind and stays finite") {
  const auto scene = small_scene(8, 2.0);
  RunConfig cfg;
  cfg.noise_scm_mode = NoiseScmMode::OnlineSpp;
  const auto res = enhance_audio(cfg, scene.captured, nullptr);
  CHECK(res.enhanced.samples.isFinite().all());
  CHECK(res.enhanced.samples.abs().maxCoeff() > 0.0);
}

TEST_CASE("NaN frames are skipped without corrupting the stream") {
  RunConfig cfg;
  cfg.beamformer = BeamformerKind::ModPmwfApprox;
  const auto scene = small_scene(9, 1.0);
  SceneSpec spec;
  const auto scms = noise_scms_for(spec, scene.noise_gain, cfg.stft, 999);

  Audio poisoned = scene.captured;
  poisoned.samples(5000, 2) = std::numeric_limits<double>::quiet_NaN();
  const auto res = enhance_audio(cfg, poisoned, &scms);
  // the NaN enters a handful of frames; the rest of the stream stays finite
  long finite = 0;
  for (Eigen::Index i = 0; i < res.enhanced.num_samples(); ++i)
    finite += res.enhanced.samples.row(i).isFinite().all();
  CHECK(finite > res.enhanced.num_samples() - 2000);
}

#include "mixbeam/enhancer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mixbeam {

using nlohmann::json;

namespace {

constexpr double kLambdaEps = 1e-12;
// online blind init: phi_v0 and phi_x0 as a small multiple of the first
// frame's per-bin power (MVDR-type weights are scale invariant, only the
// shape matters)
constexpr double kBlindInitScale = 1e-6;
// blind online bootstrap: a per-bin minimum-statistics floor admits
// interference-dominated time-frequency points (speech is sparse per bin, so
// every bin dips to its floor even without broadband pauses); admitted points
// feed the interference SCM as a running average (1/n steps) until the step
// size reaches the configured forgetting factor. Accumulation starts once the
// floor has had time to find the noise level.
constexpr double kPowerSmooth = 0.8;
constexpr double kFloorRisePerFrame = 1.0023;  // floor may double in ~1.5 s
constexpr int kFloorHangover = 2;  // consecutive below-floor frames required
constexpr long kFloorLockFrames = 40;  // 0.2 s at 5 ms hop
// per-bin admission threshold adapts between these bounds so that every bin
// keeps collecting interference samples even in scenes with few pauses
constexpr double kKappaMin = 1.5;
constexpr double kKappaInit = 1.5;  // tight; starvation adaptation loosens it per bin
constexpr double kKappaMax = 12.0;
constexpr double kKappaGrow = 1.5;
constexpr double kKappaShrink = 0.98;
constexpr long kStarvationFrames = 30;
// broadband pause gate (all bins at once)
constexpr double kBroadbandKappa = 3.0;
// once this much admitted weight has accumulated, the likelihood-ratio SPP
// vetoes candidate admissions that look speech-dominated
constexpr double kGlrVetoWeight = 10.0;
constexpr double kGlrVetoThreshold = 0.75;
// the diffuse-field shape varies slowly across frequency: smoothing the
// trace-normalized estimates over neighboring bins multiplies the effective
// sample count and averages residual speech phase out
constexpr int kFreqSmoothRadius = 2;
constexpr long kSmoothRefreshFrames = 5;

BeamformerKind kind_from_string(const std::string& name) {
  if (name == "mod_pmwf") return BeamformerKind::ModPmwfApprox;
  if (name == "gev_mvdr") return BeamformerKind::GevMvdr;
  if (name == "ur_mwf") return BeamformerKind::UrMwf;
  if (name == "identity") return BeamformerKind::Identity;
  throw ConfigError("unknown beamformer '" + name +
                    "' (expected mod_pmwf, gev_mvdr, ur_mwf or identity)");
}

std::string mode_to_string(NoiseScmMode mode) {
  return mode == NoiseScmMode::PrecomputedFromFile ? "precomputed_from_file" : "online_spp";
}

NoiseScmMode mode_from_string(const std::string& name) {
  if (name == "precomputed_from_file") return NoiseScmMode::PrecomputedFromFile;
  if (name == "online_spp") return NoiseScmMode::OnlineSpp;
  throw ConfigError("unknown noise_scm_mode '" + name +
                    "' (expected precomputed_from_file or online_spp)");
}

}  // namespace

double RunConfig::resolved_beta() const {
  if (beta) return *beta;
  return beamformer == BeamformerKind::UrMwf ? 0.99 : 0.85;
}

void RunConfig::validate() const {
  stft.validate();
  const double b = resolved_beta();
  if (!(b > 0.0) || b > 1.0) throw ConfigError("config: beta must lie in (0, 1]");
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("config: alpha must lie in (0, 1]");
  if (!(gamma >= 0.0)) throw ConfigError("config: gamma must be >= 0");
  if (power_iters < 1) throw ConfigError("config: power_iters must be >= 1");
  switch (beamformer) {
    case BeamformerKind::ModPmwfApprox:
    case BeamformerKind::GevMvdr:
    case BeamformerKind::UrMwf:
    case BeamformerKind::Identity:
      break;
    default:
      throw ConfigError("config: beamformer must be one of mod_pmwf, gev_mvdr, ur_mwf, identity");
  }
}

RunConfig run_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  static const std::vector<std::string> known = {
      "beamformer", "gamma", "beta",       "alpha", "noise_scm_mode",
      "stft",       "seed",  "power_iters", "online_fallback_init"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("config: unknown key '" + it.key() + "'");
  }

  RunConfig cfg;
  if (j.contains("beamformer")) cfg.beamformer = kind_from_string(j["beamformer"].get<std::string>());
  if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
  if (j.contains("beta") && !j["beta"].is_null()) cfg.beta = j["beta"].get<double>();
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("noise_scm_mode"))
    cfg.noise_scm_mode = mode_from_string(j["noise_scm_mode"].get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("power_iters")) cfg.power_iters = j["power_iters"].get<int>();
  if (j.contains("online_fallback_init")) cfg.online_fallback_init = j["online_fallback_init"].get<bool>();
  if (j.contains("stft")) {
    const auto& s = j["stft"];
    if (!s.is_object()) throw ConfigError("config: stft must be an object");
    if (s.contains("sample_rate")) cfg.stft.sample_rate = s["sample_rate"].get<double>();
    if (s.contains("window_len")) cfg.stft.window_len = s["window_len"].get<int>();
    if (s.contains("hop")) cfg.stft.hop = s["hop"].get<int>();
    if (s.contains("fft_size")) cfg.stft.fft_size = s["fft_size"].get<int>();
    else if (s.contains("window_len")) cfg.stft.fft_size = cfg.stft.window_len;
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(buf.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["beamformer"] = to_string(cfg.beamformer);
  j["gamma"] = cfg.gamma;
  if (cfg.beta) j["beta"] = *cfg.beta;
  j["alpha"] = cfg.alpha;
  j["noise_scm_mode"] = mode_to_string(cfg.noise_scm_mode);
  j["stft"] = {{"sample_rate", cfg.stft.sample_rate},
               {"window_len", cfg.stft.window_len},
               {"hop", cfg.stft.hop},
               {"fft_size", cfg.stft.fft_size}};
  j["power_iters"] = cfg.power_iters;
  j["seed"] = cfg.seed;
  j["online_fallback_init"] = cfg.online_fallback_init;
  return j.dump(2);
}

std::string timing_report_to_json(const TimingReport& rep) {
  json j;
  j["frames"] = rep.frames;
  j["mean_ms"] = rep.mean_ms;
  j["max_ms"] = rep.max_ms;
  j["p50_ms"] = rep.p50_ms;
  j["p99_ms"] = rep.p99_ms;
  j["hop_budget_ms"] = rep.hop_budget_ms;
  j["over_budget_frames"] = rep.over_budget_frames;
  j["realtime_factor"] = rep.realtime_factor;
  return j.dump(2);
}

struct Enhancer::Impl {
  RunConfig cfg;
  int channels = 0;
  int bins = 0;
  bool initialized = false;
  long frame_count = 0;
  long degenerate_events = 0;
  long skipped = 0;
  std::vector<double> frame_ms;

  struct BinState {
    std::optional<ScmTracker> phi_x;
    std::optional<InterferenceTracker> phi_v;
    CMat phi_v_inv_fixed;  // precomputed mode
    double logdet_v_fixed = 0.0;
    CVec u;                 // power-iteration state (gev_mvdr)
    double scale = 0.0;     // mod_pmwf: 1/(gamma+lambda_x)
    bool degenerate = false;
    CVec gev_b;             // gev_mvdr application vector
    // blind-bootstrap state: per-bin power floor, admitted weight mass, and
    // a confidence-loaded inverse of phi_v used while the estimate matures
    double phi_v_weight = 0.0;
    double p_smooth = 0.0;
    double p_floor = std::numeric_limits<double>::infinity();
    int below_floor_streak = 0;
    double kappa = kKappaInit;
    long frames_since_admit = 0;
    CMat phi_v_inv_blind;
    double logdet_v_blind = 0.0;
  };
  // broadband pause detector (blind online mode)
  double bb_smooth = 0.0;
  double bb_floor = std::numeric_limits<double>::infinity();
  int bb_streak = 0;
  bool bb_admitted = false;
  std::vector<BinState> state;
  const std::vector<HermitianScm>* noise_scms = nullptr;
  std::vector<HermitianScm> noise_scms_owned;

  Impl(const RunConfig& c, int m) : cfg(c), channels(m), bins(c.stft.num_bins()) {}

  bool online() const { return cfg.noise_scm_mode == NoiseScmMode::OnlineSpp; }
  bool blind() const { return online() && noise_scms == nullptr; }
  bool needs_phi_x_inverse() const {
    return cfg.beamformer == BeamformerKind::UrMwf || online();
  }

  const CMat& phi_v_inv(const BinState& s) const {
    if (blind()) return s.phi_v_inv_blind;
    return online() ? s.phi_v->phi_v_inv() : s.phi_v_inv_fixed;
  }
  const CMat& phi_v_mat(const BinState& s, int f) const {
    return online() ? s.phi_v->phi_v().m : (*noise_scms)[static_cast<size_t>(f)].m;
  }

  // The filters use a frequency-smoothed, confidence-loaded shape of the
  // tracked interference SCMs: trace-normalized neighbors are averaged with
  // their admitted weights, and an isotropic load fades as weight
  // accumulates. Keeps the filter well-behaved while the estimate is thin.
  void refresh_blind_inverses() {
    for (int f = 0; f < bins; ++f) {
      CMat shape = CMat::Zero(channels, channels);
      double total_w = 0.0;
      for (int g = std::max(0, f - kFreqSmoothRadius);
           g <= std::min(bins - 1, f + kFreqSmoothRadius); ++g) {
        const auto& sg = state[static_cast<size_t>(g)];
        const double tr = sg.phi_v->phi_v().m.trace().real();
        if (sg.phi_v_weight > 0 && tr > 0) {
          shape += (sg.phi_v_weight / tr) * sg.phi_v->phi_v().m;
          total_w += sg.phi_v_weight;
        }
      }
      auto& s = state[static_cast<size_t>(f)];
      if (total_w > 0) shape /= total_w;
      const double rho = 1.0 / (1.0 + total_w);
      HermitianScm loaded_phi(
          CMat(shape + (rho / static_cast<double>(channels)) * CMat::Identity(channels, channels)));
      s.phi_v_inv_blind = invert_hpd(loaded_phi);
      s.logdet_v_blind = logdet_hpd(loaded_phi.m);
    }
  }

  void lazy_init(const MultichannelSpectrum& x) {
    state.resize(static_cast<size_t>(bins));
    for (int f = 0; f < bins; ++f) {
      auto& s = state[static_cast<size_t>(f)];
      const CVec xf = x.bins.col(f);
      const double power = xf.squaredNorm() / static_cast<double>(channels);
      const double eps = std::max(kBlindInitScale * power, 1e-30);

      HermitianScm phi_v0(channels);
      if (noise_scms) {
        phi_v0 = (*noise_scms)[static_cast<size_t>(f)];
        // guard against a zero noise estimate in any bin
        if (!(phi_v0.m.trace().real() > 0)) phi_v0.m = eps * CMat::Identity(channels, channels);
      } else {
        phi_v0.m = eps * CMat::Identity(channels, channels);
      }

      if (online()) {
        s.phi_v.emplace(cfg.alpha, phi_v0, /*track_inverse=*/!blind());
      } else {
        s.phi_v_inv_fixed = invert_hpd(phi_v0, f);
        s.logdet_v_fixed = 0.0;  // unused in precomputed mode
      }

      HermitianScm phi_x0 = phi_v0;  // seed from the interference estimate
      s.phi_x.emplace(cfg.resolved_beta(), phi_x0, needs_phi_x_inverse());

      if (cfg.beamformer == BeamformerKind::GevMvdr) {
        s.u = CVec::Zero(channels);
        s.u(0) = 1.0;  // first microphone basis vector
      }
    }
    initialized = true;
    if (blind()) refresh_blind_inverses();
  }

  // advance one bin with observation xf
  void update_bin(int f, const CVec& xf) {
    auto& s = state[static_cast<size_t>(f)];
    if (!xf.allFinite()) {
      ++skipped;
      return;  // trackers untouched, current filters stay in effect
    }

    s.phi_x->update(xf);

    if (online()) {
      if (noise_scms) {
        // warm-started: the estimate is already formed, plain SPP gating
        const double q = spp_estimate_cached(xf, s.phi_v->phi_v_inv(), s.phi_v->logdet(),
                                             s.phi_x->phi_inv(), s.phi_x->logdet());
        s.phi_v->update(xf, q);
      } else {
        // Blind bootstrap. The gates are the speech-presence decision here
        // (points near the per-bin floor, or frames the broadband pause
        // detector flags, are interference-dominated); the likelihood-ratio
        // SPP needs a formed estimate and takes over in the warm-started
        // path. Admitted points enter a weighted running average whose step
        // decays to the configured forgetting factor; the inverse-power
        // weight keeps loud outliers from tilting it.
        const double p = xf.squaredNorm();
        s.p_smooth = frame_count == 0 ? p : kPowerSmooth * s.p_smooth + (1.0 - kPowerSmooth) * p;
        s.p_floor = std::min(s.p_smooth, s.p_floor * kFloorRisePerFrame);
        const bool below = s.p_smooth <= s.kappa * s.p_floor;
        s.below_floor_streak = below ? s.below_floor_streak + 1 : 0;
        const bool bin_admit = below && s.below_floor_streak > kFloorHangover;
        const bool admit = frame_count >= kFloorLockFrames && (bin_admit || bb_admitted);
        // once the estimate is formed, the likelihood-ratio SPP downweights
        // speech that slips under the power gates
        double spp_keep = 1.0;
        if (admit && s.phi_v_weight > kGlrVetoWeight) {
          const double q = spp_estimate_cached(xf, s.phi_v_inv_blind, s.logdet_v_blind,
                                               s.phi_x->phi_inv(), s.phi_x->logdet());
          spp_keep = 1.0 - q;
        }
        if (admit && spp_keep > 1.0 - kGlrVetoThreshold) {
          const double w = spp_keep * std::min(1.0, 2.0 * s.p_floor / (p + 1e-300));
          const double w_cap = 1.0 / (1.0 - cfg.alpha);
          s.phi_v_weight = std::min(s.phi_v_weight + w, w_cap);
          const double alpha_eff = std::clamp(1.0 - w / s.phi_v_weight, 0.05, 1.0);
          s.phi_v->set_alpha(alpha_eff);
          s.phi_v->update(xf, 0.0);
          s.kappa = std::max(kKappaMin, s.kappa * kKappaShrink);
          s.frames_since_admit = 0;
        } else if (frame_count >= kFloorLockFrames && ++s.frames_since_admit >= kStarvationFrames) {
          // starved bins loosen their threshold so learning never stops
          s.kappa = std::min(kKappaMax, s.kappa * kKappaGrow);
          s.frames_since_admit = 0;
        }
      }
    }

    switch (cfg.beamformer) {
      case BeamformerKind::ModPmwfApprox: {
        const double lambda_x = trace_of_product(phi_v_inv(s), s.phi_x->phi().m);
        const double denom = cfg.gamma + lambda_x;
        if (!(denom > kLambdaEps)) {
          s.degenerate = true;
          ++degenerate_events;
        } else {
          s.degenerate = false;
          s.scale = 1.0 / denom;
        }
        break;
      }
      case BeamformerKind::GevMvdr: {
        auto pi = power_iteration(phi_v_inv(s), s.phi_x->phi(), s.u, cfg.power_iters);
        if (pi.degenerate) {
          ++degenerate_events;
        } else {
          s.u = pi.u;
        }
        const CVec pv_u = phi_v_mat(s, f) * s.u;
        const double tr = (s.u.dot(pv_u)).real();
        if (!(tr > kLambdaEps)) {
          s.degenerate = true;
          ++degenerate_events;
        } else {
          s.degenerate = false;
          s.gev_b = pv_u / tr;
        }
        break;
      }
      case BeamformerKind::UrMwf:
      case BeamformerKind::Identity:
        break;
      default:
        throw ConfigError("Enhancer: unsupported beamformer kind");
    }
  }

  // y = W^H x for the current per-bin filter, O(M^2)
  CVec apply_bin(int f, const CVec& xf) const {
    const auto& s = state[static_cast<size_t>(f)];
    switch (cfg.beamformer) {
      case BeamformerKind::Identity:
        return xf;
      case BeamformerKind::ModPmwfApprox: {
        if (s.degenerate) return xf / static_cast<double>(channels);
        // W^H = phi_x phi_v^-1 * scale (both factors Hermitian)
        return s.scale * (s.phi_x->phi().m * (phi_v_inv(s) * xf));
      }
      case BeamformerKind::GevMvdr: {
        if (s.degenerate) return xf / static_cast<double>(channels);
        // W = u b^H  =>  y = b (u^H x)
        return s.gev_b * (s.u.dot(xf));
      }
      case BeamformerKind::UrMwf: {
        // W^H = (phi_x - phi_v) phi_x^-1  =>  y = x - phi_v (phi_x^-1 x)
        return xf - phi_v_mat(s, f) * (s.phi_x->phi_inv() * xf);
      }
      default:
        throw ConfigError("Enhancer: unsupported beamformer kind");
    }
  }

  CMat bin_weights(int f) const {
    const auto& s = state[static_cast<size_t>(f)];
    const CMat I = CMat::Identity(channels, channels);
    switch (cfg.beamformer) {
      case BeamformerKind::Identity:
        return I;
      case BeamformerKind::ModPmwfApprox:
        if (s.degenerate) return I / static_cast<double>(channels);
        return s.scale * (phi_v_inv(s) * s.phi_x->phi().m);
      case BeamformerKind::GevMvdr:
        if (s.degenerate) return I / static_cast<double>(channels);
        return s.u * s.gev_b.adjoint();
      case BeamformerKind::UrMwf:
        return s.phi_x->phi_inv() * (s.phi_x->phi().m - phi_v_mat(s, f));
      default:
        throw ConfigError("Enhancer: unsupported beamformer kind");
    }
  }
};

Enhancer::Enhancer(const RunConfig& cfg, int num_channels,
                   const std::vector<HermitianScm>* noise_scms) {
  cfg.validate();
  if (num_channels < 1) throw DataError("enhance: need at least one channel");
  if (cfg.beamformer != BeamformerKind::Identity && num_channels < 2)
    throw DataError("enhance: multichannel beamformer requires at least 2 channels");
  if (cfg.noise_scm_mode == NoiseScmMode::PrecomputedFromFile &&
      cfg.beamformer != BeamformerKind::Identity && noise_scms == nullptr)
    throw ConfigError("enhance: precomputed_from_file mode requires a noise SCM estimate");
  if (cfg.noise_scm_mode == NoiseScmMode::OnlineSpp && noise_scms == nullptr &&
      !cfg.online_fallback_init)
    throw ConfigError("enhance: online_spp mode with no warmup noise and fallback init disabled");

  impl_ = std::make_unique<Impl>(cfg, num_channels);
  if (noise_scms) {
    if (static_cast<int>(noise_scms->size()) != impl_->bins)
      throw DataError("enhance: noise SCM bin count mismatch");
    for (const auto& s : *noise_scms)
      if (s.dim() != num_channels) throw DataError("enhance: noise SCM channel count mismatch");
    impl_->noise_scms_owned = *noise_scms;
    impl_->noise_scms = &impl_->noise_scms_owned;
  }
}

Enhancer::~Enhancer() = default;
Enhancer::Enhancer(Enhancer&&) noexcept = default;
Enhancer& Enhancer::operator=(Enhancer&&) noexcept = default;

MultichannelSpectrum Enhancer::process_frame(const MultichannelSpectrum& x) {
  auto& im = *impl_;
  if (x.num_channels() != im.channels) throw DataError("enhance: frame channel count mismatch");
  if (x.num_bins() != im.bins) throw DataError("enhance: frame bin count mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  if (!im.initialized) im.lazy_init(x);

  if (im.blind() && im.frame_count > 0 && im.frame_count % kSmoothRefreshFrames == 0)
    im.refresh_blind_inverses();

  // broadband pause detector feeding the blind interference bootstrap
  if (im.blind() && x.all_finite()) {
    const double p = x.bins.squaredNorm();
    im.bb_smooth = im.frame_count == 0 ? p : kPowerSmooth * im.bb_smooth + (1.0 - kPowerSmooth) * p;
    im.bb_floor = std::min(im.bb_smooth, im.bb_floor * kFloorRisePerFrame);
    const bool below = im.bb_smooth <= kBroadbandKappa * im.bb_floor;
    im.bb_streak = below ? im.bb_streak + 1 : 0;
    im.bb_admitted = below && im.bb_streak > kFloorHangover;
  }

  MultichannelSpectrum y;
  y.frame_index = x.frame_index;
  y.bins.resize(im.channels, im.bins);
  for (int f = 0; f < im.bins; ++f) {
    const CVec xf = x.bins.col(f);
    im.update_bin(f, xf);
    y.bins.col(f) = im.apply_bin(f, xf);
  }
  ++im.frame_count;
  const auto t1 = std::chrono::steady_clock::now();
  im.frame_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  return y;
}

MultichannelSpectrum Enhancer::apply_current(const MultichannelSpectrum& s) const {
  const auto& im = *impl_;
  if (!im.initialized) throw ConfigError("enhance: apply_current before any processed frame");
  if (s.num_channels() != im.channels || s.num_bins() != im.bins)
    throw DataError("enhance: frame shape mismatch");
  MultichannelSpectrum out;
  out.frame_index = s.frame_index;
  out.bins.resize(im.channels, im.bins);
  for (int f = 0; f < im.bins; ++f) out.bins.col(f) = im.apply_bin(f, s.bins.col(f));
  return out;
}

std::vector<HermitianScm> Enhancer::interference_scms() const {
  const auto& im = *impl_;
  if (!im.initialized) throw ConfigError("enhance: interference_scms before any processed frame");
  std::vector<HermitianScm> out;
  out.reserve(static_cast<size_t>(im.bins));
  if (!im.online() && !im.noise_scms)
    throw ConfigError("enhance: no interference SCM in this configuration");
  for (int f = 0; f < im.bins; ++f) {
    if (im.online()) {
      out.push_back(im.state[static_cast<size_t>(f)].phi_v->phi_v());
    } else {
      out.push_back((*im.noise_scms)[static_cast<size_t>(f)]);
    }
  }
  return out;
}

std::vector<CMat> Enhancer::current_weights() const {
  const auto& im = *impl_;
  if (!im.initialized) throw ConfigError("enhance: current_weights before any processed frame");
  std::vector<CMat> ws(static_cast<size_t>(im.bins));
  for (int f = 0; f < im.bins; ++f) ws[static_cast<size_t>(f)] = im.bin_weights(f);
  return ws;
}

TimingReport Enhancer::timing_report() const {
  const auto& im = *impl_;
  TimingReport rep;
  rep.frames = static_cast<long>(im.frame_ms.size());
  rep.hop_budget_ms = 1000.0 * im.cfg.stft.hop / im.cfg.stft.sample_rate;
  if (rep.frames == 0) return rep;
  std::vector<double> sorted = im.frame_ms;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  rep.mean_ms = total / static_cast<double>(rep.frames);
  rep.max_ms = sorted.back();
  rep.p50_ms = sorted[static_cast<size_t>(0.50 * (static_cast<double>(rep.frames) - 1))];
  rep.p99_ms = sorted[static_cast<size_t>(0.99 * (static_cast<double>(rep.frames) - 1))];
  for (double v : im.frame_ms)
    if (v > rep.hop_budget_ms) ++rep.over_budget_frames;
  rep.realtime_factor = (total / 1000.0) / (static_cast<double>(rep.frames) * rep.hop_budget_ms / 1000.0);
  return rep;
}

long Enhancer::degenerate_bin_events() const { return impl_->degenerate_events; }
long Enhancer::skipped_frames() const { return impl_->skipped; }
int Enhancer::num_channels() const { return impl_->channels; }
const RunConfig& Enhancer::config() const { return impl_->cfg; }

EnhanceResult enhance_audio(const RunConfig& cfg, const Audio& x,
                            const std::vector<HermitianScm>* noise_scms) {
  cfg.validate();
  Enhancer enh(cfg, static_cast<int>(x.num_channels()), noise_scms);
  StftAnalyzer analyzer(cfg.stft, static_cast<int>(x.num_channels()));
  StftSynthesizer synth(cfg.stft, static_cast<int>(x.num_channels()));

  EnhanceResult res;
  res.enhanced = Audio(cfg.stft.sample_rate, 0, x.num_channels());
  std::vector<Eigen::ArrayXXd> blocks;
  Eigen::Index total = 0;
  auto consume = [&](const std::vector<MultichannelSpectrum>& frames) {
    for (const auto& fr : frames) {
      const auto y = enh.process_frame(fr);
      Eigen::ArrayXXd block = synth.push(y);
      total += block.rows();
      blocks.push_back(std::move(block));
    }
  };
  consume(analyzer.push(x.samples));
  consume(analyzer.flush());
  consume(analyzer.drain());
  Eigen::ArrayXXd tail = synth.flush();
  total += tail.rows();
  blocks.push_back(std::move(tail));

  res.enhanced.samples.resize(total, x.num_channels());
  Eigen::Index pos = 0;
  for (const auto& b : blocks) {
    res.enhanced.samples.middleRows(pos, b.rows()) = b;
    pos += b.rows();
  }
  if (res.enhanced.num_samples() > x.num_samples())
    res.enhanced.samples.conservativeResize(x.num_samples(), Eigen::NoChange);
  res.timing = enh.timing_report();
  return res;
}

ScenePassResult enhance_with_components(const RunConfig& cfg, const Audio& x, const Audio& d,
                                        const Audio& v,
                                        const std::vector<HermitianScm>* noise_scms) {
  cfg.validate();
  if (d.num_samples() != x.num_samples() || v.num_samples() != x.num_samples() ||
      d.num_channels() != x.num_channels() || v.num_channels() != x.num_channels())
    throw DataError("enhance: component shape mismatch with captured signal");

  const int M = static_cast<int>(x.num_channels());
  Enhancer enh(cfg, M, noise_scms);
  StftAnalyzer ax(cfg.stft, M), ad(cfg.stft, M), av(cfg.stft, M);
  StftSynthesizer sy(cfg.stft, M), sd(cfg.stft, M), sv(cfg.stft, M);

  std::vector<Eigen::ArrayXXd> by, bd, bv;
  auto consume = [&](const std::vector<MultichannelSpectrum>& xf,
                     const std::vector<MultichannelSpectrum>& df,
                     const std::vector<MultichannelSpectrum>& vf) {
    if (xf.size() != df.size() || xf.size() != vf.size())
      throw DataError("enhance: component frame count mismatch");
    for (std::size_t t = 0; t < xf.size(); ++t) {
      by.push_back(sy.push(enh.process_frame(xf[t])));
      bd.push_back(sd.push(enh.apply_current(df[t])));
      bv.push_back(sv.push(enh.apply_current(vf[t])));
    }
  };
  consume(ax.push(x.samples), ad.push(d.samples), av.push(v.samples));
  consume(ax.flush(), ad.flush(), av.flush());
  consume(ax.drain(), ad.drain(), av.drain());
  by.push_back(sy.flush());
  bd.push_back(sd.flush());
  bv.push_back(sv.flush());

  auto assemble = [&](std::vector<Eigen::ArrayXXd>& blocks) {
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.rows();
    Audio out(cfg.stft.sample_rate, total, M);
    Eigen::Index pos = 0;
    for (const auto& b : blocks) {
      out.samples.middleRows(pos, b.rows()) = b;
      pos += b.rows();
    }
    if (out.num_samples() > x.num_samples())
      out.samples.conservativeResize(x.num_samples(), Eigen::NoChange);
    return out;
  };

  ScenePassResult res;
  res.enhanced = assemble(by);
  res.d_hat = assemble(bd);
  res.v_hat = assemble(bv);
  res.timing = enh.timing_report();
  return res;
}

}  // namespace mixbeam

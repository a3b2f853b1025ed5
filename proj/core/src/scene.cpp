#include "mixbeam/scene.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "mixbeam/fft.hpp"

namespace mixbeam {

namespace {

constexpr int kSincHalfTaps = 16;  // 32-tap windowed-sinc fractional delay

double distance(const Position& a, const Position& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t x = seed ^ (tag * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x ? x : 1;
}

std::vector<double> truncated_convolve(const std::vector<double>& sig,
                                       const std::vector<double>& rir, std::size_t out_len) {
  std::vector<double> full = fft_convolve(sig, rir);
  full.resize(out_len, 0.0);
  return full;
}

}  // namespace

std::vector<Position> SceneSpec::default_cube_mics() {
  // vertices of a 4 cm cube centered at the origin; the paper's array uses
  // 5 of the 8 vertices
  const double h = 0.02;
  return {
      {-h, -h, -h},
      {+h, -h, -h},
      {-h, +h, -h},
      {-h, -h, +h},
      {+h, +h, +h},
  };
}

Rir synth_rir(const Position& src, const Position& mic, double t60, double sample_rate,
              std::uint64_t seed) {
  const double dist = distance(src, mic);
  if (!(dist > 0)) throw DataError("synth_rir: source and microphone are coincident");
  if (!(t60 > 0)) throw DataError("synth_rir: t60 must be positive");

  const double delay = dist / kSpeedOfSound * sample_rate;
  const double amp = 1.0 / dist;
  const long tail_len = static_cast<long>(std::ceil(1.5 * t60 * sample_rate));
  const long len = static_cast<long>(std::ceil(delay)) + kSincHalfTaps + tail_len;

  Rir rir;
  rir.direct_delay_samples = delay;
  rir.taps.assign(static_cast<size_t>(len), 0.0);

  // direct path: Hann-windowed sinc centered at the fractional delay
  const long k0 = static_cast<long>(std::floor(delay));
  for (long k = std::max<long>(0, k0 - kSincHalfTaps + 1); k <= k0 + kSincHalfTaps && k < len; ++k) {
    const double u = static_cast<double>(k) - delay;
    const double w = 0.5 * (1.0 + std::cos(M_PI * u / kSincHalfTaps));
    rir.taps[static_cast<size_t>(k)] += amp * sinc(u) * w;
  }

  // stochastic tail, envelope anchored at the direct-path amplitude
  Rng rng(mix_seed(seed, 0x7A11));
  const long ks = static_cast<long>(std::ceil(delay));
  const double decay = -3.0 / (t60 * sample_rate);  // log10 envelope slope per sample
  for (long k = ks; k < len; ++k) {
    const double sigma = amp * std::pow(10.0, decay * (static_cast<double>(k) - delay));
    rir.taps[static_cast<size_t>(k)] += sigma * rng.gaussian();
  }
  return rir;
}

RirSplit split_rir(const Rir& rir, double early_ms, double sample_rate) {
  if (rir.taps.empty()) throw DataError("split_rir: empty impulse response");
  if (!(early_ms > 0)) throw DataError("split_rir: early_ms must be positive");
  const long boundary = static_cast<long>(std::llround(rir.direct_delay_samples)) +
                        static_cast<long>(std::llround(early_ms / 1000.0 * sample_rate));
  const long len = static_cast<long>(rir.taps.size());
  const long b = std::clamp<long>(boundary, 0, len);

  RirSplit split;
  split.early.assign(rir.taps.size(), 0.0);
  split.late.assign(rir.taps.size(), 0.0);
  std::copy(rir.taps.begin(), rir.taps.begin() + b, split.early.begin());
  std::copy(rir.taps.begin() + b, rir.taps.end(), split.late.begin() + b);
  return split;
}

namespace {
// Unit-variance spherically isotropic Gaussian field: one column per mic,
// inter-mic coherence ~ sinc(2 pi f d / c). Shared by the additive-noise and
// late-reverberation models.
Eigen::ArrayXXd diffuse_field(const std::vector<Position>& geometry, long n, double sample_rate,
                              std::uint64_t seed, int num_waves) {
  if (geometry.empty()) throw DataError("diffuse field: no microphones");
  if (n < 2) throw DataError("diffuse field: length must be at least 2 samples");
  if (num_waves < 1) throw DataError("diffuse field: need at least one wave");

  const auto M = static_cast<int>(geometry.size());
  RealFft fft(static_cast<int>(n));
  const int bins = fft.num_bins();

  std::vector<std::vector<std::complex<double>>> acc(
      static_cast<size_t>(M), std::vector<std::complex<double>>(static_cast<size_t>(bins), 0.0));
  std::vector<std::complex<double>> spec(static_cast<size_t>(bins));

  Rng dir_rng(mix_seed(seed, 0xD1FF));
  for (int l = 0; l < num_waves; ++l) {
    // direction uniform on the sphere
    const double z = dir_rng.uniform(-1.0, 1.0);
    const double phi = dir_rng.uniform(0.0, 2.0 * M_PI);
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Position k = {rxy * std::cos(phi), rxy * std::sin(phi), z};

    // white Gaussian wave drawn directly in the frequency domain
    Rng wave_rng(mix_seed(seed, 0xA0000 + static_cast<std::uint64_t>(l)));
    spec[0] = {wave_rng.gaussian(), 0.0};
    for (int f = 1; f + 1 < bins; ++f) spec[static_cast<size_t>(f)] = wave_rng.cgaussian();
    if (bins >= 2) {
      // Nyquist bin is real for even lengths
      spec[static_cast<size_t>(bins - 1)] =
          (n % 2 == 0) ? std::complex<double>(wave_rng.gaussian(), 0.0) : wave_rng.cgaussian();
    }

    for (int m = 0; m < M; ++m) {
      const auto& p = geometry[static_cast<size_t>(m)];
      const double tau = (k[0] * p[0] + k[1] * p[1] + k[2] * p[2]) / kSpeedOfSound * sample_rate;
      // cumulative phase rotation e^{-i 2 pi f tau / n} per bin
      const std::complex<double> step = std::polar(1.0, -2.0 * M_PI * tau / static_cast<double>(n));
      std::complex<double> ph(1.0, 0.0);
      auto& a = acc[static_cast<size_t>(m)];
      for (int f = 0; f < bins; ++f) {
        a[static_cast<size_t>(f)] += spec[static_cast<size_t>(f)] * ph;
        ph *= step;
      }
    }
  }

  Eigen::ArrayXXd out(n, M);
  std::vector<double> time(static_cast<size_t>(n));
  // unit sample variance: each of the ~n spectral degrees of freedom carries
  // variance 1/num_waves per wave; the 1/n inverse-FFT scaling leaves 1/n
  const double scale = std::sqrt(static_cast<double>(n) / static_cast<double>(num_waves));
  for (int m = 0; m < M; ++m) {
    fft.inverse(acc[static_cast<size_t>(m)].data(), time.data());
    for (long i = 0; i < n; ++i) out(i, m) = time[static_cast<size_t>(i)] * scale;
  }
  return out;
}
}  // namespace

Audio make_diffuse_noise(const std::vector<Position>& geometry, double duration_s,
                         double sample_rate, std::uint64_t seed, int num_waves) {
  if (!(duration_s > 0)) throw DataError("make_diffuse_noise: duration must be positive");
  const long n = static_cast<long>(std::llround(duration_s * sample_rate));
  Audio out(sample_rate, n, static_cast<Eigen::Index>(geometry.size()));
  out.samples = diffuse_field(geometry, n, sample_rate, seed, num_waves);
  return out;
}

std::vector<double> speech_like_source(double duration_s, double sample_rate, std::uint64_t seed) {
  if (!(duration_s > 0)) throw DataError("speech_like_source: duration must be positive");
  const long n = static_cast<long>(std::llround(duration_s * sample_rate));
  std::vector<double> out(static_cast<size_t>(n), 0.0);

  Rng gate_rng(mix_seed(seed, 0x6A7E));
  Rng am_rng(mix_seed(seed, 0xA3));
  Rng carrier_rng(mix_seed(seed, 0xCA44));

  // utterance/pause gate with 10 ms raised-cosine ramps; starts active
  std::vector<double> gate(static_cast<size_t>(n), 0.0);
  const long ramp = static_cast<long>(0.010 * sample_rate);
  long pos = 0;
  bool speaking = true;
  while (pos < n) {
    const double dur_s = speaking ? gate_rng.uniform(0.5, 1.5) : gate_rng.uniform(0.35, 1.0);
    const long dur = static_cast<long>(dur_s * sample_rate);
    if (speaking) {
      for (long i = 0; i < dur && pos + i < n; ++i) {
        double g = 1.0;
        if (i < ramp) g = 0.5 * (1.0 - std::cos(M_PI * i / ramp));
        if (dur - 1 - i < ramp) g = std::min(g, 0.5 * (1.0 - std::cos(M_PI * (dur - 1 - i) / ramp)));
        gate[static_cast<size_t>(pos + i)] = g;
      }
    }
    pos += dur;
    speaking = !speaking;
  }

  // syllabic amplitude modulation: rectified 3 Hz-lowpassed noise, mean 1
  const double k_am = 1.0 - std::exp(-2.0 * M_PI * 3.0 / sample_rate);
  double am_state = 0.0;
  std::vector<double> am(static_cast<size_t>(n));
  double am_sum = 0.0;
  for (long i = 0; i < n; ++i) {
    am_state += k_am * (am_rng.gaussian() - am_state);
    am[static_cast<size_t>(i)] = std::abs(am_state);
    am_sum += am[static_cast<size_t>(i)];
  }
  const double am_mean = std::max(am_sum / static_cast<double>(n), 1e-12);
  for (auto& v : am) v = std::max(v / am_mean, 0.15);

  // carrier: white noise lowpassed at 600 Hz, highpassed at 120 Hz
  const double k_lp = 1.0 - std::exp(-2.0 * M_PI * 600.0 / sample_rate);
  const double k_hp = 1.0 - std::exp(-2.0 * M_PI * 120.0 / sample_rate);
  double lp = 0.0, hp_track = 0.0;
  double active_energy = 0.0;
  long active_count = 0;
  for (long i = 0; i < n; ++i) {
    lp += k_lp * (carrier_rng.gaussian() - lp);
    hp_track += k_hp * (lp - hp_track);
    const double carrier = lp - hp_track;
    const double v = gate[static_cast<size_t>(i)] * am[static_cast<size_t>(i)] * carrier;
    out[static_cast<size_t>(i)] = v;
    if (gate[static_cast<size_t>(i)] > 0.5) {
      active_energy += v * v;
      ++active_count;
    }
  }
  if (active_count > 0 && active_energy > 0) {
    const double rms = std::sqrt(active_energy / static_cast<double>(active_count));
    const double g = 0.1 / rms;
    for (auto& v : out) v *= g;
  }
  return out;
}

SceneOutput render_scene(const SceneSpec& spec) {
  if (spec.sources.empty()) throw DataError("render_scene: no sources");
  if (spec.mic_geometry.size() < 2)
    throw DataError("render_scene: need at least two microphones for beamforming scenes");
  if (!(spec.t60 > 0) || !(spec.early_ms > 0))
    throw DataError("render_scene: t60 and early_ms must be positive");

  const auto M = static_cast<Eigen::Index>(spec.mic_geometry.size());
  const auto N = spec.sources.size();

  std::size_t len = 0;
  for (const auto& src : spec.sources) {
    if (src.signal.empty() ||
        std::all_of(src.signal.begin(), src.signal.end(), [](double v) { return v == 0.0; }))
      throw DataError("render_scene: silent source signal");
    len = std::max(len, src.signal.size());
  }

  SceneOutput out;
  out.desired = Audio(spec.sample_rate, static_cast<Eigen::Index>(len), M);
  Audio late_sum(spec.sample_rate, static_cast<Eigen::Index>(len), M);
  out.per_source_desired.reserve(N);

  Position center = {0.0, 0.0, 0.0};
  for (const auto& p : spec.mic_geometry) {
    center[0] += p[0] / static_cast<double>(M);
    center[1] += p[1] / static_cast<double>(M);
    center[2] += p[2] / static_cast<double>(M);
  }

  for (std::size_t nsrc = 0; nsrc < N; ++nsrc) {
    const auto& src = spec.sources[nsrc];
    std::vector<double> sig = src.signal;
    sig.resize(len, 0.0);
    const std::uint64_t tag =
        src.rir_tag >= 0 ? static_cast<std::uint64_t>(src.rir_tag) : static_cast<std::uint64_t>(nsrc);

    // direct path + early reflections, per-mic synthetic RIRs
    Audio d_n(spec.sample_rate, static_cast<Eigen::Index>(len), M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const std::uint64_t pair_seed = mix_seed(spec.seed, (tag << 20) + static_cast<std::uint64_t>(m));
      const Rir rir = synth_rir(src.position, spec.mic_geometry[static_cast<size_t>(m)], spec.t60,
                                spec.sample_rate, pair_seed);
      const RirSplit parts = split_rir(rir, spec.early_ms, spec.sample_rate);
      const auto early = truncated_convolve(sig, parts.early, len);
      for (std::size_t i = 0; i < len; ++i) d_n.samples(static_cast<Eigen::Index>(i), m) = early[i];
    }

    // late reverberation: the decaying tail of a spherically isotropic field,
    // so it shares the diffuse noise's spatial characteristics
    const double d_center = distance(src.position, center);
    const double delay_c = d_center / kSpeedOfSound * spec.sample_rate;
    const double amp_c = 1.0 / d_center;
    const double decay = -3.0 / (spec.t60 * spec.sample_rate);
    const long boundary = static_cast<long>(std::llround(delay_c)) +
                          static_cast<long>(std::llround(spec.early_ms / 1000.0 * spec.sample_rate));
    const long tail_len = static_cast<long>(std::ceil(delay_c)) + kSincHalfTaps +
                          static_cast<long>(std::ceil(1.5 * spec.t60 * spec.sample_rate));
    if (boundary < tail_len) {
      const Eigen::ArrayXXd field =
          diffuse_field(spec.mic_geometry, tail_len, spec.sample_rate,
                        mix_seed(spec.seed, (tag << 20) + 0x1A7E), spec.noise_num_waves);
      std::vector<double> late_rir(static_cast<size_t>(tail_len), 0.0);
      for (Eigen::Index m = 0; m < M; ++m) {
        for (long k = boundary; k < tail_len; ++k)
          late_rir[static_cast<size_t>(k)] =
              amp_c * std::pow(10.0, decay * (static_cast<double>(k) - delay_c)) * field(k, m);
        const auto late = truncated_convolve(sig, late_rir, len);
        for (std::size_t i = 0; i < len; ++i) late_sum.samples(static_cast<Eigen::Index>(i), m) += late[i];
      }
    }

    out.desired.samples += d_n.samples;
    out.per_source_desired.push_back(std::move(d_n));
  }

  // noise gain targeting the requested reverberant-mixture-to-noise ratio
  const Eigen::ArrayXXd rev_mix = out.desired.samples + late_sum.samples;
  const double p_rev = rev_mix.square().mean();
  Audio noise = make_diffuse_noise(spec.mic_geometry, static_cast<double>(len) / spec.sample_rate,
                                   spec.sample_rate, mix_seed(spec.seed, 0x0153), spec.noise_num_waves);
  const double p_noise = noise.samples.square().mean();
  double gain = 0.0;
  if (std::isfinite(spec.rmnr_db) && p_noise > 0)
    gain = std::sqrt(p_rev / (p_noise * std::pow(10.0, spec.rmnr_db / 10.0)));
  out.noise_gain = gain;

  out.interference = Audio(spec.sample_rate, static_cast<Eigen::Index>(len), M);
  out.interference.samples = late_sum.samples + gain * noise.samples;
  out.captured = Audio(spec.sample_rate, static_cast<Eigen::Index>(len), M);
  out.captured.samples = out.desired.samples + out.interference.samples;

  const double p_scaled_noise = (gain * noise.samples).square().mean();
  out.measured_rmnr_db = p_scaled_noise > 0
                             ? 10.0 * std::log10(p_rev / p_scaled_noise)
                             : std::numeric_limits<double>::infinity();

  // per-source activity from mono source energy, 50 ms segments, -40 dB rel.
  const long delta = static_cast<long>(std::llround(0.05 * spec.sample_rate));
  const long num_segs = static_cast<long>(len) / delta;
  out.activity.resize(N);
  for (std::size_t nsrc = 0; nsrc < N; ++nsrc) {
    std::vector<double> seg_energy(static_cast<size_t>(num_segs), 0.0);
    const auto& sig = spec.sources[nsrc].signal;
    double max_e = 0.0;
    for (long t = 0; t < num_segs; ++t) {
      double e = 0.0;
      for (long i = t * delta; i < (t + 1) * delta && i < static_cast<long>(sig.size()); ++i)
        e += sig[static_cast<size_t>(i)] * sig[static_cast<size_t>(i)];
      seg_energy[static_cast<size_t>(t)] = e;
      max_e = std::max(max_e, e);
    }
    const double thresh = max_e * 1e-4;  // -40 dB
    auto& act = out.activity[nsrc];
    act.resize(static_cast<size_t>(num_segs));
    for (long t = 0; t < num_segs; ++t) act[static_cast<size_t>(t)] = seg_energy[static_cast<size_t>(t)] > thresh;
  }
  return out;
}

}  // namespace mixbeam

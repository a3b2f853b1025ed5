// Synthetic acoustic scene generator.
//
// Renders noisy reverberant multichannel mixtures with an exact ground-truth
// split into desired (direct + early reflections, per source) and
// interference (late reverberation + diffuse noise). RIRs are synthetic:
// a fractionally delayed direct path plus a Gaussian tail with a -60 dB/T60
// exponential energy envelope.
#ifndef MIXBEAM_SCENE_HPP
#define MIXBEAM_SCENE_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "mixbeam/common.hpp"

namespace mixbeam {

using Position = std::array<double, 3>;  // meters

struct SceneSource {
  Position position{};
  std::vector<double> signal;  // mono, at the scene sample rate
  // Stable tag for the RIR random stream; defaults to the source index so a
  // re-render with the same spec is bit-identical. Set explicitly to reuse a
  // source's RIRs across specs with different source lists.
  std::int64_t rir_tag = -1;
};

struct SceneSpec {
  std::vector<Position> mic_geometry = default_cube_mics();
  std::vector<SceneSource> sources;
  double t60 = 0.38;           // seconds
  double rmnr_db = 20.0;       // reverberant-mixture-to-noise ratio target
  double sample_rate = 16000.0;
  double early_ms = 50.0;      // early-reflection boundary after direct path
  std::uint64_t seed = 0;
  int noise_num_waves = 128;   // plane waves in the diffuse noise model

  // 5 of the 8 vertices of a 4 cm cube centered at the origin.
  static std::vector<Position> default_cube_mics();
};

struct SceneOutput {
  Audio captured;      // x = d + v, sample-exact
  Audio desired;       // d = sum of per-source desired, sample-exact
  Audio interference;  // v = late reverberation + scaled diffuse noise
  std::vector<Audio> per_source_desired;
  // activity[n][tau]: source n exceeds (its max 50 ms segment energy - 40 dB)
  std::vector<std::vector<bool>> activity;
  double measured_rmnr_db = 0.0;
  double noise_gain = 0.0;
};

// Synthetic RIR: direct-path windowed-sinc at delay distance/c (amplitude
// 1/distance) plus a Gaussian tail whose amplitude envelope decays as
// 10^(-3 t / t60), anchored at the direct-path level. Tail length >= 1.5*t60.
struct Rir {
  std::vector<double> taps;
  double direct_delay_samples = 0.0;
};
Rir synth_rir(const Position& src, const Position& mic, double t60, double sample_rate,
              std::uint64_t seed);

// Splits at direct arrival + early_ms. Both parts have the input length and
// sum to the input sample-exactly.
struct RirSplit {
  std::vector<double> early;
  std::vector<double> late;
};
RirSplit split_rir(const Rir& rir, double early_ms, double sample_rate);

// Spherically isotropic noise: sum of num_waves white Gaussian plane waves
// from directions uniform on the sphere, delayed per mic. Inter-mic coherence
// approximates sinc(2 pi f d / c).
Audio make_diffuse_noise(const std::vector<Position>& geometry, double duration_s,
                         double sample_rate, std::uint64_t seed, int num_waves = 128);

// Speech-like test source: amplitude-modulated colored noise with utterance
// and pause structure. Starts in an active stretch.
std::vector<double> speech_like_source(double duration_s, double sample_rate, std::uint64_t seed);

SceneOutput render_scene(const SceneSpec& spec);

}  // namespace mixbeam

#endif  // MIXBEAM_SCENE_HPP

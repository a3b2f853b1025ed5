// Segmental desired-to-interference (SegDIR) and desired-to-distortion
// (SegDDR) ratios over speech-active 50 ms segments, plus the shadow
// component filtering that makes them well-defined for adaptive filters.
#ifndef MIXBEAM_METRICS_HPP
#define MIXBEAM_METRICS_HPP

#include <functional>
#include <optional>
#include <vector>

#include "mixbeam/common.hpp"
#include "mixbeam/stft.hpp"

namespace mixbeam {

struct SegmentSet {
  Eigen::Index delta = 800;           // segment length in samples (50 ms at 16 kHz)
  std::vector<Eigen::Index> active;   // ascending, unique segment indices
  bool all_silent = false;            // no source ever crossed the threshold
};

// Segment tau is active iff any source's segment energy exceeds that
// source's maximum segment energy minus 40 dB (threshold_db adjustable for
// sensitivity studies). Energies sum over channels.
SegmentSet active_segments(const std::vector<Audio>& per_source_desired, Eigen::Index delta = 800,
                           double threshold_db = -40.0);

// Per-segment dB values are clamped to [-100, 100]; a 0/0 segment counts 0 dB.
inline constexpr double kSegmentCapDb = 100.0;

// Mean over active segments of 10 log10(sum |d_hat|^2 / sum |v_hat|^2),
// energies summed over all channels within the segment.
double segdir(const Audio& d_hat, const Audio& v_hat, const SegmentSet& segs);

// Same with distortion energy sum |d_hat - d|^2 in the denominator and the
// clean desired energy in the numerator.
double segddr(const Audio& d_hat, const Audio& d, const SegmentSet& segs);

struct MetricReport {
  double segdir_db = 0.0;
  double segddr_db = 0.0;
  double segdir_observed_db = 0.0;
  double segdir_improvement_db = 0.0;  // segdir_db - segdir_observed_db
  struct SegmentRow {
    Eigen::Index tau = 0;
    double dir_db = 0.0;
    double ddr_db = 0.0;
  };
  std::vector<SegmentRow> per_segment;
};

// Applies the per-frame, per-bin weight stream (the one computed from the
// captured signal) to the desired and interference components separately.
// The provider must return num_bins matrices of size M x M for every frame.
struct ComponentPassResult {
  Audio d_hat;
  Audio v_hat;
};
using WeightProvider = std::function<std::vector<CMat>(long frame_index)>;
ComponentPassResult component_pass(const WeightProvider& weights_for_frame, const Audio& d,
                                   const Audio& v, const StftConfig& cfg);

// Full report for an enhanced scene; fills per_segment rows when requested.
MetricReport metric_report(const Audio& d_hat, const Audio& v_hat, const Audio& d, const Audio& v,
                           const SegmentSet& segs, bool with_rows = false);

}  // namespace mixbeam

#endif  // MIXBEAM_METRICS_HPP

#include "mixbeam/metrics.hpp"

#include <cmath>

namespace mixbeam {

namespace {

double capped_ratio_db(double num, double den) {
  if (num <= 0.0 && den <= 0.0) return 0.0;
  if (den <= 0.0) return kSegmentCapDb;
  if (num <= 0.0) return -kSegmentCapDb;
  const double db = 10.0 * std::log10(num / den);
  return std::clamp(db, -kSegmentCapDb, kSegmentCapDb);
}

double segment_energy(const Audio& a, Eigen::Index start, Eigen::Index delta) {
  return a.samples.middleRows(start, delta).square().sum();
}

double mean_segment_db(const Audio& num_sig, const Audio& den_sig, const SegmentSet& segs,
                       bool den_is_distortion, const Audio* clean,
                       std::vector<MetricReport::SegmentRow>* rows, bool rows_dir) {
  if (num_sig.num_samples() != den_sig.num_samples() ||
      num_sig.num_channels() != den_sig.num_channels())
    throw DataError("segmental metric: signal shape mismatch");
  if (segs.active.empty()) throw DataError("segmental metric: empty active segment set");
  double acc = 0.0;
  for (Eigen::Index tau : segs.active) {
    const Eigen::Index start = tau * segs.delta;
    if (start < 0 || start + segs.delta > num_sig.num_samples())
      throw DataError("segmental metric: active segment outside the signal");
    double num, den;
    if (den_is_distortion) {
      num = clean->samples.middleRows(start, segs.delta).square().sum();
      den = (num_sig.samples.middleRows(start, segs.delta) -
             clean->samples.middleRows(start, segs.delta))
                .square()
                .sum();
    } else {
      num = segment_energy(num_sig, start, segs.delta);
      den = segment_energy(den_sig, start, segs.delta);
    }
    const double db = capped_ratio_db(num, den);
    acc += db;
    if (rows) {
      if (rows_dir) {
        rows->push_back({tau, db, 0.0});
      } else {
        // merge into the existing row for this segment when present
        bool merged = false;
        for (auto& r : *rows) {
          if (r.tau == tau) {
            r.ddr_db = db;
            merged = true;
            break;
          }
        }
        if (!merged) rows->push_back({tau, 0.0, db});
      }
    }
  }
  return acc / static_cast<double>(segs.active.size());
}

}  // namespace

SegmentSet active_segments(const std::vector<Audio>& per_source_desired, Eigen::Index delta,
                           double threshold_db) {
  if (per_source_desired.empty()) throw DataError("active_segments: no sources");
  if (delta <= 0) throw DataError("active_segments: delta must be positive");
  const Eigen::Index len = per_source_desired.front().num_samples();
  for (const auto& a : per_source_desired)
    if (a.num_samples() != len) throw DataError("active_segments: source length mismatch");

  SegmentSet segs;
  segs.delta = delta;
  const Eigen::Index num_segs = len / delta;
  if (num_segs == 0) throw DataError("active_segments: signal shorter than one segment");

  std::vector<std::vector<double>> energy(per_source_desired.size());
  std::vector<double> max_energy(per_source_desired.size(), 0.0);
  for (std::size_t n = 0; n < per_source_desired.size(); ++n) {
    energy[n].resize(static_cast<size_t>(num_segs));
    for (Eigen::Index t = 0; t < num_segs; ++t) {
      const double e = segment_energy(per_source_desired[n], t * delta, delta);
      energy[n][static_cast<size_t>(t)] = e;
      max_energy[n] = std::max(max_energy[n], e);
    }
  }
  const double rel = std::pow(10.0, threshold_db / 10.0);
  for (Eigen::Index t = 0; t < num_segs; ++t) {
    bool any = false;
    for (std::size_t n = 0; n < per_source_desired.size() && !any; ++n)
      any = energy[n][static_cast<size_t>(t)] > max_energy[n] * rel;
    if (any) segs.active.push_back(t);
  }
  segs.all_silent = segs.active.empty();
  return segs;
}

double segdir(const Audio& d_hat, const Audio& v_hat, const SegmentSet& segs) {
  return mean_segment_db(d_hat, v_hat, segs, false, nullptr, nullptr, true);
}

double segddr(const Audio& d_hat, const Audio& d, const SegmentSet& segs) {
  return mean_segment_db(d_hat, d, segs, true, &d, nullptr, false);
}

ComponentPassResult component_pass(const WeightProvider& weights_for_frame, const Audio& d,
                                   const Audio& v, const StftConfig& cfg) {
  if (d.num_samples() != v.num_samples() || d.num_channels() != v.num_channels())
    throw DataError("component_pass: component shape mismatch");
  const int M = static_cast<int>(d.num_channels());
  StftAnalyzer ad(cfg, M), av(cfg, M);
  auto d_frames = ad.push(d.samples);
  for (auto& fr : ad.flush()) d_frames.push_back(std::move(fr));
  for (auto& fr : ad.drain()) d_frames.push_back(std::move(fr));
  auto v_frames = av.push(v.samples);
  for (auto& fr : av.flush()) v_frames.push_back(std::move(fr));
  for (auto& fr : av.drain()) v_frames.push_back(std::move(fr));
  if (d_frames.size() != v_frames.size()) throw DataError("component_pass: frame count mismatch");

  std::vector<MultichannelSpectrum> dh(d_frames.size()), vh(v_frames.size());
  for (std::size_t t = 0; t < d_frames.size(); ++t) {
    const auto weights = weights_for_frame(static_cast<long>(t));
    if (static_cast<int>(weights.size()) != cfg.num_bins())
      throw DataError("component_pass: weight stream bin count mismatch");
    dh[t].frame_index = d_frames[t].frame_index;
    vh[t].frame_index = v_frames[t].frame_index;
    dh[t].bins.resize(d.num_channels(), cfg.num_bins());
    vh[t].bins.resize(d.num_channels(), cfg.num_bins());
    for (int f = 0; f < cfg.num_bins(); ++f) {
      const CMat& W = weights[static_cast<size_t>(f)];
      if (W.rows() != d.num_channels() || W.cols() != d.num_channels())
        throw DataError("component_pass: weight matrix shape mismatch");
      dh[t].bins.col(f) = W.adjoint() * d_frames[t].bins.col(f);
      vh[t].bins.col(f) = W.adjoint() * v_frames[t].bins.col(f);
    }
  }
  ComponentPassResult out;
  out.d_hat = synthesize(dh, cfg, d.num_samples());
  out.v_hat = synthesize(vh, cfg, v.num_samples());
  return out;
}

MetricReport metric_report(const Audio& d_hat, const Audio& v_hat, const Audio& d, const Audio& v,
                           const SegmentSet& segs, bool with_rows) {
  MetricReport rep;
  std::vector<MetricReport::SegmentRow>* rows = with_rows ? &rep.per_segment : nullptr;
  rep.segdir_db = mean_segment_db(d_hat, v_hat, segs, false, nullptr, rows, true);
  rep.segddr_db = mean_segment_db(d_hat, d, segs, true, &d, rows, false);
  rep.segdir_observed_db = segdir(d, v, segs);
  rep.segdir_improvement_db = rep.segdir_db - rep.segdir_observed_db;
  return rep;
}

}  // namespace mixbeam

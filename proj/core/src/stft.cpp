#include "mixbeam/stft.hpp"

#include <algorithm>
#include <cmath>

#include "mixbeam/fft.hpp"

namespace mixbeam {

void StftConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("stft: sample_rate must be positive");
  if (window_len <= 0 || hop <= 0) throw ConfigError("stft: window_len and hop must be positive");
  if (window_len % hop != 0) throw ConfigError("stft: hop must divide window_len");
  if (window_len / hop < 2) throw ConfigError("stft: overlap factor must be at least 2");
  if (fft_size != window_len) throw ConfigError("stft: fft_size must equal window_len");
}

std::vector<double> make_window(WindowType type, int window_len) {
  std::vector<double> w(static_cast<size_t>(window_len));
  switch (type) {
    case WindowType::SqrtHann:
      // periodic sqrt-Hann: sin(pi*n/N)
      for (int n = 0; n < window_len; ++n) w[static_cast<size_t>(n)] = std::sin(M_PI * n / window_len);
      break;
  }
  return w;
}

ColaProfile cola_profile(const StftConfig& cfg) {
  cfg.validate();
  const auto w = make_window(cfg.window, cfg.window_len);
  const int overlap = cfg.window_len / cfg.hop;
  ColaProfile p;
  double mean = 0.0;
  std::vector<double> sums(static_cast<size_t>(cfg.hop), 0.0);
  for (int j = 0; j < cfg.hop; ++j) {
    double s = 0.0;
    for (int r = 0; r < overlap; ++r) {
      const double wv = w[static_cast<size_t>(j + r * cfg.hop)];
      s += wv * wv;  // analysis times synthesis window
    }
    sums[static_cast<size_t>(j)] = s;
    mean += s;
  }
  mean /= cfg.hop;
  p.constant = mean;
  for (double s : sums) p.max_rel_deviation = std::max(p.max_rel_deviation, std::abs(s - mean) / mean);
  return p;
}

struct StftAnalyzer::Impl {
  StftConfig cfg;
  int channels = 0;
  std::vector<double> window;
  RealFft fft;
  long next_frame = 0;
  // last window_len-hop input samples per channel, zeros initially (pre-pad)
  Eigen::ArrayXXd history;
  std::vector<double> pending;  // interleaved-free: per-channel deque emulated below
  Eigen::ArrayXXd pending_block;
  Eigen::Index pending_len = 0;
  std::vector<double> scratch_time;
  std::vector<std::complex<double>> scratch_freq;

  Impl(const StftConfig& c, int m)
      : cfg(c),
        channels(m),
        window(make_window(c.window, c.window_len)),
        fft(c.fft_size),
        history(Eigen::ArrayXXd::Zero(c.window_len - c.hop, m)),
        pending_block(Eigen::ArrayXXd::Zero(4 * c.hop, m)),
        scratch_time(static_cast<size_t>(c.fft_size)),
        scratch_freq(static_cast<size_t>(c.num_bins())) {}

  void append(const Eigen::Ref<const Eigen::ArrayXXd>& block) {
    if (pending_len + block.rows() > pending_block.rows()) {
      Eigen::ArrayXXd grown(std::max(pending_len + block.rows(), 2 * pending_block.rows()), channels);
      grown.topRows(pending_len) = pending_block.topRows(pending_len);
      pending_block.swap(grown);
    }
    pending_block.middleRows(pending_len, block.rows()) = block;
    pending_len += block.rows();
  }

  MultichannelSpectrum emit(const Eigen::Ref<const Eigen::ArrayXXd>& hop_samples) {
    const int N = cfg.window_len;
    const int tail = cfg.hop;
    const int head = N - tail;
    MultichannelSpectrum frame;
    frame.frame_index = next_frame++;
    frame.bins.resize(channels, cfg.num_bins());
    for (int m = 0; m < channels; ++m) {
      for (int n = 0; n < head; ++n)
        scratch_time[static_cast<size_t>(n)] = history(n, m) * window[static_cast<size_t>(n)];
      for (int n = 0; n < tail; ++n)
        scratch_time[static_cast<size_t>(head + n)] =
            hop_samples(n, m) * window[static_cast<size_t>(head + n)];
      fft.forward(scratch_time.data(), scratch_freq.data());
      for (int f = 0; f < cfg.num_bins(); ++f) frame.bins(m, f) = scratch_freq[static_cast<size_t>(f)];
    }
    // slide history: drop the oldest hop, append the consumed hop
    if (head > tail) history.topRows(head - tail) = history.bottomRows(head - tail).eval();
    history.bottomRows(std::min(tail, head)) = hop_samples.bottomRows(std::min(tail, head));
    return frame;
  }
};

StftAnalyzer::StftAnalyzer(const StftConfig& cfg, int num_channels) {
  cfg.validate();
  if (num_channels < 1) throw DataError("stft analyze: need at least one channel");
  impl_ = std::make_unique<Impl>(cfg, num_channels);
}
StftAnalyzer::~StftAnalyzer() = default;
StftAnalyzer::StftAnalyzer(StftAnalyzer&&) noexcept = default;
StftAnalyzer& StftAnalyzer::operator=(StftAnalyzer&&) noexcept = default;

const StftConfig& StftAnalyzer::config() const { return impl_->cfg; }
int StftAnalyzer::num_channels() const { return impl_->channels; }

std::vector<MultichannelSpectrum> StftAnalyzer::push(const Eigen::Ref<const Eigen::ArrayXXd>& block) {
  if (block.cols() != impl_->channels) throw DataError("stft analyze: channel count mismatch");
  impl_->append(block);
  std::vector<MultichannelSpectrum> out;
  Eigen::Index offset = 0;
  while (impl_->pending_len - offset >= impl_->cfg.hop) {
    out.push_back(impl_->emit(impl_->pending_block.middleRows(offset, impl_->cfg.hop)));
    offset += impl_->cfg.hop;
  }
  if (offset > 0) {
    const Eigen::Index rest = impl_->pending_len - offset;
    if (rest > 0)
      impl_->pending_block.topRows(rest) = impl_->pending_block.middleRows(offset, rest).eval();
    impl_->pending_len = rest;
  }
  return out;
}

std::vector<MultichannelSpectrum> StftAnalyzer::flush() {
  std::vector<MultichannelSpectrum> out;
  if (impl_->pending_len > 0) {
    Eigen::ArrayXXd last = Eigen::ArrayXXd::Zero(impl_->cfg.hop, impl_->channels);
    last.topRows(impl_->pending_len) = impl_->pending_block.topRows(impl_->pending_len);
    impl_->pending_len = 0;
    out.push_back(impl_->emit(last));
  }
  return out;
}

std::vector<MultichannelSpectrum> StftAnalyzer::drain() {
  std::vector<MultichannelSpectrum> out;
  const Eigen::ArrayXXd zeros = Eigen::ArrayXXd::Zero(impl_->cfg.hop, impl_->channels);
  for (int r = 1; r < impl_->cfg.window_len / impl_->cfg.hop; ++r) out.push_back(impl_->emit(zeros));
  return out;
}

struct StftSynthesizer::Impl {
  StftConfig cfg;
  int channels = 0;
  std::vector<double> window;
  double cola_norm = 1.0;
  RealFft fft;
  long expected_frame = 0;
  Eigen::ArrayXXd ola;           // window_len x channels accumulator
  Eigen::Index prepad_left = 0;  // leading samples to discard
  std::vector<std::complex<double>> scratch_freq;
  std::vector<double> scratch_time;

  Impl(const StftConfig& c, int m)
      : cfg(c),
        channels(m),
        window(make_window(c.window, c.window_len)),
        fft(c.fft_size),
        ola(Eigen::ArrayXXd::Zero(c.window_len, m)),
        prepad_left(c.window_len - c.hop),
        scratch_freq(static_cast<size_t>(c.num_bins())),
        scratch_time(static_cast<size_t>(c.fft_size)) {
    cola_norm = 1.0 / cola_profile(c).constant;
  }
};

StftSynthesizer::StftSynthesizer(const StftConfig& cfg, int num_channels) {
  cfg.validate();
  if (num_channels < 1) throw DataError("stft synthesize: need at least one channel");
  impl_ = std::make_unique<Impl>(cfg, num_channels);
}
StftSynthesizer::~StftSynthesizer() = default;
StftSynthesizer::StftSynthesizer(StftSynthesizer&&) noexcept = default;
StftSynthesizer& StftSynthesizer::operator=(StftSynthesizer&&) noexcept = default;

Eigen::ArrayXXd StftSynthesizer::push(const MultichannelSpectrum& frame) {
  auto& s = *impl_;
  if (frame.frame_index != s.expected_frame)
    throw DataError("stft synthesize: frames out of order (expected " +
                    std::to_string(s.expected_frame) + ", got " + std::to_string(frame.frame_index) + ")");
  if (frame.bins.cols() != s.cfg.num_bins()) throw DataError("stft synthesize: bin count mismatch");
  if (frame.bins.rows() != s.channels) throw DataError("stft synthesize: channel count mismatch");
  ++s.expected_frame;

  for (int m = 0; m < s.channels; ++m) {
    for (int f = 0; f < s.cfg.num_bins(); ++f) s.scratch_freq[static_cast<size_t>(f)] = frame.bins(m, f);
    s.fft.inverse(s.scratch_freq.data(), s.scratch_time.data());
    for (int n = 0; n < s.cfg.window_len; ++n)
      s.ola(n, m) += s.scratch_time[static_cast<size_t>(n)] * s.window[static_cast<size_t>(n)] * s.cola_norm;
  }

  // samples in the first hop are final now
  Eigen::Index emit = s.cfg.hop;
  Eigen::Index skip = 0;
  if (s.prepad_left > 0) {
    skip = std::min<Eigen::Index>(s.prepad_left, emit);
    s.prepad_left -= skip;
    emit -= skip;
  }
  Eigen::ArrayXXd out = s.ola.middleRows(skip, emit);
  // slide the accumulator left by one hop
  const Eigen::Index keep = s.cfg.window_len - s.cfg.hop;
  s.ola.topRows(keep) = s.ola.bottomRows(keep).eval();
  s.ola.bottomRows(s.cfg.hop).setZero();
  return out;
}

Eigen::ArrayXXd StftSynthesizer::flush() {
  auto& s = *impl_;
  const Eigen::Index tail = s.cfg.window_len - s.cfg.hop - s.prepad_left;
  Eigen::ArrayXXd out = tail > 0 ? s.ola.middleRows(s.prepad_left, tail).eval()
                                 : Eigen::ArrayXXd::Zero(0, s.channels).eval();
  s.ola.setZero();
  s.prepad_left = s.cfg.window_len - s.cfg.hop;
  s.expected_frame = 0;
  return out;
}

std::vector<MultichannelSpectrum> analyze(const Audio& audio, const StftConfig& cfg) {
  StftAnalyzer analyzer(cfg, static_cast<int>(audio.num_channels()));
  std::vector<MultichannelSpectrum> frames = analyzer.push(audio.samples);
  for (auto& f : analyzer.flush()) frames.push_back(std::move(f));
  return frames;
}

Audio synthesize(const std::vector<MultichannelSpectrum>& frames, const StftConfig& cfg,
                 Eigen::Index target_len) {
  if (frames.empty()) {
    Audio empty(cfg.sample_rate, std::max<Eigen::Index>(target_len, 0), 1);
    return empty;
  }
  const int channels = static_cast<int>(frames.front().num_channels());
  StftSynthesizer synth(cfg, channels);
  const Eigen::Index total = static_cast<Eigen::Index>(frames.size()) * cfg.hop;
  Audio out(cfg.sample_rate, total, channels);
  Eigen::Index pos = 0;
  for (const auto& f : frames) {
    Eigen::ArrayXXd block = synth.push(f);
    out.samples.middleRows(pos, block.rows()) = block;
    pos += block.rows();
  }
  Eigen::ArrayXXd tail = synth.flush();
  out.samples.middleRows(pos, tail.rows()) = tail;
  pos += tail.rows();
  if (target_len >= 0) out.samples.conservativeResize(target_len, Eigen::NoChange);
  return out;
}

}  // namespace mixbeam

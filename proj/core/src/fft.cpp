#include "mixbeam/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <stdexcept>

namespace mixbeam {

struct RealFft::Impl {
  int size = 0;
  double* time = nullptr;
  fftw_complex* freq = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Impl(int n) : size(n) {
    if (n <= 0) throw std::invalid_argument("RealFft: size must be positive");
    time = fftw_alloc_real(static_cast<size_t>(n));
    freq = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    fwd = fftw_plan_dft_r2c_1d(n, time, freq, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, freq, time, FFTW_ESTIMATE);
  }
  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    if (time) fftw_free(time);
    if (freq) fftw_free(freq);
  }
};

RealFft::RealFft(int size) : impl_(std::make_unique<Impl>(size)) {}
RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

int RealFft::size() const { return impl_->size; }
int RealFft::num_bins() const { return impl_->size / 2 + 1; }

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(impl_->time, in, sizeof(double) * static_cast<size_t>(impl_->size));
  fftw_execute(impl_->fwd);
  for (int i = 0; i < num_bins(); ++i) out[i] = {impl_->freq[i][0], impl_->freq[i][1]};
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  for (int i = 0; i < num_bins(); ++i) {
    impl_->freq[i][0] = in[i].real();
    impl_->freq[i][1] = in[i].imag();
  }
  fftw_execute(impl_->inv);
  const double scale = 1.0 / impl_->size;
  for (int i = 0; i < impl_->size; ++i) out[i] = impl_->time[i] * scale;
}

namespace {
// smallest 5-smooth number >= n, keeps FFTW on fast code paths
int next_fast_size(int n) {
  while (true) {
    int m = n;
    for (int p : {2, 3, 5}) {
      while (m % p == 0) m /= p;
    }
    if (m == 1) return n;
    ++n;
  }
}
}  // namespace

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const int out_len = static_cast<int>(a.size() + b.size()) - 1;
  const int n = next_fast_size(out_len);
  RealFft fft(n);

  std::vector<double> pa(static_cast<size_t>(n), 0.0), pb(static_cast<size_t>(n), 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());

  std::vector<std::complex<double>> fa(static_cast<size_t>(fft.num_bins()));
  std::vector<std::complex<double>> fb(static_cast<size_t>(fft.num_bins()));
  fft.forward(pa.data(), fa.data());
  fft.forward(pb.data(), fb.data());
  for (int k = 0; k < fft.num_bins(); ++k) fa[static_cast<size_t>(k)] *= fb[static_cast<size_t>(k)];

  std::vector<double> full(static_cast<size_t>(n));
  fft.inverse(fa.data(), full.data());
  full.resize(static_cast<size_t>(out_len));
  return full;
}

}  // namespace mixbeam

// Real-input FFT wrapper and FFT-based convolution.
#ifndef MIXBEAM_FFT_HPP
#define MIXBEAM_FFT_HPP

#include <complex>
#include <memory>
#include <vector>

namespace mixbeam {

// One-sided real FFT of a fixed size. Plans are created once and reused;
// instances are not thread-safe, use one per thread.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const;
  int num_bins() const;  // size/2 + 1

  // time -> one-sided spectrum (length num_bins)
  void forward(const double* in, std::complex<double>* out);
  // one-sided spectrum -> time, scaled by 1/size so inverse(forward(x)) == x
  void inverse(const std::complex<double>* in, double* out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Linear convolution via zero-padded FFT; returns a.size()+b.size()-1 samples.
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mixbeam

#endif  // MIXBEAM_FFT_HPP

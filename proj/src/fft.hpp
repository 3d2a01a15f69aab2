#pragma once

// Internal FFTW helpers. The FFTW planner is not thread safe, so every plan
// creation and destruction in the library goes through one mutex.

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace billiards::detail {

std::mutex& fftw_planner_mutex();

// In-place 2D complex transforms on row-major (ny rows, nx columns) data.
// forward: X_k = sum_j x_j exp(-2 pi i k.j / n); backward has the + sign.
class Fft2 {
 public:
  Fft2(int nx, int ny);
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;
  ~Fft2();

  void forward(std::vector<std::complex<double>>& data) const;
  void backward(std::vector<std::complex<double>>& data) const;

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

}  // namespace billiards::detail

#include "fft.hpp"

#include <algorithm>
#include <cstring>

namespace billiards::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

Fft2::Fft2(int nx, int ny) : n_(nx * ny) {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  buf_ = fftw_alloc_complex(static_cast<std::size_t>(n_));
  fwd_ = fftw_plan_dft_2d(ny, nx, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_2d(ny, nx, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2::~Fft2() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(bwd_);
  fftw_free(buf_);
}

void Fft2::forward(std::vector<std::complex<double>>& data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(fwd_, p, p);
}

void Fft2::backward(std::vector<std::complex<double>>& data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(bwd_, p, p);
}

}  // namespace billiards::detail

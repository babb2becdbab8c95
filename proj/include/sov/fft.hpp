#ifndef SOV_FFT_HPP
#define SOV_FFT_HPP

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <span>

#include "sov/core.hpp"

namespace sov {

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

// FFTW's planner is not re-entrant; execution of an existing plan on new
// arrays is. Plans are created once per size and kept for the process.
inline const PlanPair& plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<PlanPair>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto p = std::make_unique<PlanPair>();
  fftw_complex* buf = fftw_alloc_complex(n * n);
  const int ni = static_cast<int>(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p->forward = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_FORWARD, flags);
  p->backward = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_BACKWARD, flags);
  fftw_free(buf);
  auto& ref = *p;
  cache.emplace(n, std::move(p));
  return ref;
}

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// In-place forward DFT of an n x n row-major array (no normalisation).
inline void fft_forward(std::span<Complex> data, std::size_t n) {
  const auto& pl = detail::plans_for(n);
  fftw_execute_dft(pl.forward, detail::as_fftw(data.data()), detail::as_fftw(data.data()));
}

/// In-place inverse DFT, normalised by 1/n^2.
inline void fft_backward(std::span<Complex> data, std::size_t n) {
  const auto& pl = detail::plans_for(n);
  fftw_execute_dft(pl.backward, detail::as_fftw(data.data()), detail::as_fftw(data.data()));
  const double s = 1.0 / static_cast<double>(n * n);
  for (auto& z : data) z *= s;
}

inline CVector to_fourier(std::span<const Complex> f, std::size_t n) {
  CVector out(f.begin(), f.end());
  fft_forward(out, n);
  return out;
}

inline CVector from_fourier(std::span<const Complex> f, std::size_t n) {
  CVector out(f.begin(), f.end());
  fft_backward(out, n);
  return out;
}

}  // namespace sov

#endif  // SOV_FFT_HPP

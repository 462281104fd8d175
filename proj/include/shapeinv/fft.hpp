#pragma once

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <fftw3.h>

namespace shapeinv::fft {

// Thin wrappers over FFTW. Plans are created once per (kind, size) under a
// lock, since the planner is not thread safe; execution with the new-array
// interface is.
namespace detail {

enum class Kind { R2C, C2R, DST1, DCT1 };

struct Buffer {
  explicit Buffer(std::size_t bytes) : p(fftw_malloc(bytes)) {
    if (!p) throw std::bad_alloc();
  }
  ~Buffer() { fftw_free(p); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  void* p;
};

inline fftw_plan plan_for(Kind kind, int n) {
  static std::mutex mu;
  static std::map<std::pair<Kind, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(kind, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  Buffer in(sizeof(fftw_complex) * (n + 2)), out(sizeof(fftw_complex) * (n + 2));
  fftw_plan p = nullptr;
  switch (kind) {
    case Kind::R2C:
      p = fftw_plan_dft_r2c_1d(n, static_cast<double*>(in.p), static_cast<fftw_complex*>(out.p), FFTW_ESTIMATE);
      break;
    case Kind::C2R:
      p = fftw_plan_dft_c2r_1d(n, static_cast<fftw_complex*>(in.p), static_cast<double*>(out.p), FFTW_ESTIMATE);
      break;
    case Kind::DST1:
      p = fftw_plan_r2r_1d(n, static_cast<double*>(in.p), static_cast<double*>(out.p), FFTW_RODFT00, FFTW_ESTIMATE);
      break;
    case Kind::DCT1:
      p = fftw_plan_r2r_1d(n, static_cast<double*>(in.p), static_cast<double*>(out.p), FFTW_REDFT00, FFTW_ESTIMATE);
      break;
  }
  if (!p) throw std::runtime_error("fftw: planning failed");
  cache.emplace(key, p);
  return p;
}

}  // namespace detail

// X_k = sum_m x_m exp(-i 2 pi k m / n), k = 0..n/2.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  int n = static_cast<int>(x.size());
  detail::Buffer in(sizeof(double) * n), out(sizeof(fftw_complex) * (n / 2 + 1));
  std::memcpy(in.p, x.data(), sizeof(double) * n);
  fftw_execute_dft_r2c(detail::plan_for(detail::Kind::R2C, n), static_cast<double*>(in.p),
                       static_cast<fftw_complex*>(out.p));
  std::vector<std::complex<double>> X(n / 2 + 1);
  std::memcpy(X.data(), out.p, sizeof(fftw_complex) * (n / 2 + 1));
  return X;
}

// Inverse of rfft without the 1/n factor: x_m = sum_k X_k exp(i 2 pi k m / n)
// over the full Hermitian spectrum.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& X, int n) {
  if (static_cast<int>(X.size()) != n / 2 + 1) throw std::invalid_argument("irfft: spectrum size");
  detail::Buffer in(sizeof(fftw_complex) * (n / 2 + 1)), out(sizeof(double) * n);
  std::memcpy(in.p, X.data(), sizeof(fftw_complex) * (n / 2 + 1));
  fftw_execute_dft_c2r(detail::plan_for(detail::Kind::C2R, n), static_cast<fftw_complex*>(in.p),
                       static_cast<double*>(out.p));
  std::vector<double> x(n);
  std::memcpy(x.data(), out.p, sizeof(double) * n);
  return x;
}

// y_j = sum_{k=1}^{n} a_k sin(pi k j / (n+1)), j = 1..n (a has length n).
inline std::vector<double> sine_synthesis(const std::vector<double>& a) {
  int n = static_cast<int>(a.size());
  if (n == 0) return {};
  detail::Buffer in(sizeof(double) * n), out(sizeof(double) * n);
  std::memcpy(in.p, a.data(), sizeof(double) * n);
  fftw_execute_r2r(detail::plan_for(detail::Kind::DST1, n), static_cast<double*>(in.p), static_cast<double*>(out.p));
  std::vector<double> y(n);
  const double* o = static_cast<const double*>(out.p);
  for (int j = 0; j < n; ++j) y[j] = 0.5 * o[j];
  return y;
}

// y_j = sum_{k=0}^{N} b_k cos(pi k j / N), j = 0..N (b has length N+1).
inline std::vector<double> cosine_synthesis(const std::vector<double>& b) {
  int n = static_cast<int>(b.size());
  if (n < 2) throw std::invalid_argument("cosine_synthesis: need at least two coefficients");
  detail::Buffer in(sizeof(double) * n), out(sizeof(double) * n);
  double* i = static_cast<double*>(in.p);
  std::memcpy(i, b.data(), sizeof(double) * n);
  i[0] *= 2.0;
  i[n - 1] *= 2.0;
  fftw_execute_r2r(detail::plan_for(detail::Kind::DCT1, n), i, static_cast<double*>(out.p));
  std::vector<double> y(n);
  const double* o = static_cast<const double*>(out.p);
  for (int j = 0; j < n; ++j) y[j] = 0.5 * o[j];
  return y;
}

}  // namespace shapeinv::fft

#pragma once

// Data-parallel inner loops shared by the estimators. Every kernel has a
// scalar reference implementation and, on x86-64, an AVX2+FMA variant. The
// active table is chosen once at runtime from CPU features; setting the
// environment variable DID_SIMD=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace did::kernels {

struct KernelTable {
  std::string_view name;
  // sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a[i] * b[i] * c[i]
  double (*dot3)(const double* a, const double* b, const double* c, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a[i] - b[i]
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  // out[i] += coef * mask[i] * (x[i] - center)
  void (*centered_axpy)(double coef, const double* mask, const double* x, double center,
                        double* out, std::size_t n);
  // max_i |x[i]| * scale[i]
  double (*max_abs_scaled)(const double* x, const double* scale, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// Null when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;
const KernelTable& active() noexcept;

inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double dot3(std::span<const double> a, std::span<const double> b,
                   std::span<const double> c) {
  return active().dot3(a.data(), b.data(), c.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().sub(a.data(), b.data(), out.data(), a.size());
}

inline void centered_axpy(double coef, std::span<const double> mask, std::span<const double> x,
                          double center, std::span<double> out) {
  active().centered_axpy(coef, mask.data(), x.data(), center, out.data(), x.size());
}

inline double max_abs_scaled(std::span<const double> x, std::span<const double> scale) {
  return active().max_abs_scaled(x.data(), scale.data(), x.size());
}

}  // namespace did::kernels

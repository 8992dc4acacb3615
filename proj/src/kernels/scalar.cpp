#include "did/kernels.hpp"

#include <cmath>

namespace did::kernels {
namespace {

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot3_scalar(const double* a, const double* b, const double* c, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i] * c[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void centered_axpy_scalar(double coef, const double* mask, const double* x, double center,
                          double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += coef * mask[i] * (x[i] - center);
}

double max_abs_scaled_scalar(const double* x, const double* scale, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::fabs(x[i]) * scale[i];
    if (v > m) m = v;
  }
  return m;
}

constexpr KernelTable kScalar{
    "scalar",      sum_scalar,           dot_scalar, dot3_scalar, axpy_scalar, sub_scalar,
    centered_axpy_scalar, max_abs_scaled_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace did::kernels

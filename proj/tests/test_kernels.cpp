#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "did/kernels.hpp"

using namespace did::kernels;

namespace {

struct Inputs {
  std::vector<double> a, b, c, mask;
};

Inputs make_inputs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Inputs in;
  for (std::size_t i = 0; i < n; ++i) {
    in.a.push_back(z(rng));
    in.b.push_back(z(rng));
    in.c.push_back(std::abs(z(rng)));
    in.mask.push_back(i % 3 == 0 ? 0.0 : 1.0);
  }
  return in;
}

double rel(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("avx2 matches the scalar reference on ragged lengths") {
  const KernelTable* simd = avx2_table();
  if (!simd) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  const KernelTable& ref = scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 33u, 1000u, 1003u}) {
    CAPTURE(n);
    const auto in = make_inputs(n, 42 + n);
    CHECK(rel(simd->sum(in.a.data(), n), ref.sum(in.a.data(), n)) < 1e-13);
    CHECK(rel(simd->dot(in.a.data(), in.b.data(), n), ref.dot(in.a.data(), in.b.data(), n)) < 1e-13);
    CHECK(rel(simd->dot3(in.a.data(), in.b.data(), in.c.data(), n),
              ref.dot3(in.a.data(), in.b.data(), in.c.data(), n)) < 1e-13);
    CHECK(simd->max_abs_scaled(in.a.data(), in.c.data(), n) ==
          ref.max_abs_scaled(in.a.data(), in.c.data(), n));

    std::vector<double> y1 = in.b, y2 = in.b;
    simd->axpy(0.7, in.a.data(), y1.data(), n);
    ref.axpy(0.7, in.a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

    std::vector<double> d1(n), d2(n);
    simd->sub(in.a.data(), in.b.data(), d1.data(), n);
    ref.sub(in.a.data(), in.b.data(), d2.data(), n);
    CHECK(d1 == d2);

    std::vector<double> o1(n, 1.0), o2(n, 1.0);
    simd->centered_axpy(-1.3, in.mask.data(), in.a.data(), 0.25, o1.data(), n);
    ref.centered_axpy(-1.3, in.mask.data(), in.a.data(), 0.25, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-14));
  }
}

TEST_CASE("scalar reference values") {
  const KernelTable& ref = scalar_table();
  const double a[] = {1, 2, 3, 4, 5};
  const double b[] = {2, 0, -1, 1, 0.5};
  const double m[] = {1, 0, 1, 0, 1};
  CHECK(ref.sum(a, 5) == 15.0);
  CHECK(ref.dot(a, b, 5) == 2 - 3 + 4 + 2.5);
  CHECK(ref.dot3(a, b, m, 5) == 2 - 3 + 2.5);
  CHECK(ref.max_abs_scaled(b, a, 5) == 4.0);
  double out[5] = {0, 0, 0, 0, 0};
  ref.centered_axpy(2.0, m, a, 3.0, out, 5);
  CHECK(out[0] == -4.0);
  CHECK(out[1] == 0.0);
  CHECK(out[4] == 4.0);
}

TEST_CASE("active table is one of the two") {
  const auto& act = active();
  CHECK((act.name == scalar_table().name || (avx2_table() && act.name == avx2_table()->name)));
}

}

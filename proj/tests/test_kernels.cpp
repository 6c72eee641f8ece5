#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mf/kernels.hpp"
#include "mf/rng.hpp"

using namespace mf;
namespace k = mf::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Pcg32& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_double() * 2.0 - 1.0;
  return v;
}

// FMA reorders roundoff; equivalence is to tight tolerance, not bitwise.
void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree on random inputs") {
  if (!k::detail::cpu_has_avx2()) return;  // nothing to compare against
  Pcg32 rng(7, 1);
  for (std::size_t rows : {1u, 3u, 8u, 17u}) {
    for (std::size_t cols : {1u, 4u, 5u, 33u}) {
      auto w = random_vec(rows * cols, rng);
      auto x = random_vec(cols, rng);
      auto a = random_vec(rows, rng);

      std::vector<double> y1(rows, 0.5), y2(rows, 0.5);
      k::detail::matvec_acc_scalar(w.data(), x.data(), y1.data(), rows, cols);
      k::detail::matvec_acc_avx2(w.data(), x.data(), y2.data(), rows, cols);
      check_close(y1, y2);

      std::vector<double> g1(cols, 0.25), g2(cols, 0.25);
      k::detail::matvec_t_acc_scalar(w.data(), a.data(), g1.data(), rows, cols);
      k::detail::matvec_t_acc_avx2(w.data(), a.data(), g2.data(), rows, cols);
      check_close(g1, g2);

      auto w1 = w, w2 = w;
      k::detail::outer_acc_scalar(w1.data(), a.data(), x.data(), rows, cols);
      k::detail::outer_acc_avx2(w2.data(), a.data(), x.data(), rows, cols);
      check_close(w1, w2);
    }
  }
  for (std::size_t n : {1u, 4u, 7u, 64u, 129u}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);
    auto y1 = y, y2 = y;
    k::detail::axpy_scalar(0.37, x.data(), y1.data(), n);
    k::detail::axpy_avx2(0.37, x.data(), y2.data(), n);
    check_close(y1, y2);
    CHECK(k::detail::dot_scalar(x.data(), y.data(), n) ==
          doctest::Approx(k::detail::dot_avx2(x.data(), y.data(), n))
              .epsilon(1e-12));
  }
}

TEST_CASE("dispatch honors set_backend") {
  auto prev = k::active_backend();
  k::set_backend(k::Backend::Scalar);
  CHECK(k::active_backend() == k::Backend::Scalar);
  double a[2] = {1.0, 2.0}, b[2] = {3.0, 4.0};
  CHECK(k::dot(a, b, 2) == doctest::Approx(11.0));
  k::set_backend(prev);
}

TEST_CASE("matvec against hand example") {
  // W = [[1,2],[3,4]], x = (1,-1) -> (-1,-1)
  double w[4] = {1, 2, 3, 4};
  double x[2] = {1, -1};
  double y[2] = {0, 0};
  k::matvec_acc(w, x, y, 2, 2);
  CHECK(y[0] == doctest::Approx(-1.0));
  CHECK(y[1] == doctest::Approx(-1.0));
}

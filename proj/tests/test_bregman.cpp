#include <doctest.h>

#include <cmath>

#include "vrmd/bregman.hpp"
#include "vrmd/rng.hpp"

using namespace vrmd;

TEST_CASE("euclidean divergence is half the squared distance") {
  const ProximalFamily f = ProximalFamily::euclidean();
  RngStream rng(11, 0);
  for (int it = 0; it < 100; ++it) {
    DenseVector x(4), y(4);
    for (auto& v : x) v = rng.next_gaussian();
    for (auto& v : y) v = rng.next_gaussian();
    CHECK(bregman_divergence(f, 1, 1, x, y) ==
          doctest::Approx(0.5 * norm2_sq(sub(x, y))).epsilon(1e-14));
  }
}

TEST_CASE("divergence of a point with itself is zero for every family") {
  RngStream rng(12, 0);
  DenseVector x{0.4, -2.0, 1.0};
  CHECK(bregman_divergence(ProximalFamily::euclidean(), 1, 1, x, x) == 0.0);
  CHECK(bregman_divergence(ProximalFamily::scaled({2.0, 3.0}), 1, 1, x, x) == 0.0);
  ProximalFamily ada = ProximalFamily::adagrad(3, 1e-3);
  ada.diag.update({1.0, 2.0, 3.0});
  CHECK(bregman_divergence(ada, 1, 1, x, x) == 0.0);
  (void)rng;
}

TEST_CASE("diagonal quadratic form evaluates by hand") {
  // H = diag(4, 9) realized through accumulators (4-m)^2... simpler: build the
  // state so that sqrt(acc)+m equals exactly (4, 9) with m = 1.
  ProximalFamily f = ProximalFamily::adagrad(2, 1.0);
  f.diag.update({3.0, 8.0});  // acc = (9, 64) -> H = (3+1, 8+1) = (4, 9)
  DenseVector x{1.0, 1.0}, y{0.0, 0.0};
  CHECK(bregman_divergence(f, 1, 1, x, y) == doctest::Approx(6.5).epsilon(1e-14));
}

TEST_CASE("adagrad accumulator update from a fresh state") {
  const double m = 1e-3;
  ProximalFamily f = ProximalFamily::adagrad(2, m);
  const DiagonalState next = update_diagonal_state(f.diag, {3.0, 4.0});
  CHECK(next.entry(0) == doctest::Approx(3.0 + m).epsilon(1e-12));
  CHECK(next.entry(1) == doctest::Approx(4.0 + m).epsilon(1e-12));
}

TEST_CASE("rmsprop with beta = 1 leaves the accumulator unchanged") {
  ProximalFamily f = ProximalFamily::rmsprop(2, 1e-3, 1.0);
  f.diag.update({5.0, 5.0});
  CHECK(f.diag.acc[0] == 0.0);
  CHECK(f.diag.acc[1] == 0.0);
}

TEST_CASE("adagrad accumulation is order-independent") {
  ProximalFamily a = ProximalFamily::adagrad(2, 1e-3);
  ProximalFamily b = ProximalFamily::adagrad(2, 1e-3);
  const DenseVector v{0.5, -1.5}, w{2.0, 0.25};
  a.diag.update(v);
  a.diag.update(w);
  b.diag.update(w);
  b.diag.update(v);
  CHECK(a.diag.acc[0] == doctest::Approx(b.diag.acc[0]).epsilon(1e-15));
  CHECK(a.diag.acc[1] == doctest::Approx(b.diag.acc[1]).epsilon(1e-15));
}

TEST_CASE("strong-convexity floors") {
  CHECK(strong_convexity_floor(ProximalFamily::euclidean()) == 1.0);
  CHECK(strong_convexity_floor(ProximalFamily::adagrad(3, 1e-3)) == 1e-3);
  CHECK(strong_convexity_floor(ProximalFamily::scaled({2.0, 3.0, 5.0})) == 2.0);
  ProximalFamily empty;
  empty.kind = FamilyKind::kScaledEuclidean;
  CHECK_THROWS_AS(strong_convexity_floor(empty), std::invalid_argument);
}

TEST_CASE("floor property: B(x,y) >= (m/2)||x-y||^2 on random pairs") {
  RngStream rng(13, 0);
  std::vector<ProximalFamily> families;
  families.push_back(ProximalFamily::euclidean());
  families.push_back(ProximalFamily::scaled({0.7, 1.3, 2.0, 0.9}, 2));
  ProximalFamily ada = ProximalFamily::adagrad(5, 1e-3);
  ProximalFamily ema = ProximalFamily::rmsprop(5, 1e-3);
  for (int i = 0; i < 100; ++i) {
    DenseVector v(5);
    for (auto& x : v) x = rng.next_gaussian();
    ada.diag.update(v);
    ema.diag.update(v);
  }
  families.push_back(ada);
  families.push_back(ema);
  for (const auto& f : families) {
    const double m = strong_convexity_floor(f);
    for (int it = 0; it < 1000; ++it) {
      DenseVector x(5), y(5);
      for (auto& v : x) v = 2.0 * rng.next_gaussian();
      for (auto& v : y) v = 2.0 * rng.next_gaussian();
      const std::int64_t t = 1 + static_cast<std::int64_t>(rng.next_below(2));
      const std::int64_t k = 1 + static_cast<std::int64_t>(rng.next_below(2));
      CHECK(bregman_divergence(f, t, k, x, y) >= 0.5 * m * norm2_sq(sub(x, y)) - 1e-12);
    }
  }
}

TEST_CASE("diagonal entries never fall below m") {
  RngStream rng(14, 0);
  ProximalFamily f = ProximalFamily::rmsprop(4, 1e-3, 0.999);
  for (int i = 0; i < 100; ++i) {
    DenseVector v(4);
    for (auto& x : v) x = 3.0 * rng.next_gaussian();
    f.diag.update(v);
    for (std::size_t j = 0; j < 4; ++j) CHECK(f.diag.entry(j) >= 1e-3);
  }
}

TEST_CASE("adagrad accumulator entries are nondecreasing") {
  RngStream rng(15, 0);
  ProximalFamily f = ProximalFamily::adagrad(3, 1e-3);
  DenseVector prev(3, 0.0);
  for (int i = 0; i < 50; ++i) {
    DenseVector v(3);
    for (auto& x : v) x = rng.next_gaussian();
    f.diag.update(v);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(f.diag.acc[j] >= prev[j]);
      prev[j] = f.diag.acc[j];
    }
  }
}

#include "roughflow/tensor_series.hpp"

#include "doctest.h"
#include "oracles.hpp"

using namespace roughflow;

TEST_CASE("unit is the multiplicative identity") {
  auto g = oracle::random_series(2, 3, 0.7, 1.0);
  auto u = TruncatedTensorSeries::unit(2, 3);
  CHECK((tensor_mul(u, g) - g).max_abs() == 0.0);
  CHECK((tensor_mul(g, u) - g).max_abs() == 0.0);
}

TEST_CASE("two-segment Chen product matches iterated-integral quadrature") {
  // lift of the piecewise-linear path 0 -> v -> v+w, width 2, depth 3
  Vec v(2), w(2);
  v << 0.7, -0.3;
  w << 0.2, 0.9;
  TruncatedTensorSeries lv(2, 3), lw(2, 3);
  lv.level(1) = v;
  lw.level(1) = w;
  const auto prod = tensor_mul(tensor_exp(lv), tensor_exp(lw));
  const auto ref = oracle::signature_quadrature({Vec::Zero(2), v, v + w}, 3, 5000);
  CHECK((prod - ref).max_abs() < 1e-8);

  // level-2 antisymmetric part is the polygonal area 0.5*(v1*w2 - v2*w1)
  const double area = 0.5 * (prod.coeff({0, 1}) - prod.coeff({1, 0}));
  CHECK(area == doctest::Approx(0.5 * (v(0) * w(1) - v(1) * w(0))).epsilon(1e-12));
}

TEST_CASE("tensor product is associative") {
  for (int trial = 0; trial < 20; ++trial) {
    auto a = oracle::random_series(2, 3, 0.8, oracle::runif());
    auto b = oracle::random_series(2, 3, 0.8, oracle::runif());
    auto c = oracle::random_series(2, 3, 0.8, oracle::runif());
    const auto lhs = tensor_mul(tensor_mul(a, b), c);
    const auto rhs = tensor_mul(a, tensor_mul(b, c));
    CHECK((lhs - rhs).max_abs() < 1e-12);
  }
}

TEST_CASE("exp of a pure level-1 scalar series gives the classical powers") {
  TruncatedTensorSeries l(1, 3);
  const double d = 0.37;
  l.level(1)(0) = d;
  const auto g = tensor_exp(l);
  CHECK(g.scalar() == 1.0);
  CHECK(g.level(1)(0) == doctest::Approx(d).epsilon(1e-15));
  CHECK(g.level(2)(0) == doctest::Approx(d * d / 2).epsilon(1e-15));
  CHECK(g.level(3)(0) == doctest::Approx(d * d * d / 6).epsilon(1e-15));
}

TEST_CASE("log of a depth-2 group-like element") {
  // log(1 + a + A) = a + A - (a (x) a)/2 at depth 2
  TruncatedTensorSeries g(2, 2);
  g.scalar() = 1.0;
  Vec a = oracle::rvec(2, 0.6);
  Vec A = oracle::rvec(4, 0.6);
  g.level(1) = a;
  g.level(2) = A;
  const auto l = tensor_log(g);
  CHECK(l.scalar() == 0.0);
  CHECK((l.level(1) - a).norm() < 1e-15);
  Vec expected(4);
  expected << A(0) - a(0) * a(0) / 2, A(1) - a(0) * a(1) / 2,
      A(2) - a(1) * a(0) / 2, A(3) - a(1) * a(1) / 2;
  CHECK((l.level(2) - expected).norm() < 1e-14);
}

TEST_CASE("exp and log are mutually inverse") {
  for (int trial = 0; trial < 100; ++trial) {
    auto l = oracle::random_series(2, 3, 1.0, 0.0);
    CHECK((tensor_log(tensor_exp(l)) - l).max_abs() < 1e-12);
    auto g = tensor_exp(oracle::random_series(2, 3, 0.9, 0.0));
    CHECK((tensor_exp(tensor_log(g)) - g).max_abs() < 1e-12);
  }
}

TEST_CASE("rejects exp of nonzero scalar part and log away from 1") {
  auto s = oracle::random_series(2, 2, 0.5, 0.25);
  CHECK_THROWS_AS(tensor_exp(s), std::invalid_argument);
  auto g = oracle::random_series(2, 2, 0.5, 0.9);
  CHECK_THROWS_AS(tensor_log(g), std::invalid_argument);
  TruncatedTensorSeries a(2, 2), b(2, 3);
  CHECK_THROWS_AS(tensor_mul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(TruncatedTensorSeries(0, 2), std::invalid_argument);
}

TEST_CASE("piecewise-linear lifts satisfy the shuffle identities") {
  TruncatedTensorSeries acc = TruncatedTensorSeries::unit(2, 4);
  for (int seg = 0; seg < 4; ++seg) {
    TruncatedTensorSeries l(2, 4);
    l.level(1) = oracle::rvec(2, 0.8);
    acc = tensor_mul(acc, tensor_exp(l));
  }
  const auto chk = check_weak_geometric(acc, 1e-10);
  CHECK(chk.pass);
  CHECK(chk.max_violation < 1e-10);
}

TEST_CASE("pure-area element fails the shuffle test") {
  // 1 + c*(e1 (x) e1) has X^1 = 0 but X^{11} = c != 0.5*(X^1)^2
  TruncatedTensorSeries g(2, 2);
  g.scalar() = 1.0;
  g.level(2)(0) = 1.0;
  const auto chk = check_weak_geometric(g, 1e-10);
  CHECK_FALSE(chk.pass);
  CHECK(chk.max_violation == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("group-like elements are closed under the product") {
  auto g1 = tensor_exp(oracle::random_series(2, 3, 0.7, 0.0));
  // make g1 weak geometric: use a level-1-only exponent
  TruncatedTensorSeries l1(2, 3), l2(2, 3);
  l1.level(1) = oracle::rvec(2);
  l2.level(1) = oracle::rvec(2);
  const auto prod = tensor_mul(tensor_exp(l1), tensor_exp(l2));
  CHECK(prod.scalar() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(check_weak_geometric(prod, 1e-10).pass);
}

TEST_CASE("shuffle enumeration has the right cardinality and multiset") {
  const auto sh = shuffle_words({0, 1}, {2});
  REQUIRE(sh.size() == 3);
  // (0 1) shuffled with (2): 012, 021, 201
  CHECK(sh[0] == std::vector<int>({0, 1, 2}));
  CHECK(sh[1] == std::vector<int>({0, 2, 1}));
  CHECK(sh[2] == std::vector<int>({2, 0, 1}));
  CHECK(shuffle_words({0, 0}, {0, 0}).size() == 6);
}

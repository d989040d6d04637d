#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pdmpv/parallel.hpp"
#include "pdmpv/rng.hpp"

using namespace pdmpv;

TEST_CASE("counter rng is a pure function of key and counter") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  CHECK(a.counter() == 100);
}

TEST_CASE("split streams are distinct and reproducible") {
  CounterRng s0 = CounterRng::split(7, 0), s1 = CounterRng::split(7, 1);
  CounterRng again = CounterRng::split(7, 1);
  CHECK(s0() != s1());
  CHECK(again() == CounterRng::split(7, 1)());
}

TEST_CASE("uniform and exponential stay in range") {
  CounterRng rng(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double e = rng.exponential();
    REQUIRE(std::isfinite(e));
    REQUIRE(e >= 0.0);
    sum += e;
  }
  // mean 1, sd 1/sqrt(n)
  CHECK(std::abs(sum / n - 1.0) < 5.0 / std::sqrt(n));
}

TEST_CASE("parallel_for covers every index once for any worker count") {
  for (std::size_t threads : {1u, 2u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(1001);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 57) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("pairwise sum does not depend on the worker count") {
  std::vector<double> v(12345);
  CounterRng rng(11);
  for (double& x : v) x = rng.uniform() * 1e3 - 500.0;
  const double ref = pairwise_sum(v);
  for (std::size_t threads : {1u, 2u, 5u}) {
    std::vector<double> w(v.size());
    parallel_for(v.size(), threads, [&](std::size_t i) { w[i] = v[i]; });
    CHECK(pairwise_sum(w) == ref);
  }
  double naive = 0.0;
  for (double x : v) naive += x;
  CHECK(ref == doctest::Approx(naive).epsilon(1e-9));
  CHECK(pairwise_sum({}) == 0.0);
}

TEST_CASE("thread resolution prefers the explicit request") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads() >= 1);
}

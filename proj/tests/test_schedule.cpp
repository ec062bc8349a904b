#include <doctest.h>

#include <cmath>

#include "nnd/schedule.hpp"

using namespace nnd;

TEST_CASE("train_sigmas endpoints and monotonicity on defaults") {
  const auto ts = train_sigmas(150, 1e-2, 1e2);
  CHECK(ts.values.size() == 150);
  CHECK(std::abs(ts.at(1) - 1e-2) / 1e-2 <= 1e-12);
  CHECK(std::abs(ts.at(150) - 1e2) / 1e2 <= 1e-12);
  for (int i = 2; i <= 150; ++i) {
    CHECK(ts.at(i) > ts.at(i - 1));
  }
}

TEST_CASE("train_sigmas mid value matches the geometric law") {
  // frozen from direct evaluation of 10^(2 - 4*75/149) in extended precision
  const auto ts = train_sigmas(150, 1e-2, 1e2);
  CHECK(ts.at(75) == doctest::Approx(0.96956556159359195).epsilon(1e-13));
}

TEST_CASE("train_sigmas validates input") {
  CHECK_THROWS_AS(train_sigmas(1, 1e-2, 1e2), ValidationError);
  CHECK_THROWS_AS(train_sigmas(150, 0.0, 1e2), ValidationError);
  CHECK_THROWS_AS(train_sigmas(150, 1e-2, -1.0), ValidationError);
  CHECK_THROWS_AS(train_sigmas(150, 1.0, 1.0), ValidationError);
}

TEST_CASE("train_sigmas supports descending endpoints") {
  const auto ts = train_sigmas(10, 1e2, 1e-2);
  CHECK(ts.at(1) == doctest::Approx(1e2).epsilon(1e-12));
  CHECK(ts.at(10) == doctest::Approx(1e-2).epsilon(1e-12));
  for (int i = 2; i <= 10; ++i) CHECK(ts.at(i) < ts.at(i - 1));
}

TEST_CASE("anneal_schedule defaults: endpoints, staircase, alpha law") {
  const auto sched = anneal_schedule(600, 5, 1e-2, 1e2, 2e-6);
  CHECK(sched.sigmas.size() == 600);

  // endpoint pinning: first K and last K iterations
  for (int t = 1; t <= 5; ++t) {
    CHECK(std::abs(sched.sigma(t) - 1e-2) / 1e-2 <= 1e-12);
  }
  for (int t = 596; t <= 600; ++t) {
    CHECK(std::abs(sched.sigma(t) - 1e2) / 1e2 <= 1e-12);
  }

  // t=1 and t=600 alphas
  CHECK(sched.alpha(1) == doctest::Approx(2e-6).epsilon(1e-12));
  CHECK(sched.alpha(600) == doctest::Approx(200.0).epsilon(1e-12));

  // frozen from direct evaluation of 1e-2 * 10^(4*59/119)
  CHECK(sched.sigma(300) == doctest::Approx(0.96204032710647589).epsilon(1e-13));

  // staircase: exactly constant within each K-block, non-decreasing in t
  for (int t = 2; t <= 600; ++t) {
    if ((t - 1) / 5 == (t - 2) / 5) {
      CHECK(sched.sigma(t) == sched.sigma(t - 1));
    } else {
      CHECK(sched.sigma(t) > sched.sigma(t - 1));
    }
  }

  // alpha = zeta (sigma/sigma_1)^2 exactly
  for (int t = 1; t <= 600; ++t) {
    const double r = sched.sigma(t) / 1e-2;
    CHECK(sched.alpha(t) == 2e-6 * r * r);
  }
}

TEST_CASE("alpha ratios follow sigma ratios squared") {
  const auto sched = default_anneal_schedule();
  for (int t : {1, 17, 100, 299, 300, 301, 454, 600}) {
    for (int u : {1, 55, 208, 600}) {
      const double lhs = sched.alpha(t) / sched.alpha(u);
      const double rhs = std::pow(sched.sigma(t) / sched.sigma(u), 2.0);
      CHECK(std::abs(lhs - rhs) / rhs <= 1e-12);
    }
  }
}

TEST_CASE("anneal_schedule: T not a multiple of K keeps the last full block") {
  const auto sched = anneal_schedule(603, 5, 1e-2, 1e2, 2e-6);
  CHECK(sched.sigmas.size() == 603);
  // the trailing partial block (t = 601..603) carries sigma_T
  for (int t = 596; t <= 603; ++t) {
    CHECK(std::abs(sched.sigma(t) - 1e2) / 1e2 <= 1e-12);
  }
  CHECK(std::abs(sched.sigma(1) - 1e-2) / 1e-2 <= 1e-12);
}

TEST_CASE("anneal_schedule validates input") {
  CHECK_THROWS_AS(anneal_schedule(5, 5, 1e-2, 1e2, 2e-6), ValidationError);
  CHECK_THROWS_AS(anneal_schedule(4, 5, 1e-2, 1e2, 2e-6), ValidationError);
  CHECK_THROWS_AS(anneal_schedule(600, 5, 0.0, 1e2, 2e-6), ValidationError);
  CHECK_THROWS_AS(anneal_schedule(600, 5, 1e-2, 1e2, 0.0), ValidationError);
  CHECK_THROWS_AS(anneal_schedule(600, 0, 1e-2, 1e2, 2e-6), ValidationError);
  // K < T < 2K leaves no second full block
  CHECK_THROWS_AS(anneal_schedule(8, 5, 1e-2, 1e2, 2e-6), ValidationError);
}

TEST_CASE("default schedules match the documented parameterization") {
  const auto sched = default_anneal_schedule();
  CHECK(sched.T == 600);
  CHECK(sched.K == 5);
  CHECK(sched.sigma_1 == 1e-2);
  CHECK(sched.sigma_T == 1e2);
  CHECK(sched.zeta == 2e-6);

  const auto ts = default_train_sigmas();
  CHECK(ts.L == 150);
  CHECK(ts.sigma_1 == 1e-2);
  CHECK(ts.sigma_L == 1e2);
}

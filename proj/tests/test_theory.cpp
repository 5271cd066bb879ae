/*
 * Copyright 2026 The ultraloglog-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ull/errors.hpp"
#include "ull/theory.hpp"

using namespace ull::theory;
using ull::DomainError;

namespace {

// Direct sum of 10^7 terms (smallest first) plus the integral tail and the
// trapezoid end correction.
double hurwitz_oracle(double s, double a) {
  constexpr long N = 10'000'000;
  long double sum = 0.0L;
  for (long k = N - 1; k >= 0; --k) sum += std::pow((long double)k + a, -(long double)s);
  const long double x = (long double)N + a;
  sum += std::pow(x, 1.0L - s) / (s - 1.0L) + 0.5L * std::pow(x, -(long double)s);
  return static_cast<double>(sum);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("gamma") {
  CHECK(ull::theory::gamma(1.0) == 1.0);
  CHECK(ull::theory::gamma(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-15));
  CHECK(ull::theory::gamma(5.0) == doctest::Approx(24.0).epsilon(1e-15));
  for (double tau = 0.05; tau <= 5.0; tau += 0.05) {
    const double r = ull::theory::gamma(2 * tau) / (ull::theory::gamma(tau) * ull::theory::gamma(tau));
    CHECK(std::isfinite(r));
    CHECK(r > 0.0);
  }
}

TEST_CASE("Hurwitz zeta against closed forms and a direct sum") {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(hurwitz_zeta(2, 1) == doctest::Approx(pi2 / 6).epsilon(1e-12));
  CHECK(hurwitz_zeta(2, 0.5) == doctest::Approx(pi2 / 2).epsilon(1e-12));
  CHECK(hurwitz_zeta(3, 1) == doctest::Approx(1.2020569031595942).epsilon(1e-12));
  CHECK(hurwitz_zeta(4, 1) == doctest::Approx(pi2 * pi2 / 90).epsilon(1e-12));
  for (auto [s, a] : {std::pair{2.0, 1.25}, {3.0, 1.25}, {2.0, 2.0}, {2.5, 1.0 + 1.0 / 3}, {3.0, 1.0001}}) {
    CHECK(rel(hurwitz_zeta(s, a), hurwitz_oracle(s, a)) < 1e-13);
  }
  CHECK_THROWS_AS(hurwitz_zeta(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(hurwitz_zeta(2.0, 0.0), DomainError);
}

TEST_CASE("configuration validation") {
  CHECK(kUltraLogLog.offset() == 0.25);
  CHECK_THROWS_AS((GeneralizedConfig{1.0, 2, 6}.validate()), DomainError);
  CHECK_THROWS_AS((GeneralizedConfig{2.0, -1, 6}.validate()), DomainError);
  CHECK_THROWS_AS((GeneralizedConfig{2.0, 2, 0}.validate()), DomainError);
  CHECK_THROWS_AS(mvp_uncompressed({0.5, 2, 6}), DomainError);
}

TEST_CASE("uncompressed MVP table") {
  CHECK(mvp_uncompressed(kUltraLogLog) == doctest::Approx(4.6313).epsilon(1e-4));
  CHECK(mvp_uncompressed(kHyperLogLog) == doctest::Approx(6.4485).epsilon(1e-4));
  CHECK(mvp_uncompressed({2, 3, 6}) == doctest::Approx(4.4940).epsilon(1e-4));
  CHECK(mvp_uncompressed({std::sqrt(2.0), 9, 7}) == doctest::Approx(3.9025).epsilon(1e-4));
  // HLL: 6 ln2 / zeta(2, 2) = 6 ln 2 / (pi^2/6 - 1).
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(mvp_uncompressed(kHyperLogLog) ==
        doctest::Approx(6 * std::numbers::ln2 / (pi2 / 6 - 1)).epsilon(1e-13));
}

TEST_CASE("martingale MVP") {
  CHECK(mvp_martingale(kUltraLogLog) == doctest::Approx(3.4657).epsilon(1e-4));
  CHECK(mvp_martingale(kHyperLogLog) == doctest::Approx(4.1589).epsilon(1e-4));
  // (r+q)/2 ln(b) (1 + c) with c = 1/4 and 1 respectively.
  CHECK(mvp_martingale(kUltraLogLog) == doctest::Approx(4 * std::numbers::ln2 * 1.25).epsilon(1e-15));
  CHECK(mvp_martingale(kHyperLogLog) == doctest::Approx(3 * std::numbers::ln2 * 2).epsilon(1e-15));
}

TEST_CASE("entropy and compressed MVP") {
  CHECK(shannon_entropy_rate(kUltraLogLog) == doctest::Approx(3.99).epsilon(2e-3));
  CHECK(mvp_compressed(kUltraLogLog) == doctest::Approx(2.3122).epsilon(1e-4));
  CHECK(mvp_compressed(kHyperLogLog) == doctest::Approx(3.0437).epsilon(1e-4));
  // Relation rate = mvp * fisher_factor.
  CHECK(shannon_entropy_rate(kUltraLogLog) ==
        doctest::Approx(mvp_compressed(kUltraLogLog) * fisher_factor(kUltraLogLog)).epsilon(1e-13));
  CHECK(mvp_compressed_limit() == doctest::Approx(1.98).epsilon(2e-3));
  CHECK(mvp_compressed_martingale_limit() == doctest::Approx(1.63).epsilon(2e-3));
  CHECK(mvp_compressed_martingale(kUltraLogLog) / mvp_compressed_martingale(kHyperLogLog) ==
        doctest::Approx(0.88).epsilon(5e-3));
}

TEST_CASE("entropy quadrature is converged") {
  for (const GeneralizedConfig& c : {kUltraLogLog, kHyperLogLog, GeneralizedConfig{1.3, 5, 6},
                                     GeneralizedConfig{4.0, 0, 6}}) {
    const double coarse = shannon_entropy_rate(c, 1e-10);
    const double fine = shannon_entropy_rate(c, 1e-11);
    CHECK(std::abs(coarse - fine) < 1e-9);
  }
}

TEST_CASE("compressed MVP approaches its limit") {
  double previous = mvp_compressed({2.0, 0, 6});
  for (int q = 1; q <= 24; ++q) {
    const double current = mvp_compressed({2.0, q, 6});
    CHECK(current < previous);
    CHECK(current > mvp_compressed_limit());
    previous = current;
  }
  CHECK(previous == doctest::Approx(mvp_compressed_limit()).epsilon(1e-4));
  CHECK(mvp_compressed({1.2, 80, 6}) == doctest::Approx(mvp_compressed_limit()).epsilon(1e-4));
}

TEST_CASE("uncompressed MVP grid is finite and smooth") {
  for (int q = 0; q <= 6; ++q) {
    double prev = 0.0;
    double prev_diff = 0.0;
    const int points = 60;
    for (int i = 0; i < points; ++i) {
      const double b = 1.05 * std::pow(2.2 / 1.05, i / double(points - 1));
      const double v = mvp_uncompressed({b, q, 6});
      REQUIRE(std::isfinite(v));
      CHECK(v > 0.0);
      if (i >= 2) CHECK(std::abs((v - prev) - prev_diff) < 0.5);  // bounded second difference
      if (i >= 1) prev_diff = v - prev;
      prev = v;
    }
  }
}

TEST_CASE("minimum of the uncompressed MVP for r = 6") {
  const auto best = minimize_mvp_uncompressed(6);
  CHECK(best.q == 18);
  CHECK(best.b == doctest::Approx(1.1976).epsilon(1e-3));
  CHECK(best.mvp == doctest::Approx(3.4030).epsilon(1e-3));
}

TEST_CASE("GRA theory") {
  const auto opt = optimize_tau(Objective::gra, 2.0);
  CHECK(opt.tau == doctest::Approx(0.755097).epsilon(1e-5));
  CHECK(opt.v == doctest::Approx(0.616990).epsilon(1e-5));
  CHECK(8 * opt.v == doctest::Approx(4.935917).epsilon(1e-6));
  CHECK(gra_variance_factor(kUltraLogLog, opt.tau) == opt.v);
  // Quoted coefficients correspond to a (1 + 2^-tau)^tau normalization.
  const auto phi = gra_coefficients(2.0, 0.755097);
  const double quoted = std::pow((1 + std::pow(2.0, -0.755097)) / 1.25, 0.755097);
  CHECK(phi[0] * quoted == doctest::Approx(4.841356).epsilon(1e-6));
  CHECK(phi[1] * quoted == doctest::Approx(2.539198).epsilon(1e-6));
  CHECK(phi[2] * quoted == doctest::Approx(3.477312).epsilon(1e-6));
  CHECK(phi[3] * quoted == doctest::Approx(1.175153).epsilon(1e-6));
  // Efficiency for HLL at tau = 1 is high.
  CHECK(mvp_uncompressed(kHyperLogLog) / (6 * gra_variance_factor(kHyperLogLog, 1.0)) > 0.98);
  CHECK_THROWS_AS(gra_variance_factor(kUltraLogLog, 0.0), DomainError);
}

TEST_CASE("FGRA theory") {
  const auto opt = optimize_tau(Objective::fgra, 2.0);
  CHECK(opt.tau == doctest::Approx(0.8194911375910897).epsilon(1e-6));
  CHECK(opt.v == doctest::Approx(0.6118931496978437).epsilon(1e-9));
  CHECK(8 * opt.v == doctest::Approx(4.895145).epsilon(1e-6));
  const auto phi = fgra_coefficients(2.0, 0.8194911375910897);
  const std::array<double, 4> baked{4.663135422063788, 2.1378502137958524, 2.781144650979996,
                                    0.9824082545153715};
  for (int j = 0; j < 4; ++j) CHECK(phi[j] == doctest::Approx(baked[j]).epsilon(1e-12));
  CHECK(fgra_variance_factor(2.0, 0.8194911375910897) == doctest::Approx(0.6118931496978437).epsilon(1e-12));

  const auto tau1 = fgra_coefficients(2.0, 1.0);
  CHECK(tau1[0] == doctest::Approx(6.037409).epsilon(1e-6));
  CHECK(tau1[1] == doctest::Approx(2.415940).epsilon(1e-6));
  CHECK(tau1[2] == doctest::Approx(3.364340).epsilon(1e-6));
  CHECK(tau1[3] == doctest::Approx(0.934924).epsilon(1e-6));
  CHECK(fgra_variance_factor(2.0, 1.0) == doctest::Approx(0.617163).epsilon(1e-5));

  // FGRA never loses against GRA with the same tau.
  for (double tau = 0.3; tau < 2.0; tau += 0.1) {
    CHECK(fgra_variance_factor(2.0, tau) <= gra_variance_factor(kUltraLogLog, tau) + 1e-12);
  }
  // eta values are positive.
  for (double e : fgra_eta(2.0, 0.8)) CHECK(e > 0.0);
}

TEST_CASE("ML bias factor") {
  CHECK(ml_bias_factor(kUltraLogLog) == doctest::Approx(0.48147).epsilon(1e-4 / 0.48147));
  for (const GeneralizedConfig& c : {kHyperLogLog, kExtendedHyperLogLog, GeneralizedConfig{1.5, 3, 6},
                                     GeneralizedConfig{3.0, 0, 5}}) {
    CHECK(ml_bias_factor(c) > 0.0);
  }
}

TEST_CASE("report bundles all quantities") {
  const auto rep = mvp_report(kUltraLogLog);
  CHECK(rep.mvp_uncompressed == mvp_uncompressed(kUltraLogLog));
  CHECK(rep.mvp_compressed == mvp_compressed(kUltraLogLog));
  CHECK(rep.mvp_martingale == mvp_martingale(kUltraLogLog));
  CHECK(rep.mvp_compressed_martingale == mvp_compressed_martingale(kUltraLogLog));
  CHECK(rep.fisher_factor == fisher_factor(kUltraLogLog));
  CHECK(rep.entropy_rate == shannon_entropy_rate(kUltraLogLog));
}

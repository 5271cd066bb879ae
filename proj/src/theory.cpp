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

#include "ull/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ull/errors.hpp"

namespace ull::theory {
namespace {

constexpr double kLn2 = std::numbers::ln2;

// Minimizes f on [lo, hi] to the given interval width.
double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double width) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > width) {
    if (!std::isfinite(fc) || !std::isfinite(fd)) {
      throw NumericError("non-finite objective in golden-section search", a, b);
    }
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Polishes a minimizer by Newton iteration on central differences. The
// golden-section result is limited to ~sqrt(eps) by the flat minimum; the
// derivative root is not.
double polish_minimum(const std::function<double(double)>& f, double x, double lo,
                      double hi) {
  const double h = 1e-4;
  for (int iter = 0; iter < 8; ++iter) {
    const double fm = f(x - h);
    const double f0 = f(x);
    const double fp = f(x + h);
    const double d1 = (fp - fm) / (2 * h);
    const double d2 = (fp - 2 * f0 + fm) / (h * h);
    if (!(d2 > 0)) break;
    const double step = d1 / d2;
    const double next = x - step;
    if (!(next > lo && next < hi) || std::abs(step) > 1e-3) break;
    x = next;
    if (std::abs(step) < 1e-13) break;
  }
  return x;
}

// Integrand of the entropy formula, z^c (1-z) ln(1-z) / (z ln z), split at
// 1/2 so that both halves are evaluated near 0 with full relative accuracy.
double entropy_integral(double c, double tolerance) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto left = [c](double z) {
    if (z <= 0.0) return 0.0;
    return std::pow(z, c) * (1.0 - z) * std::log1p(-z) / (z * std::log(z));
  };
  // z = 1 - t
  auto right = [c](double t) {
    if (t <= 0.0) return 0.0;
    const double z = 1.0 - t;
    return std::pow(z, c) * t * std::log(t) / (z * std::log1p(-t));
  };
  return integrator.integrate(left, 0.0, 0.5, tolerance) +
         integrator.integrate(right, 0.0, 0.5, tolerance);
}

constexpr double kEntropyTolerance = 1e-12;

}  // namespace

double GeneralizedConfig::offset() const { return std::pow(b, -q) / (b - 1.0); }

void GeneralizedConfig::validate() const {
  if (!(b > 1.0) || !std::isfinite(b)) throw DomainError("base b must be > 1");
  if (q < 0) throw DomainError("extra bits q must be >= 0");
  if (r < 1) throw DomainError("max-value bits r must be >= 1");
}

double gamma(double x) { return std::tgamma(x); }

double hurwitz_zeta(double s, double a) {
  if (!(s > 1.0) || !(a > 0.0)) {
    throw DomainError("hurwitz_zeta requires s > 1 and a > 0");
  }
  constexpr int kDirectTerms = 20;
  double sum = 0.0;
  for (int k = kDirectTerms - 1; k >= 0; --k) sum += std::pow(k + a, -s);

  // Euler-Maclaurin tail through the B6 term.
  const double x = kDirectTerms + a;
  const double xs = std::pow(x, -s);
  double tail = x * xs / (s - 1.0) + 0.5 * xs;
  const double x2 = x * x;
  double rising = s;            // s (s+1) ... (s+2j-2)
  double power = xs / x;        // x^(-s-2j+1)
  tail += rising * power / 12.0;
  rising *= (s + 1.0) * (s + 2.0);
  power /= x2;
  tail -= rising * power / 720.0;
  rising *= (s + 3.0) * (s + 4.0);
  power /= x2;
  tail += rising * power / 30240.0;
  return sum + tail;
}

double fisher_factor(const GeneralizedConfig& c) {
  c.validate();
  return hurwitz_zeta(2.0, 1.0 + c.offset()) / std::log(c.b);
}

double shannon_entropy_rate(const GeneralizedConfig& c, double tolerance) {
  c.validate();
  const double off = c.offset();
  return (1.0 / (1.0 + off) + entropy_integral(off, tolerance)) / (kLn2 * std::log(c.b));
}

double shannon_entropy_rate(const GeneralizedConfig& c) {
  return shannon_entropy_rate(c, kEntropyTolerance);
}

double shannon_entropy_rate_limit(double b) {
  if (!(b > 1.0)) throw DomainError("base b must be > 1");
  return (1.0 + entropy_integral(0.0, kEntropyTolerance)) / (kLn2 * std::log(b));
}

double mvp_uncompressed(const GeneralizedConfig& c) {
  c.validate();
  return (c.r + c.q) * std::log(c.b) / hurwitz_zeta(2.0, 1.0 + c.offset());
}

double mvp_compressed(const GeneralizedConfig& c) {
  return shannon_entropy_rate(c) / fisher_factor(c);
}

double mvp_martingale(const GeneralizedConfig& c) {
  c.validate();
  return (c.r + c.q) * 0.5 * std::log(c.b) * (1.0 + c.offset());
}

double mvp_compressed_martingale(const GeneralizedConfig& c) {
  c.validate();
  return shannon_entropy_rate(c) * 0.5 * std::log(c.b) * (1.0 + c.offset());
}

double mvp_compressed_limit() {
  return (1.0 + entropy_integral(0.0, kEntropyTolerance)) /
         (hurwitz_zeta(2.0, 1.0) * kLn2);
}

double mvp_compressed_martingale_limit() {
  return (1.0 + entropy_integral(0.0, kEntropyTolerance)) / (2.0 * kLn2);
}

MvpReport mvp_report(const GeneralizedConfig& c) {
  const double ff = fisher_factor(c);
  const double rate = shannon_entropy_rate(c);
  const double half_scale = 0.5 * std::log(c.b) * (1.0 + c.offset());
  return {c,
          ff,
          rate,
          mvp_uncompressed(c),
          rate / ff,
          (c.r + c.q) * half_scale,
          rate * half_scale};
}

double gra_variance_factor(const GeneralizedConfig& c, double tau) {
  c.validate();
  if (!(tau > 0.0)) throw DomainError("tau must be > 0");
  const double b = c.b;
  double bracket = 1.0 + 2.0 * std::pow(b, -tau * c.q) / (std::pow(b, tau) - 1.0);
  const double denom_shift = b - 1.0 + std::pow(b, -c.q);
  for (int s = 1; s <= c.q; ++s) {
    const double base = 1.0 + (b - 1.0) * std::pow(b, -s) / denom_shift;
    bracket += 2.0 * std::pow(b, -tau * s) / std::pow(base, 2.0 * tau);
  }
  const double ratio = std::exp(std::lgamma(2.0 * tau) - 2.0 * std::lgamma(tau)) * std::log(b);
  return (ratio * bracket - 1.0) / (tau * tau);
}

std::array<double, 4> gra_coefficients(double b, double tau) {
  if (!(b > 1.0)) throw DomainError("base b must be > 1");
  if (!(tau > 0.0)) throw DomainError("tau must be > 0");
  // Normalized so that E(g) = (m/n)^tau; see the note on gra_coefficients.
  const double scale = std::pow(b - 1.0 + std::pow(b, -2.0), tau) * std::log(b) / gamma(tau);
  const double bt = std::pow(b, tau);
  std::array<double, 4> phi{};
  for (int j = 0; j < 4; ++j) {
    const int b1 = j >> 1;
    const int b2 = j & 1;
    phi[j] = scale * (1.0 / (bt - 1.0) + (1 - b1) * bt + (1 - b2) * bt * bt);
  }
  return phi;
}

std::array<double, 4> fgra_eta(double b, double tau) {
  if (!(b > 1.0)) throw DomainError("base b must be > 1");
  auto inv_pow = [tau](double x) { return std::pow(x, -tau); };
  const double b2 = b * b;
  const double b3 = b2 * b;
  const double t_b1 = inv_pow(b);
  const double t_b2 = inv_pow(b2);
  const double t_b3 = inv_pow(b3);
  const double t_a = inv_pow(b3 - b + 1.0);
  const double t_c = inv_pow(b2 - b + 1.0);
  const double t_d = inv_pow(b3 - b2 + 1.0);
  const double t_e = inv_pow(b3 - b2 + b);
  return {
      t_a - t_b3,
      t_c - t_b2 - t_a + t_b3,
      t_d - t_e - t_a + t_b3,
      t_a - t_d + t_e - t_b3 - t_c + t_b2 + 1.0 - t_b1,
  };
}

namespace {

double eta_ratio_sum(const std::array<double, 4>& eta1, const std::array<double, 4>& eta2) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += eta1[i] * eta1[i] / eta2[i];
  return sum;
}

}  // namespace

std::array<double, 4> fgra_coefficients(double b, double tau) {
  if (!(tau > 0.0)) throw DomainError("tau must be > 0");
  const auto eta1 = fgra_eta(b, tau);
  const auto eta2 = fgra_eta(b, 2.0 * tau);
  const double scale = std::log(b) / gamma(tau) / eta_ratio_sum(eta1, eta2);
  std::array<double, 4> phi{};
  for (int j = 0; j < 4; ++j) phi[j] = scale * eta1[j] / eta2[j];
  return phi;
}

double fgra_variance_factor(double b, double tau) {
  if (!(tau > 0.0)) throw DomainError("tau must be > 0");
  const auto eta1 = fgra_eta(b, tau);
  const auto eta2 = fgra_eta(b, 2.0 * tau);
  const double ratio = std::exp(std::lgamma(2.0 * tau) - 2.0 * std::lgamma(tau)) * std::log(b);
  return (ratio / eta_ratio_sum(eta1, eta2) - 1.0) / (tau * tau);
}

TauOptimum optimize_tau(Objective objective, double b) {
  if (!(b > 1.0)) throw DomainError("base b must be > 1");
  std::function<double(double)> v;
  if (objective == Objective::fgra) {
    v = [b](double tau) { return fgra_variance_factor(b, tau); };
  } else {
    v = [b](double tau) { return gra_variance_factor({b, 2, 6}, tau); };
  }
  constexpr double kLo = 0.05;
  constexpr double kHi = 5.0;
  double tau = golden_section(v, kLo, kHi, 1e-8);
  tau = polish_minimum(v, tau, kLo, kHi);
  const double value = v(tau);
  if (!std::isfinite(value)) throw NumericError("non-finite variance factor", tau, tau);
  return {tau, value};
}

double ml_bias_factor(const GeneralizedConfig& c) {
  c.validate();
  const double off = c.offset();
  const double z2 = hurwitz_zeta(2.0, 1.0 + off);
  return std::log(c.b) * (1.0 + 2.0 * off) * hurwitz_zeta(3.0, 1.0 + off) / (z2 * z2);
}

MvpMinimum minimize_mvp_uncompressed(int r, int q_max, double b_max) {
  if (r < 1 || q_max < 0 || !(b_max > 1.0)) throw DomainError("invalid search range");
  MvpMinimum best{0.0, 0, std::numeric_limits<double>::infinity()};
  for (int q = 0; q <= q_max; ++q) {
    auto f = [r, q](double b) { return mvp_uncompressed({b, q, r}); };
    // Coarse scan first: the objective tends to r+q as b -> 1, so the
    // golden section starts from the best grid cell.
    constexpr int kGrid = 400;
    const double lo = 1.0 + 1e-6;
    double best_b = lo;
    double best_f = f(lo);
    double step = (b_max - lo) / kGrid;
    for (int i = 1; i <= kGrid; ++i) {
      const double b = lo + i * step;
      const double value = f(b);
      if (value < best_f) {
        best_f = value;
        best_b = b;
      }
    }
    const double a = std::max(lo, best_b - step);
    const double bb = std::min(b_max, best_b + step);
    const double b = golden_section(f, a, bb, 1e-10);
    const double value = f(b);
    if (value < best.mvp) best = {b, q, value};
  }
  return best;
}

}  // namespace ull::theory

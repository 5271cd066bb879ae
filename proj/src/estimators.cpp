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

#include "ull/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ull/errors.hpp"
#include "ull/theory.hpp"

namespace ull {
namespace {

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr int kSeriesCap = 64;

// Positive root of alpha x^2 + beta x - gamma = 0, written as
// 2 gamma / (sqrt(beta^2 + 4 alpha gamma) + beta), which equals
// (sqrt(beta^2 + 4 alpha gamma) - beta) / (2 alpha) without the cancellation.
double quadratic_root(double alpha, double beta, double gamma) {
  const double d = std::sqrt(beta * beta + 4.0 * alpha * gamma) + beta;
  return d > 0.0 ? 2.0 * gamma / d : 0.0;
}

double large_range_sum(const RegisterHistogram& h, const EstimatorConstants& k) {
  const int w = max_update_value(h.p);
  const double c0 = static_cast<double>(h[4 * w]);
  const double c1 = static_cast<double>(h[4 * w + 1]);
  const double c2 = static_cast<double>(h[4 * w + 2]);
  const double c3 = static_cast<double>(h[4 * w + 3]);
  const auto& phi = k.phi;
  const double z = large_range_zw(h);
  const double root_z = std::sqrt(z);
  const double pow_minus_tau = std::pow(2.0, -k.tau);
  double s = z * (1.0 + root_z) * (phi[0] * c0 + phi[1] * c1 + phi[2] * c2 + phi[3] * c3);
  s += pow_minus_tau * root_z * (z * (phi[0] - phi[2]) + phi[2]) * (c0 + c1);
  s += pow_minus_tau * root_z * (z * (phi[1] - phi[3]) + phi[3]) * (c2 + c3);
  s += phi_large(root_z, k) * (c0 + c1 + c2 + c3);
  return s / (std::pow(2.0, k.tau * w) * (1.0 + root_z) * (1.0 + z));
}

double small_range_sum(const RegisterHistogram& h, const EstimatorConstants& k) {
  const double z = small_range_z0(h);
  const auto& phi = k.phi;
  const double pow_minus_tau = std::pow(2.0, -k.tau);
  const double pow4_minus_tau = pow_minus_tau * pow_minus_tau;
  CompensatedSum s;
  if (h[0] > 0) s.add(static_cast<double>(h[0]) * sigma(z, k));
  if (h[4] > 0) s.add(static_cast<double>(h[4]) * pow_minus_tau * psi(z, k));
  if (h[8] > 0) s.add(static_cast<double>(h[8]) * pow4_minus_tau * (z * (phi[0] - phi[1]) + phi[1]));
  if (h[10] > 0) {
    s.add(static_cast<double>(h[10]) * pow4_minus_tau * (z * (phi[2] - phi[3]) + phi[3]));
  }
  return s.value();
}

bool has_small(const RegisterHistogram& h) {
  return h[0] + h[4] + h[8] + h[10] > 0;
}

bool has_large(const RegisterHistogram& h) {
  const int w = max_update_value(h.p);
  return h[4 * w] + h[4 * w + 1] + h[4 * w + 2] + h[4 * w + 3] > 0;
}

double finish_fgra(const RegisterHistogram& h, const EstimatorConstants& k, double sum) {
  if (sum <= 0.0) {
    // Exactly zero only for the all-zero and the all-saturated sketch.
    return h[0] == h.m() ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return k.xi(h.p) * std::pow(sum, -1.0 / k.tau);
}

}  // namespace

double EstimatorConstants::xi(int p) const {
  const double m = std::ldexp(1.0, p);
  return std::pow(m, 1.0 + 1.0 / tau) / (1.0 + (1.0 + tau) * v / (2.0 * m));
}

EstimatorConstants fgra_constants_default() noexcept {
  return {0.8194911375910897,
          0.6118931496978437,
          {4.663135422063788, 2.1378502137958524, 2.781144650979996, 0.9824082545153715}};
}

EstimatorConstants fgra_constants(double tau) {
  return {tau, theory::fgra_variance_factor(2.0, tau), theory::fgra_coefficients(2.0, tau)};
}

EstimatorConstants gra_constants(double tau) {
  return {tau, theory::gra_variance_factor(theory::kUltraLogLog, tau),
          theory::gra_coefficients(2.0, tau)};
}

double contribution(std::uint8_t r, const EstimatorConstants& k, int p) {
  if (r < 12 || r >= 4 * max_update_value(p)) {
    throw ContractViolation("register value " + std::to_string(r) +
                            " outside the intermediate range");
  }
  return std::pow(2.0, -k.tau * (r >> 2)) * k.phi[r & 3];
}

double psi(double z, const EstimatorConstants& k) {
  const auto& phi = k.phi;
  return z * (z * (z * (phi[0] - phi[1] - phi[2] + phi[3]) + (phi[2] - phi[3])) +
              (phi[1] - phi[3])) +
         phi[3];
}

SeriesValue sigma_series(double z, const EstimatorConstants& k) {
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("sigma requires z in [0, 1]");
  if (z == 0.0) return {k.phi[3], 0};
  if (z == 1.0) return {0.0, 0};
  const double pow_tau = std::pow(2.0, k.tau);
  double pow_z = z;        // z^(2^u)
  double scale = 1.0;      // 2^(tau u)
  double s = 0.0;
  int terms = 0;
  while (terms < kSeriesCap) {
    const double next = pow_z * pow_z;
    const double old = s;
    s += scale * (pow_z - next) * psi(next, k);
    ++terms;
    if (s == old || !std::isfinite(s)) break;
    pow_z = next;
    scale *= pow_tau;
  }
  return {s / z, terms};
}

double sigma(double z, const EstimatorConstants& k) { return sigma_series(z, k).value; }

SeriesValue phi_large_series(double z, const EstimatorConstants& k) {
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("phi_large requires z in [0, 1]");
  const double pow_minus_tau = std::pow(2.0, -k.tau);
  const double prefactor = pow_minus_tau * pow_minus_tau / (2.0 - pow_minus_tau);
  if (z == 0.0) return {0.0, 0};
  if (z == 1.0) return {prefactor * k.phi[0], 0};  // continuous limit

  // a_u = z^(2^-u)
  double a_cur = std::sqrt(z);
  double psi_prev = psi(z, k);
  double scale = 1.0 / (1.0 + a_cur);  // 1 / (2^(tau u) prod_{j=1}^{u+1} (1 + a_j))
  double s = 2.0 * psi_prev * a_cur * scale;
  int terms = 1;
  while (terms < kSeriesCap) {
    const double a_next = std::sqrt(a_cur);
    const double psi_cur = psi(a_cur, k);
    scale *= pow_minus_tau / (1.0 + a_next);
    const double old = s;
    s += a_next * (2.0 * psi_cur - (a_next + a_cur) * psi_prev) * scale;
    ++terms;
    if (s == old || !std::isfinite(s)) break;
    a_cur = a_next;
    psi_prev = psi_cur;
  }
  return {prefactor * s, terms};
}

double phi_large(double z, const EstimatorConstants& k) { return phi_large_series(z, k).value; }

double small_range_z0(const RegisterHistogram& h) {
  const double m = static_cast<double>(h.m());
  const double c0 = static_cast<double>(h[0]);
  const double c4 = static_cast<double>(h[4]);
  const double c8 = static_cast<double>(h[8]);
  const double c10 = static_cast<double>(h[10]);
  const double alpha = m + 3.0 * (c0 + c4 + c8 + c10);
  const double beta = m - c0 - c4;
  const double gamma = 4.0 * c0 + 2.0 * c4 + 3.0 * c8 + c10;
  const double root = quadratic_root(alpha, beta, gamma);
  const double sq = root * root;
  return sq * sq;
}

double large_range_zw(const RegisterHistogram& h) {
  const int w = max_update_value(h.p);
  const double m = static_cast<double>(h.m());
  const double c0 = static_cast<double>(h[4 * w]);
  const double c1 = static_cast<double>(h[4 * w + 1]);
  const double c2 = static_cast<double>(h[4 * w + 2]);
  const double c3 = static_cast<double>(h[4 * w + 3]);
  const double alpha = m + 3.0 * (c0 + c1 + c2 + c3);
  const double beta = c0 + c1 + 2.0 * (c2 + c3);
  const double gamma = m + 2.0 * c0 + c2 - c3;
  return std::sqrt(quadratic_root(alpha, beta, gamma));
}

double fgra_contribution_sum(const RegisterHistogram& h, const EstimatorConstants& k) {
  const int w = max_update_value(h.p);
  CompensatedSum s;
  for (int r = 12; r < 4 * w; ++r) {
    if (h[r] != 0) s.add(static_cast<double>(h[r]) * std::pow(2.0, -k.tau * (r >> 2)) * k.phi[r & 3]);
  }
  if (has_small(h)) s.add(small_range_sum(h, k));
  if (has_large(h)) s.add(large_range_sum(h, k));
  return s.value();
}

double fgra_estimate(const RegisterHistogram& h, const EstimatorConstants& k) {
  return finish_fgra(h, k, fgra_contribution_sum(h, k));
}

double fgra_estimate(const RegisterHistogram& h) {
  static const FgraEstimator estimator;
  return estimator.estimate(h);
}

FgraEstimator::FgraEstimator(EstimatorConstants k) : k_(k) {
  for (int r = 12; r < 256; ++r) {
    table_[r] = std::pow(2.0, -k_.tau * (r >> 2)) * k_.phi[r & 3];
  }
}

double FgraEstimator::estimate(const RegisterHistogram& h) const {
  const int w = max_update_value(h.p);
  CompensatedSum s;
  for (int r = 12; r < 4 * w; ++r) {
    if (h[r] != 0) s.add(static_cast<double>(h[r]) * table_[r]);
  }
  if (has_small(h)) s.add(small_range_sum(h, k_));
  if (has_large(h)) s.add(large_range_sum(h, k_));
  return finish_fgra(h, k_, s.value());
}

MlCoefficients ml_coefficients(const RegisterHistogram& h) {
  const int w = max_update_value(h.p);
  auto c = [&h](int r) { return static_cast<double>(h[static_cast<std::size_t>(r)]); };
  MlCoefficients out;
  out.mu.assign(static_cast<std::size_t>(w), 0.0);

  CompensatedSum lambda;
  lambda.add(c(0));
  lambda.add(c(4) / 2.0);
  lambda.add((3.0 * c(8) + c(10)) / 4.0);
  for (int u = 3; u < w; ++u) {
    const double num = 7.0 * c(4 * u) + 3.0 * c(4 * u + 1) + 5.0 * c(4 * u + 2) + c(4 * u + 3);
    if (num != 0.0) lambda.add(std::ldexp(num, -u));
  }
  lambda.add(std::ldexp(3.0 * c(4 * w) + c(4 * w + 1) + 2.0 * c(4 * w + 2), -(w - 1)));
  out.lambda = lambda.value();

  auto& mu = out.mu;
  mu[1] = c(4) + c(10) + c(13) + c(15);
  mu[2] = c(8) + c(10) + c(14) + c(15) + c(17) + c(19);
  for (int u = 3; u <= w - 2; ++u) {
    mu[u] = c(4 * u) + c(4 * u + 1) + c(4 * u + 2) + c(4 * u + 3) + c(4 * u + 6) +
            c(4 * u + 7) + c(4 * u + 9) + c(4 * u + 11);
  }
  mu[w - 1] = c(4 * w - 4) + c(4 * w - 3) + c(4 * w - 2) + c(4 * w - 1) + c(4 * w) +
              c(4 * w + 1) + 2.0 * c(4 * w + 2) + 2.0 * c(4 * w + 3);
  return out;
}

double ml_log_likelihood(const MlCoefficients& c, double m, double n) {
  CompensatedSum s;
  s.add(-n / m * c.lambda);
  for (int u = 1; u < c.w(); ++u) {
    if (c.mu[u] != 0.0) s.add(c.mu[u] * std::log(-std::expm1(-std::ldexp(n / m, -u))));
  }
  return s.value();
}

double ml_log_likelihood_derivative(const MlCoefficients& c, double m, double n) {
  CompensatedSum s;
  s.add(-c.lambda / m);
  for (int u = 1; u < c.w(); ++u) {
    if (c.mu[u] != 0.0) {
      const double rate = std::ldexp(1.0 / m, -u);
      s.add(c.mu[u] * rate / std::expm1(n * rate));
    }
  }
  return s.value();
}

double ml_bias_constant() {
  static const double value = theory::ml_bias_factor(theory::kUltraLogLog);
  return value;
}

namespace {

// sum_u mu_u h(x / 2^u) - lambda x with h(y) = y / (e^y - 1); strictly
// decreasing in x = n/m and sharing its sign with the likelihood derivative.
double scaled_score(const MlCoefficients& c, double x) {
  CompensatedSum s;
  s.add(-c.lambda * x);
  for (int u = 1; u < c.w(); ++u) {
    if (c.mu[u] != 0.0) {
      const double y = std::ldexp(x, -u);
      s.add(c.mu[u] * (y / std::expm1(y)));
    }
  }
  return s.value();
}

}  // namespace

double ml_solve(const MlCoefficients& c, double m, double initial_guess) {
  double mu_total = 0.0;
  for (double v : c.mu) mu_total += v;
  if (mu_total == 0.0) return 0.0;
  if (c.lambda == 0.0) return std::numeric_limits<double>::infinity();

  constexpr double kTolerance = 1e-12;
  constexpr int kMaxIterations = 64;
  constexpr int kMaxExpansions = 200;

  double x0 = initial_guess / m;
  if (!(x0 > 0.0) || !std::isfinite(x0)) x0 = mu_total / c.lambda;
  double a = x0 / 8.0;
  double b = x0 * 8.0;
  double fa = scaled_score(c, a);
  double fb = scaled_score(c, b);
  for (int i = 0; fa <= 0.0; ++i) {
    if (fa == 0.0) return a * m;
    if (i == kMaxExpansions) throw NumericError("ML bracket expansion failed", a * m, b * m);
    b = a;
    fb = fa;
    a /= 8.0;
    fa = scaled_score(c, a);
  }
  for (int i = 0; fb >= 0.0; ++i) {
    if (fb == 0.0) return b * m;
    if (i == kMaxExpansions) throw NumericError("ML bracket expansion failed", a * m, b * m);
    a = b;
    fa = fb;
    b *= 8.0;
    fb = scaled_score(c, b);
  }

  // Secant steps inside the bracket (Illinois variant so that both ends
  // move); a bisection replaces any step that leaves the bracket or when the
  // bracket failed to halve over the last two steps.
  int side = 0;
  double width_two_ago = b - a;
  double width_one_ago = b - a;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    double x = (a * fb - b * fa) / (fb - fa);
    const bool stalled = (b - a) > 0.5 * width_two_ago;
    if (!(x > a && x < b) || (iter >= 2 && stalled)) x = 0.5 * (a + b);
    const double fx = scaled_score(c, x);
    width_two_ago = width_one_ago;
    if (fx == 0.0) return x * m;
    if (fx > 0.0) {
      a = x;
      fa = fx;
      if (side == 1) fb *= 0.5;
      side = 1;
    } else {
      b = x;
      fb = fx;
      if (side == -1) fa *= 0.5;
      side = -1;
    }
    width_one_ago = b - a;
    if (b - a <= kTolerance * a) return (std::abs(fa) < std::abs(fb) ? a : b) * m;
  }
  throw NumericError("ML solver did not converge", a * m, b * m);
}

double ml_estimate(const RegisterHistogram& h) {
  const auto coeffs = ml_coefficients(h);
  const double m = static_cast<double>(h.m());
  const double n = ml_solve(coeffs, m, fgra_estimate(h));
  return n / (1.0 + ml_bias_constant() / m);
}

}  // namespace ull

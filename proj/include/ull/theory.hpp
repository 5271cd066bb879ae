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

#pragma once

// Asymptotic theory of the generalized register family: registers store
// the maximum of geometric update values with base b in r bits, plus q bits
// flagging the next q smaller update values. b=2 covers HyperLogLog (q=0),
// ExaLogLog-style EHLL (q=1) and UltraLogLog (q=2).

#include <array>

namespace ull::theory {

struct GeneralizedConfig {
  double b = 2.0;
  int q = 2;
  int r = 6;

  /// b^-q / (b-1), the quantity all formulas depend on.
  double offset() const;
  void validate() const;
};

inline constexpr GeneralizedConfig kUltraLogLog{2.0, 2, 6};
inline constexpr GeneralizedConfig kHyperLogLog{2.0, 0, 6};
inline constexpr GeneralizedConfig kExtendedHyperLogLog{2.0, 1, 6};

double gamma(double x);

/// Hurwitz zeta sum_{k>=0} (k+a)^-s for s > 1, a > 0.
double hurwitz_zeta(double s, double a);

/// Fisher information times n^2/m.
double fisher_factor(const GeneralizedConfig& c);

/// Shannon entropy of one register in bits (intermediate range).
double shannon_entropy_rate(const GeneralizedConfig& c);

/// Entropy integral with a custom quadrature tolerance (for convergence checks).
double shannon_entropy_rate(const GeneralizedConfig& c, double tolerance);

/// Shannon entropy rate in the limit b^-q/(b-1) -> 0 (PCSA-like register).
double shannon_entropy_rate_limit(double b);

double mvp_uncompressed(const GeneralizedConfig& c);
double mvp_compressed(const GeneralizedConfig& c);
double mvp_martingale(const GeneralizedConfig& c);
double mvp_compressed_martingale(const GeneralizedConfig& c);

/// Limits as b^-q/(b-1) -> 0 (independent of b).
double mvp_compressed_limit();
double mvp_compressed_martingale_limit();

struct MvpReport {
  GeneralizedConfig config;
  double fisher_factor;
  double entropy_rate;
  double mvp_uncompressed;
  double mvp_compressed;
  double mvp_martingale;
  double mvp_compressed_martingale;
};

MvpReport mvp_report(const GeneralizedConfig& c);

/// Relative variance factor v (Var ~ v/m) of the GRA estimator.
double gra_variance_factor(const GeneralizedConfig& c, double tau);

/// GRA register-contribution coefficients for q = 2, indexed by the two
/// low register bits. The normalization constant is
/// (b - 1 + b^-q)^tau ln(b) / Gamma(tau), which makes the estimator unbiased.
/// Commonly quoted values for b = 2 (phi0 = 4.841356 at tau = 0.755097) use
/// b^-tau in place of b^-q and are larger by ((1 + 2^-tau) / 1.25)^tau.
std::array<double, 4> gra_coefficients(double b, double tau);

/// The four eta functions defining the optimal FGRA coefficients (q = 2).
std::array<double, 4> fgra_eta(double b, double tau);

std::array<double, 4> fgra_coefficients(double b, double tau);
double fgra_variance_factor(double b, double tau);

enum class Objective { gra, fgra };

struct TauOptimum {
  double tau;
  double v;
};

/// Golden-section minimization of the variance factor over tau in
/// [0.05, 5], refined on the derivative. GRA uses q = 2.
TauOptimum optimize_tau(Objective objective, double b);

/// First-order relative bias of the ML estimate times m.
double ml_bias_factor(const GeneralizedConfig& c);

struct MvpMinimum {
  double b;
  int q;
  double mvp;
};

/// Minimum of mvp_uncompressed over q in [0, q_max] and b in (1, b_max]
/// for fixed r.
MvpMinimum minimize_mvp_uncompressed(int r, int q_max = 40, double b_max = 4.0);

}  // namespace ull::theory

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

// Offline distinct-count estimators operating on register histograms.
//
// FGRA: n = xi_p * S^(-1/tau), where S sums per-register contributions
// 2^(-tau*u) * phi[r mod 4]. Registers below 12 or at/above 4w get their
// contribution replaced by its conditional expectation under the unbounded
// model, driven by dedicated small- and large-range estimates of
// exp(-n/m) and exp(-n/(m 2^w)). This keeps the error flat over the whole
// operating range without switching estimators.
//
// ML: maximizes the Poisson-model likelihood and removes the first-order bias.

#include <array>
#include <cstdint>
#include <vector>

#include "ull/sketch.hpp"

namespace ull {

struct EstimatorConstants {
  double tau;
  double v;
  std::array<double, 4> phi;

  /// m^(1+1/tau) / (1 + (1+tau) v / (2m)).
  double xi(int p) const;
};

/// The optimal FGRA constants for b = 2, q = 2.
EstimatorConstants fgra_constants_default() noexcept;

/// FGRA coefficients optimal for a fixed tau (b = 2), e.g. tau = 1.
EstimatorConstants fgra_constants(double tau);

/// GRA estimator expressed in FGRA form (b = 2, q = 2).
EstimatorConstants gra_constants(double tau);

/// g(r) = 2^(-tau*floor(r/4)) * phi[r mod 4]; requires 12 <= r < 4w.
double contribution(std::uint8_t r, const EstimatorConstants& k, int p);

/// Cubic polynomial interpolating phi: psi(1) = phi0, psi(0) = phi3.
double psi(double z, const EstimatorConstants& k);

struct SeriesValue {
  double value;
  int terms;  // terms evaluated until the partial sum stopped changing
};

/// Expected contribution of a zero register, given z = exp(-n/m).
SeriesValue sigma_series(double z, const EstimatorConstants& k);
double sigma(double z, const EstimatorConstants& k);

/// Large-range tail contribution (product-denominator form).
SeriesValue phi_large_series(double z, const EstimatorConstants& k);
double phi_large(double z, const EstimatorConstants& k);

/// Estimate of exp(-n/m) from the counts of registers 0, 4, 8, 10.
double small_range_z0(const RegisterHistogram& h);

/// Estimate of exp(-n/(m 2^w)) from the counts of the four saturated values.
double large_range_zw(const RegisterHistogram& h);

/// Sum of corrected register contributions.
double fgra_contribution_sum(const RegisterHistogram& h, const EstimatorConstants& k);

/// Full FGRA estimate with range corrections; 0 for an empty sketch.
double fgra_estimate(const RegisterHistogram& h, const EstimatorConstants& k);
double fgra_estimate(const RegisterHistogram& h);

/// Contribution table for one set of constants; reusable across sketches.
class FgraEstimator {
 public:
  explicit FgraEstimator(EstimatorConstants k = fgra_constants_default());

  const EstimatorConstants& constants() const noexcept { return k_; }
  double estimate(const RegisterHistogram& h) const;
  double estimate(const Sketch& s) const { return estimate(s.histogram()); }

 private:
  EstimatorConstants k_;
  std::array<double, 256> table_{};
};

/// Coefficients of ln L(n) = -(n/m) lambda + sum_u mu_u ln(1 - exp(-n/(m 2^u))).
struct MlCoefficients {
  double lambda = 0.0;
  std::vector<double> mu;  // mu[u] for u in [1, w-1]; mu[0] unused

  int w() const noexcept { return static_cast<int>(mu.size()); }
};

MlCoefficients ml_coefficients(const RegisterHistogram& h);

double ml_log_likelihood(const MlCoefficients& c, double m, double n);

/// d/dn ln L(n).
double ml_log_likelihood_derivative(const MlCoefficients& c, double m, double n);

/// First-order ML bias constant for b=2, q=2 (about 0.48147).
double ml_bias_constant();

/// Likelihood maximizer without bias correction. 0 if empty, +inf if every
/// register is at its maximum.
double ml_solve(const MlCoefficients& c, double m, double initial_guess);

/// Bias-corrected ML estimate.
double ml_estimate(const RegisterHistogram& h);

}  // namespace ull

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

// Monte-Carlo harness for estimator error and register statistics.
//
// Exact mode inserts pseudorandom 64-bit words as hashes. Transitions mode
// does the same up to `exact_threshold` distinct elements and then switches
// to waiting times: for each register i and update value k the number of
// further elements until (i, k) is hit is geometric with success probability
// 1/(m 2^min(k, 64-p)), so only m(65-p) events need to be simulated no matter
// how large the target is.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ull/sketch.hpp"

namespace ull::sim {

enum class EstimatorKind { fgra, ml, martingale };

std::string_view to_string(EstimatorKind e) noexcept;
/// Throws ConfigError on an unknown name.
EstimatorKind parse_estimator(std::string_view name);
/// Comma-separated list, e.g. "fgra,ml".
std::vector<EstimatorKind> parse_estimators(std::string_view list);

enum class SimMode { exact, transitions };

std::string_view to_string(SimMode m) noexcept;
SimMode parse_mode(std::string_view name);

inline constexpr double kDefaultExactThreshold = 1e6;
inline constexpr double kMaxExactThreshold = 1e7;

struct SimPlan {
  int p = 8;
  std::vector<EstimatorKind> estimators{EstimatorKind::fgra};
  std::vector<double> targets;  // integral, ascending
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  double exact_threshold = kDefaultExactThreshold;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Targets from "1e3,1e4" or "geom:start:stop:points" (log-spaced, rounded
/// to integers, duplicates after rounding dropped).
std::vector<double> parse_targets(std::string_view text);

struct EstimatorStats {
  EstimatorKind estimator;
  std::uint64_t trials;
  double mean_rel_bias;
  double rel_rmse;
  double theoretical_rmse;
};

struct ErrorStats {
  double n;
  std::vector<EstimatorStats> estimators;  // in plan order
};

/// MVP used for the theoretical error of each estimator.
double theoretical_mvp(EstimatorKind e);

/// sqrt(mvp / (8m)).
double theoretical_rmse(double mvp, double m);

/// `threads` = 0 selects the hardware concurrency. Output does not depend
/// on the thread count.
std::vector<ErrorStats> run_exact(const SimPlan& plan, unsigned threads = 0);
std::vector<ErrorStats> run_transitions(const SimPlan& plan, unsigned threads = 0);
std::vector<ErrorStats> run(const SimPlan& plan, SimMode mode, unsigned threads = 0);

/// Final sketch states after n distinct insertions for each trial.
std::vector<Sketch> final_states(int p, double n, std::uint64_t trials, std::uint64_t seed,
                                 SimMode mode, double exact_threshold = kDefaultExactThreshold,
                                 unsigned threads = 0);

/// Value histogram of a single register position across sketches.
std::array<std::uint64_t, 256> register_marginal(const std::vector<Sketch>& states,
                                                 std::size_t index);

/// Plug-in Shannon entropy (bits per register) of the register-value
/// histogram pooled over all registers and trials.
double empirical_entropy(int p, double n, std::uint64_t trials, std::uint64_t seed = 0,
                         unsigned threads = 0);
double histogram_entropy(const std::array<std::uint64_t, 256>& counts);

struct ChiSquareResult {
  double statistic;
  int degrees_of_freedom;
  double p_value;
};

/// Two-sample chi-square homogeneity test. Categories with a pooled expected
/// count below 5 are merged into their neighbour.
ChiSquareResult chi_square_two_sample(const std::array<std::uint64_t, 256>& a,
                                      const std::array<std::uint64_t, 256>& b);

struct KsResult {
  double statistic;
  double critical_value;  // at alpha = 0.01
  bool reject() const noexcept { return statistic > critical_value; }
};

/// Two-sample Kolmogorov-Smirnov test over ordered register values.
KsResult ks_two_sample(const std::array<std::uint64_t, 256>& a,
                       const std::array<std::uint64_t, 256>& b);

inline constexpr std::string_view kCsvSchema = "ull-simulate/1";

void write_csv(std::ostream& out, const SimPlan& plan, SimMode mode,
               const std::vector<ErrorStats>& stats);

/// Round-trip safe decimal (17 significant digits).
std::string format_number(double x);

}  // namespace ull::sim

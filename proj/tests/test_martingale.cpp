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

#include "oracles.hpp"
#include "ull/errors.hpp"
#include "ull/estimators.hpp"
#include "ull/hashing.hpp"
#include "ull/martingale.hpp"

using namespace ull;

namespace {

// Probability that one new element changes a register holding r: the sum of
// P(update value k) over every k whose insertion alters the register.
double brute_change_probability(std::uint8_t r, int p) {
  const int w = max_update_value(p);
  const double m = std::ldexp(1.0, p);
  std::uint64_t seen = 0;
  if (r != 0) {
    const auto [u, b1, b2] = fields(r);
    seen = std::uint64_t{1} << u;
    if (b1) seen |= std::uint64_t{1} << (u - 1);
    if (b2) seen |= std::uint64_t{1} << (u - 2);
    // Values below u-2 are irrelevant for the register.
  }
  double prob = 0.0;
  for (int k = 1; k <= w; ++k) {
    const std::uint64_t after = seen | (std::uint64_t{1} << k);
    if (oracle::register_from_occurrences(after) != r) {
      prob += std::ldexp(1.0 / m, -std::min(k, w - 1));
    }
  }
  return prob;
}

}  // namespace

TEST_CASE("change probabilities match enumeration over update values") {
  for (int p = kMinPrecision; p <= kMaxPrecision; ++p) {
    const auto& table = change_probability_table(p);
    for (int r = 0; r < 256; ++r) {
      const auto v = static_cast<std::uint8_t>(r);
      if (!is_reachable(v, p)) {
        CHECK(table[r] == 0.0);
        CHECK_THROWS_AS(change_probability(v, p), ContractViolation);
        continue;
      }
      const double expected = brute_change_probability(v, p);
      CHECK(table[r] == doctest::Approx(expected).epsilon(1e-15));
      CHECK(change_probability(v, p) == table[r]);
    }
  }
}

TEST_CASE("closed-form special values") {
  const int p = 8;
  const double m = 256.0;
  CHECK(change_probability(0, p) == 1.0 / m);
  CHECK(change_probability(4, p) == 1.0 / (2 * m));
  CHECK(change_probability(8, p) == 3.0 / (4 * m));
  CHECK(change_probability(10, p) == 1.0 / (4 * m));
  CHECK(change_probability(4 * 57 + 3, p) == 0.0);  // saturated with both flags
  CHECK_THROWS_AS(change_probability(0, 2), ConfigError);
  CHECK_THROWS_AS(change_probability_table(27), ConfigError);
}

TEST_CASE("state probability starts at one and equals lambda over m") {
  SplitMix64 rng(3);
  for (int p : {3, 6, 10}) {
    Sketch s(p);
    CHECK(static_cast<double>(state_change_probability(s)) == 1.0);
    for (int n = 0; n < 5000; ++n) {
      s.insert_hash(n % 3 == 0 ? oracle::skewed_hash(rng, p) : rng());
      if (n % 499 == 0) {
        const auto c = ml_coefficients(s.histogram());
        const double m = std::ldexp(1.0, p);
        CHECK(c.lambda == doctest::Approx(m * static_cast<double>(state_change_probability(s)))
                              .epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("incremental probability tracks a fresh recomputation") {
  SplitMix64 rng(5);
  MartingaleSketch ms(10);
  for (int i = 0; i < 1000000; ++i) ms.insert_hash(rng());
  const double incremental = ms.state().change_probability();
  const double fresh = static_cast<double>(state_change_probability(ms.sketch()));
  CHECK(std::abs(incremental - fresh) <= 1e-12 * fresh);

  MartingaleState state = ms.state();
  state.resync(ms.sketch());
  CHECK(state.change_probability() == fresh);
  CHECK(state.estimate() == ms.estimate());
  CHECK_THROWS_AS(state.resync(Sketch(9)), PrecisionError);
}

TEST_CASE("first insertions are counted exactly") {
  SplitMix64 rng(9);
  MartingaleSketch ms(12);
  CHECK(ms.estimate() == 0.0);
  ms.insert_hash(rng());
  CHECK(ms.estimate() == 1.0);
  const double before = ms.estimate();
  ms.insert_hash(0x1234);  // duplicates never change the estimate
  ms.insert_hash(0x1234);
  CHECK(ms.estimate() >= before);
  const double after = ms.estimate();
  ms.insert_hash(0x1234);
  CHECK(ms.estimate() == after);
}

TEST_CASE("martingale estimate is unbiased") {
  // Mean over independent runs against the predicted standard error.
  const int p = 6;
  const int n = 2000;
  const int trials = 4000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    SplitMix64 rng(stream_seed(99, t));
    MartingaleSketch ms(p);
    for (int i = 0; i < n; ++i) ms.insert_hash(rng());
    sum += ms.estimate() / n - 1.0;
  }
  const double mean = sum / trials;
  const double se = std::sqrt(3.4657 / (8.0 * 64)) / std::sqrt(trials);
  CHECK(std::abs(mean) < 4 * se);
}

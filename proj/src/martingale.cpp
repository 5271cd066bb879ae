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

#include "ull/martingale.hpp"

#include <cmath>
#include <string>

#include "ull/errors.hpp"

namespace ull {
namespace {

double compute_change_probability(std::uint8_t r, int p) {
  const double m = std::ldexp(1.0, p);
  const int w = max_update_value(p);
  if (r == 0) return 1.0 / m;
  if (r == 4) return 1.0 / (2.0 * m);
  if (r == 8) return 3.0 / (4.0 * m);
  if (r == 10) return 1.0 / (4.0 * m);
  const auto [u, b1, b2] = fields(r);
  if (u >= 3 && u < w) return std::ldexp((7 - 2 * b1 - 4 * b2) / m, -u);
  if (u == w) return std::ldexp((3 - b1 - 2 * b2) / m, -(w - 1));
  throw ContractViolation("unreachable register value " + std::to_string(r) +
                          " for precision " + std::to_string(p));
}

using Table = std::array<double, 256>;

std::array<Table, kMaxPrecision + 1> build_tables() {
  std::array<Table, kMaxPrecision + 1> tables{};
  for (int p = kMinPrecision; p <= kMaxPrecision; ++p) {
    for (int r = 0; r < 256; ++r) {
      const auto v = static_cast<std::uint8_t>(r);
      tables[p][r] = is_reachable(v, p) ? compute_change_probability(v, p) : 0.0;
    }
  }
  return tables;
}

}  // namespace

double change_probability(std::uint8_t r, int p) {
  if (p < kMinPrecision || p > kMaxPrecision) {
    throw ConfigError("precision " + std::to_string(p) + " out of range");
  }
  if (!is_reachable(r, p)) {
    throw ContractViolation("unreachable register value " + std::to_string(r));
  }
  return compute_change_probability(r, p);
}

const std::array<double, 256>& change_probability_table(int p) {
  static const auto tables = build_tables();
  if (p < kMinPrecision || p > kMaxPrecision) {
    throw ConfigError("precision " + std::to_string(p) + " out of range");
  }
  return tables[p];
}

MartingaleState::MartingaleState(int p) : p_(p), table_(&change_probability_table(p)) {}

void MartingaleState::on_register_change(std::uint8_t old_value,
                                         std::uint8_t new_value) noexcept {
  estimate_ += static_cast<double>(1.0L / prob_);
  prob_ += static_cast<long double>((*table_)[new_value]) -
           static_cast<long double>((*table_)[old_value]);
}

void MartingaleState::resync(const Sketch& s) {
  if (s.precision() != p_) throw PrecisionError("sketch precision differs from state");
  prob_ = state_change_probability(s);
}

long double state_change_probability(const Sketch& s) {
  const auto& table = change_probability_table(s.precision());
  const auto h = s.histogram();
  long double sum = 0.0L;
  for (int r = 0; r < 256; ++r) {
    if (h.counts[r] != 0) sum += static_cast<long double>(h.counts[r]) * table[r];
  }
  return sum;
}

}  // namespace ull

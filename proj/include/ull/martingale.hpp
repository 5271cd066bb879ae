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

// Martingale (HIP) estimation: the estimate grows by 1/P on every register
// change, where P is the probability that the next new element changes the
// state. Order dependent; martingale states cannot be merged.

#include <array>
#include <cstdint>

#include "ull/sketch.hpp"

namespace ull {

/// Probability that a register holding `r` changes with the next new
/// element, for a sketch of precision p.
double change_probability(std::uint8_t r, int p);

/// change_probability for all 256 byte values (0 for unreachable ones).
const std::array<double, 256>& change_probability_table(int p);

class MartingaleState {
 public:
  explicit MartingaleState(int p);

  double estimate() const noexcept { return estimate_; }
  double change_probability() const noexcept { return static_cast<double>(prob_); }
  int precision() const noexcept { return p_; }

  /// Registers a transition old -> new (old < new) of a single register.
  void on_register_change(std::uint8_t old_value, std::uint8_t new_value) noexcept;

  /// Convenience: forwards an insertion result, ignoring no-ops.
  void observe(const InsertResult& r) noexcept {
    if (r.changed()) on_register_change(r.old_value, r.new_value);
  }

  /// Recomputes P from the register array to shed accumulated rounding.
  void resync(const Sketch& s);

 private:
  int p_;
  const std::array<double, 256>* table_;
  double estimate_ = 0.0;
  long double prob_ = 1.0L;
};

/// P recomputed from scratch as the sum of per-register probabilities.
long double state_change_probability(const Sketch& s);

/// Sketch plus online martingale estimator, updated together.
class MartingaleSketch {
 public:
  explicit MartingaleSketch(int p) : sketch_(p), state_(p) {}

  void insert_hash(std::uint64_t h) noexcept { state_.observe(sketch_.insert_hash(h)); }

  double estimate() const noexcept { return state_.estimate(); }
  const Sketch& sketch() const noexcept { return sketch_; }
  const MartingaleState& state() const noexcept { return state_; }

 private:
  Sketch sketch_;
  MartingaleState state_;
};

}  // namespace ull

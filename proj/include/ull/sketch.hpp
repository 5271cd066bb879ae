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

// UltraLogLog register array: 2^p byte registers, each holding the maximum
// update value u in its upper 6 bits and two flags for the occurrence of
// u-1 and u-2 in its lower 2 bits.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ull {

inline constexpr int kMinPrecision = 3;
inline constexpr int kMaxPrecision = 26;

/// Saturating update value for 64-bit hashes.
constexpr int max_update_value(int p) noexcept { return 65 - p; }

/// Decomposition r = 4u + <b1 b2>_2.
struct RegisterFields {
  int u = 0;
  int b1 = 0;  // update value u-1 occurred
  int b2 = 0;  // update value u-2 occurred
};

constexpr RegisterFields fields(std::uint8_t r) noexcept {
  return {r >> 2, (r >> 1) & 1, r & 1};
}

/// Whether `r` can be produced by insertions into a sketch of precision p.
bool is_reachable(std::uint8_t r, int p) noexcept;

/// Packs an occurrence bitset (bit k+1 <=> update value k seen) into a
/// register byte. Requires x >= 4.
std::uint8_t pack(std::uint64_t x);

/// Inverse of pack for reachable values; returns 0 for r < 4.
std::uint64_t unpack(std::uint8_t r) noexcept;

/// Number of registers per value.
struct RegisterHistogram {
  int p = kMinPrecision;
  std::array<std::uint64_t, 256> counts{};

  std::uint64_t m() const noexcept { return std::uint64_t{1} << p; }
  std::uint64_t operator[](std::size_t r) const noexcept { return counts[r]; }
  std::uint64_t total() const noexcept;
};

/// Register index and the value transition caused by one insertion.
struct InsertResult {
  std::size_t index;
  std::uint8_t old_value;
  std::uint8_t new_value;

  bool changed() const noexcept { return old_value != new_value; }
};

class Sketch {
 public:
  /// Empty sketch; throws ConfigError unless 3 <= p <= 26.
  explicit Sketch(int p);

  /// Adopts an existing register array. Throws ConfigError on a bad size
  /// and ContractViolation on unreachable register values.
  static Sketch from_registers(int p, std::vector<std::uint8_t> registers);

  int precision() const noexcept { return p_; }
  std::size_t size() const noexcept { return registers_.size(); }
  std::span<const std::uint8_t> registers() const noexcept { return registers_; }
  std::uint8_t operator[](std::size_t i) const noexcept { return registers_[i]; }

  InsertResult insert_hash(std::uint64_t h) noexcept;

  /// Merges `src` (precision >= this one) into this sketch in place.
  void merge_from(const Sketch& src);

  /// Equivalent to merging this sketch into an empty one of precision p.
  Sketch downsize(int p) const;

  RegisterHistogram histogram() const noexcept;

  /// HyperLogLog view: floor(r / 4) per register.
  std::vector<std::uint8_t> to_hll_registers() const;

  /// Byte 0 holds p, followed by the 2^p registers in index order.
  std::vector<std::uint8_t> serialize() const;
  static Sketch deserialize(std::span<const std::uint8_t> bytes);

  bool empty() const noexcept;

  friend bool operator==(const Sketch&, const Sketch&) = default;

 private:
  int p_;
  std::vector<std::uint8_t> registers_;
};

/// Update value extracted from a hash: NLZ of the low 64-p bits, minus p,
/// plus one, with NLZ(0) := 64. Always in [1, 65-p].
int update_value(std::uint64_t h, int p) noexcept;

inline void merge_into(Sketch& dst, const Sketch& src) { dst.merge_from(src); }

inline Sketch downsize(const Sketch& s, int p) { return s.downsize(p); }

/// Reference HyperLogLog insertion (6-bit registers stored one per byte).
/// Used as an independent oracle for the HLL projection.
void hll_reference_insert(std::span<std::uint8_t> registers, std::uint64_t h, int p);

}  // namespace ull

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

#include "ull/sketch.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include "ull/errors.hpp"

namespace ull {
namespace {

void check_precision(int p) {
  if (p < kMinPrecision || p > kMaxPrecision) {
    throw ConfigError("precision " + std::to_string(p) + " outside [" +
                      std::to_string(kMinPrecision) + ", " +
                      std::to_string(kMaxPrecision) + "]");
  }
}

// pack without the x >= 4 check, for paths that guarantee it.
inline std::uint8_t pack_raw(std::uint64_t x) noexcept {
  const int u = 62 - std::countl_zero(x);
  return static_cast<std::uint8_t>(4 * u + ((x >> (u - 1)) & 3));
}

}  // namespace

bool is_reachable(std::uint8_t r, int p) noexcept {
  if (r == 0) return true;
  const auto [u, b1, b2] = fields(r);
  if (u < 1 || u > max_update_value(p)) return false;
  if (u == 1) return b1 == 0 && b2 == 0;
  if (u == 2) return b2 == 0;
  return true;
}

std::uint8_t pack(std::uint64_t x) {
  if (x < 4) throw ContractViolation("pack requires an occurrence word >= 4");
  return pack_raw(x);
}

std::uint64_t unpack(std::uint8_t r) noexcept {
  if (r < 4) return 0;
  const int u = r >> 2;
  return (std::uint64_t{4} | (r & 3u)) << (u - 1);
}

int update_value(std::uint64_t h, int p) noexcept {
  const std::uint64_t masked = h & (~std::uint64_t{0} >> p);
  return std::countl_zero(masked) - p + 1;  // countl_zero(0) == 64
}

std::uint64_t RegisterHistogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Sketch::Sketch(int p) : p_(p) {
  check_precision(p);
  registers_.assign(std::size_t{1} << p, 0);
}

Sketch Sketch::from_registers(int p, std::vector<std::uint8_t> registers) {
  check_precision(p);
  if (registers.size() != (std::size_t{1} << p)) {
    throw ConfigError("register count " + std::to_string(registers.size()) +
                      " does not match precision " + std::to_string(p));
  }
  for (std::size_t i = 0; i < registers.size(); ++i) {
    if (!is_reachable(registers[i], p)) {
      throw ContractViolation("unreachable register value " +
                              std::to_string(registers[i]) + " at index " +
                              std::to_string(i));
    }
  }
  Sketch s(p);
  s.registers_ = std::move(registers);
  return s;
}

InsertResult Sketch::insert_hash(std::uint64_t h) noexcept {
  const std::size_t i = static_cast<std::size_t>(h >> (64 - p_));
  const int k = update_value(h, p_);
  const std::uint8_t old_value = registers_[i];
  const std::uint8_t new_value = pack_raw(unpack(old_value) | (std::uint64_t{1} << (k + 1)));
  registers_[i] = new_value;
  return {i, old_value, new_value};
}

void Sketch::merge_from(const Sketch& src) {
  if (p_ > src.p_) {
    throw PrecisionError("cannot merge precision " + std::to_string(src.p_) +
                         " into higher precision " + std::to_string(p_));
  }
  const auto& other = src.registers_;
  if (p_ == src.p_) {
    for (std::size_t i = 0; i < registers_.size(); ++i) {
      if (other[i] != 0) registers_[i] = pack_raw(unpack(registers_[i]) | unpack(other[i]));
    }
    return;
  }

  // Each destination register absorbs a batch of 2^d source registers. The
  // first one keeps its update values shifted by d; any nonzero register at
  // batch offset j >= 1 implies update value NLZ(j) + d - 63.
  const int d = src.p_ - p_;
  const std::uint64_t batch = std::uint64_t{1} << d;
  std::size_t j = 0;
  for (std::size_t i = 0; i < registers_.size(); ++i) {
    std::uint64_t x = unpack(registers_[i]) | (unpack(other[j]) << d);
    ++j;
    for (std::uint64_t sub = 1; sub < batch; ++sub, ++j) {
      if (other[j] != 0) {
        const int k = std::countl_zero(sub) + d - 63;
        x |= std::uint64_t{1} << (k + 1);
      }
    }
    if (x != 0) registers_[i] = pack_raw(x);
  }
}

Sketch Sketch::downsize(int p) const {
  check_precision(p);
  Sketch result(p);
  result.merge_from(*this);
  return result;
}

RegisterHistogram Sketch::histogram() const noexcept {
  RegisterHistogram h;
  h.p = p_;
  for (std::uint8_t r : registers_) ++h.counts[r];
  return h;
}

std::vector<std::uint8_t> Sketch::to_hll_registers() const {
  std::vector<std::uint8_t> out(registers_.size());
  std::transform(registers_.begin(), registers_.end(), out.begin(),
                 [](std::uint8_t r) { return static_cast<std::uint8_t>(r >> 2); });
  return out;
}

std::vector<std::uint8_t> Sketch::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(registers_.size() + 1);
  out.push_back(static_cast<std::uint8_t>(p_));
  out.insert(out.end(), registers_.begin(), registers_.end());
  return out;
}

Sketch Sketch::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DecodeError(0, "empty input, expected precision byte");
  const int p = bytes[0];
  if (p < kMinPrecision || p > kMaxPrecision) {
    throw DecodeError(0, "invalid precision " + std::to_string(p));
  }
  const std::size_t expected = (std::size_t{1} << p) + 1;
  if (bytes.size() != expected) {
    throw DecodeError(std::min(bytes.size(), expected),
                      "length " + std::to_string(bytes.size()) + ", expected " +
                          std::to_string(expected));
  }
  for (std::size_t i = 1; i < bytes.size(); ++i) {
    if (!is_reachable(bytes[i], p)) {
      throw DecodeError(i, "unreachable register value " + std::to_string(bytes[i]));
    }
  }
  Sketch s(p);
  std::copy(bytes.begin() + 1, bytes.end(), s.registers_.begin());
  return s;
}

bool Sketch::empty() const noexcept {
  return std::all_of(registers_.begin(), registers_.end(),
                     [](std::uint8_t r) { return r == 0; });
}

void hll_reference_insert(std::span<std::uint8_t> registers, std::uint64_t h, int p) {
  if (p < 2 || p > 63 || registers.size() != (std::size_t{1} << p)) {
    throw ContractViolation("HLL register array does not match precision");
  }
  const std::size_t i = static_cast<std::size_t>(h >> (64 - p));
  const std::uint64_t masked = h & (~std::uint64_t{0} >> p);
  const auto k = static_cast<std::uint8_t>(std::countl_zero(masked) - p + 1);
  registers[i] = std::max(registers[i], k);
}

}  // namespace ull

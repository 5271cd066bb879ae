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

#include "ull/simkit.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <span>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "ull/errors.hpp"
#include "ull/estimators.hpp"
#include "ull/hashing.hpp"
#include "ull/martingale.hpp"
#include "ull/theory.hpp"

namespace ull::sim {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("invalid number '" + s + "'");
  }
  return v;
}

unsigned resolve_threads(unsigned threads, std::uint64_t work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(work, 1)));
}

// Runs body(i) for i in [0, count). The first exception is rethrown.
template <class Body>
void parallel_for(std::uint64_t count, unsigned threads, Body&& body) {
  threads = resolve_threads(threads, count);
  if (threads == 1) {
    for (std::uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::uint64_t i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Event {
  double time;
  std::uint32_t index;
  std::uint8_t k;
};

// Hash that lands in register i with update value k.
std::uint64_t synthetic_hash(std::uint32_t i, int k, int p) noexcept {
  const std::uint64_t low = k <= 64 - p ? std::uint64_t{1} << (64 - p - k) : 0;
  return (std::uint64_t{i} << (64 - p)) | low;
}

// Simulates one trial and calls visit(target_index, sketch, martingale) at
// every target. Elements are inserted one by one up to `threshold`, the rest
// is covered by waiting times.
template <class Visit>
void simulate_trial(int p, std::span<const double> targets, double threshold,
                    std::uint64_t stream, Visit&& visit) {
  Sketch sketch(p);
  MartingaleState martingale(p);
  SplitMix64 rng(stream);
  const auto exact_limit = static_cast<std::uint64_t>(std::floor(std::max(threshold, 0.0)));

  std::uint64_t inserted = 0;
  auto insert_until = [&](std::uint64_t n) {
    for (; inserted < n; ++inserted) martingale.observe(sketch.insert_hash(rng()));
  };

  std::size_t t = 0;
  for (; t < targets.size() && targets[t] <= static_cast<double>(exact_limit); ++t) {
    insert_until(static_cast<std::uint64_t>(targets[t]));
    visit(t, sketch, martingale);
  }
  if (t == targets.size()) return;
  insert_until(exact_limit);

  const double start = static_cast<double>(exact_limit);
  const double horizon = targets.back();
  const int w = max_update_value(p);
  const std::uint32_t m = std::uint32_t{1} << p;
  std::vector<Event> events;
  for (std::uint32_t i = 0; i < m; ++i) {
    for (int k = 1; k <= w; ++k) {
      const double s = std::ldexp(1.0 / m, -std::min(k, 64 - p));
      const double wait = std::max(1.0, std::ceil(std::log(rng.uniform_open0()) / std::log1p(-s)));
      const double time = start + wait;
      if (time <= horizon) events.push_back({time, i, static_cast<std::uint8_t>(k)});
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.index != b.index) return a.index < b.index;
    return a.k < b.k;
  });

  auto next = events.begin();
  for (; t < targets.size(); ++t) {
    for (; next != events.end() && next->time <= targets[t]; ++next) {
      martingale.observe(sketch.insert_hash(synthetic_hash(next->index, next->k, p)));
    }
    visit(t, sketch, martingale);
  }
}

std::vector<ErrorStats> run_plan(const SimPlan& plan, double threshold, unsigned threads) {
  plan.validate();
  const std::size_t n_targets = plan.targets.size();
  const std::size_t n_est = plan.estimators.size();
  const std::size_t stride = n_targets * n_est;
  std::vector<double> values(static_cast<std::size_t>(plan.trials) * stride);
  const FgraEstimator fgra;

  parallel_for(plan.trials, threads, [&](std::uint64_t trial) {
    double* row = values.data() + trial * stride;
    simulate_trial(plan.p, plan.targets, threshold, stream_seed(plan.seed, trial),
                   [&](std::size_t t, const Sketch& s, const MartingaleState& mart) {
                     RegisterHistogram hist;
                     bool have_hist = false;
                     for (std::size_t e = 0; e < n_est; ++e) {
                       double est = 0.0;
                       if (plan.estimators[e] == EstimatorKind::martingale) {
                         est = mart.estimate();
                       } else {
                         if (!have_hist) {
                           hist = s.histogram();
                           have_hist = true;
                         }
                         est = plan.estimators[e] == EstimatorKind::fgra ? fgra.estimate(hist)
                                                                         : ml_estimate(hist);
                       }
                       row[t * n_est + e] = est;
                     }
                   });
  });

  const double m = std::ldexp(1.0, plan.p);
  std::vector<ErrorStats> out;
  out.reserve(n_targets);
  for (std::size_t t = 0; t < n_targets; ++t) {
    const double n = plan.targets[t];
    ErrorStats stats{n, {}};
    for (std::size_t e = 0; e < n_est; ++e) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (std::uint64_t trial = 0; trial < plan.trials; ++trial) {
        const double est = values[trial * stride + t * n_est + e];
        // Relative error is undefined at n = 0; the absolute error is used.
        const double err = n > 0.0 ? (est - n) / n : est;
        sum += err;
        sum_sq += err * err;
      }
      const auto trials = static_cast<double>(plan.trials);
      stats.estimators.push_back({plan.estimators[e], plan.trials, sum / trials,
                                  std::sqrt(sum_sq / trials),
                                  theoretical_rmse(theoretical_mvp(plan.estimators[e]), m)});
    }
    out.push_back(std::move(stats));
  }
  return out;
}

}  // namespace

std::string_view to_string(EstimatorKind e) noexcept {
  switch (e) {
    case EstimatorKind::fgra: return "fgra";
    case EstimatorKind::ml: return "ml";
    case EstimatorKind::martingale: return "martingale";
  }
  return "?";
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "fgra") return EstimatorKind::fgra;
  if (name == "ml") return EstimatorKind::ml;
  if (name == "martingale") return EstimatorKind::martingale;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::vector<EstimatorKind> parse_estimators(std::string_view list) {
  std::vector<EstimatorKind> out;
  for (const auto& item : split(list, ',')) {
    const auto e = parse_estimator(item);
    if (std::find(out.begin(), out.end(), e) != out.end()) {
      throw ConfigError("estimator '" + item + "' listed twice");
    }
    out.push_back(e);
  }
  return out;
}

std::string_view to_string(SimMode m) noexcept {
  return m == SimMode::exact ? "exact" : "transitions";
}

SimMode parse_mode(std::string_view name) {
  if (name == "exact") return SimMode::exact;
  if (name == "transitions") return SimMode::transitions;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

void SimPlan::validate() const {
  if (p < kMinPrecision || p > kMaxPrecision) {
    throw ConfigError("precision " + std::to_string(p) + " outside [3, 26]");
  }
  if (estimators.empty()) throw ConfigError("no estimators selected");
  if (targets.empty()) throw ConfigError("no targets given");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double n = targets[i];
    if (!(n >= 0.0) || !std::isfinite(n) || n != std::floor(n)) {
      throw ConfigError("target " + format_number(n) + " is not a non-negative integer");
    }
    if (i > 0 && !(targets[i - 1] < n)) throw ConfigError("targets must be strictly ascending");
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (!(exact_threshold >= 0.0) || exact_threshold > kMaxExactThreshold) {
    throw ConfigError("exact threshold must lie in [0, 1e7]");
  }
}

std::vector<double> parse_targets(std::string_view text) {
  const std::string s = trim(text);
  std::vector<double> out;
  if (s.rfind("geom:", 0) == 0) {
    const auto parts = split(std::string_view(s).substr(5), ':');
    if (parts.size() != 3) throw ConfigError("expected geom:start:stop:points");
    const double start = parse_double(parts[0]);
    const double stop = parse_double(parts[1]);
    const double points = parse_double(parts[2]);
    if (!(start >= 1.0) || !(stop >= start)) {
      throw ConfigError("geom range needs 1 <= start <= stop");
    }
    if (points < 1.0 || points != std::floor(points) || points > 1e6) {
      throw ConfigError("geom point count must be a positive integer");
    }
    const auto count = static_cast<int>(points);
    const double ratio = count > 1 ? std::log(stop / start) / (count - 1) : 0.0;
    for (int i = 0; i < count; ++i) {
      const double n = i == count - 1 ? std::round(stop) : std::round(start * std::exp(ratio * i));
      if (out.empty() || out.back() < n) out.push_back(n);
    }
    return out;
  }
  for (const auto& item : split(s, ',')) out.push_back(std::round(parse_double(item)));
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i - 1] < out[i])) throw ConfigError("targets must be strictly ascending");
  }
  if (!out.empty() && out.front() < 0.0) throw ConfigError("targets must be non-negative");
  return out;
}

double theoretical_mvp(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::fgra: return 8.0 * fgra_constants_default().v;
    case EstimatorKind::ml: return theory::mvp_uncompressed(theory::kUltraLogLog);
    case EstimatorKind::martingale: return theory::mvp_martingale(theory::kUltraLogLog);
  }
  return 0.0;
}

double theoretical_rmse(double mvp, double m) {
  if (!(mvp > 0.0) || !(m >= 8.0)) throw ConfigError("theoretical_rmse needs mvp > 0, m >= 8");
  return std::sqrt(mvp / (8.0 * m));
}

std::vector<ErrorStats> run_exact(const SimPlan& plan, unsigned threads) {
  plan.validate();
  if (plan.targets.back() > plan.exact_threshold) {
    throw ConfigError("exact mode requires all targets <= exact threshold " +
                      format_number(plan.exact_threshold));
  }
  return run_plan(plan, plan.exact_threshold, threads);
}

std::vector<ErrorStats> run_transitions(const SimPlan& plan, unsigned threads) {
  return run_plan(plan, plan.exact_threshold, threads);
}

std::vector<ErrorStats> run(const SimPlan& plan, SimMode mode, unsigned threads) {
  return mode == SimMode::exact ? run_exact(plan, threads) : run_transitions(plan, threads);
}

std::vector<Sketch> final_states(int p, double n, std::uint64_t trials, std::uint64_t seed,
                                 SimMode mode, double exact_threshold, unsigned threads) {
  SimPlan plan;
  plan.p = p;
  plan.targets = {n};
  plan.trials = trials;
  plan.seed = seed;
  plan.exact_threshold = exact_threshold;
  plan.validate();
  if (mode == SimMode::exact && n > exact_threshold) {
    throw ConfigError("exact mode requires n <= exact threshold");
  }
  std::vector<Sketch> out(trials, Sketch(p));
  parallel_for(trials, threads, [&](std::uint64_t trial) {
    simulate_trial(p, plan.targets, exact_threshold, stream_seed(seed, trial),
                   [&](std::size_t, const Sketch& s, const MartingaleState&) { out[trial] = s; });
  });
  return out;
}

std::array<std::uint64_t, 256> register_marginal(const std::vector<Sketch>& states,
                                                 std::size_t index) {
  std::array<std::uint64_t, 256> counts{};
  for (const auto& s : states) {
    if (index >= s.size()) throw ConfigError("register index out of range");
    ++counts[s[index]];
  }
  return counts;
}

double histogram_entropy(const std::array<std::uint64_t, 256>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / total;
    h -= q * std::log2(q);
  }
  return h + 0.0;  // avoid -0
}

double empirical_entropy(int p, double n, std::uint64_t trials, std::uint64_t seed,
                         unsigned threads) {
  const auto states = final_states(p, n, trials, seed, SimMode::transitions,
                                   kDefaultExactThreshold, threads);
  std::array<std::uint64_t, 256> pooled{};
  for (const auto& s : states) {
    for (auto r : s.registers()) ++pooled[r];
  }
  return histogram_entropy(pooled);
}

ChiSquareResult chi_square_two_sample(const std::array<std::uint64_t, 256>& a,
                                      const std::array<std::uint64_t, 256>& b) {
  double na = 0.0;
  double nb = 0.0;
  for (int r = 0; r < 256; ++r) {
    na += static_cast<double>(a[r]);
    nb += static_cast<double>(b[r]);
  }
  if (na == 0.0 || nb == 0.0) throw ConfigError("chi-square test needs two non-empty samples");
  const double n = na + nb;

  // Group adjacent values until both expected counts reach 5.
  std::vector<std::pair<double, double>> groups;
  double ga = 0.0;
  double gb = 0.0;
  for (int r = 0; r < 256; ++r) {
    ga += static_cast<double>(a[r]);
    gb += static_cast<double>(b[r]);
    const double total = ga + gb;
    if (total > 0.0 && total * std::min(na, nb) / n >= 5.0) {
      groups.emplace_back(ga, gb);
      ga = gb = 0.0;
    }
  }
  if (ga + gb > 0.0) {
    if (groups.empty()) {
      groups.emplace_back(ga, gb);
    } else {
      groups.back().first += ga;
      groups.back().second += gb;
    }
  }
  if (groups.size() < 2) return {0.0, 0, 1.0};

  double stat = 0.0;
  for (const auto& [ca, cb] : groups) {
    const double total = ca + cb;
    const double ea = total * na / n;
    const double eb = total * nb / n;
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  const int df = static_cast<int>(groups.size()) - 1;
  const boost::math::chi_squared dist(df);
  return {stat, df, boost::math::cdf(boost::math::complement(dist, stat))};
}

KsResult ks_two_sample(const std::array<std::uint64_t, 256>& a,
                       const std::array<std::uint64_t, 256>& b) {
  double na = 0.0;
  double nb = 0.0;
  for (int r = 0; r < 256; ++r) {
    na += static_cast<double>(a[r]);
    nb += static_cast<double>(b[r]);
  }
  if (na == 0.0 || nb == 0.0) throw ConfigError("KS test needs two non-empty samples");
  double fa = 0.0;
  double fb = 0.0;
  double d = 0.0;
  for (int r = 0; r < 256; ++r) {
    fa += static_cast<double>(a[r]) / na;
    fb += static_cast<double>(b[r]) / nb;
    d = std::max(d, std::abs(fa - fb));
  }
  return {d, 1.628 * std::sqrt((na + nb) / (na * nb))};
}

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_csv(std::ostream& out, const SimPlan& plan, SimMode mode,
               const std::vector<ErrorStats>& stats) {
  out << "# schema: " << kCsvSchema << '\n';
  out << "# p=" << plan.p << " mode=" << to_string(mode) << " trials=" << plan.trials
      << " seed=" << plan.seed << " exact_threshold=" << format_number(plan.exact_threshold)
      << '\n';
  out << "target_n,estimator,trials,mean_rel_bias,rel_rmse,theoretical_rmse\n";
  for (const auto& row : stats) {
    for (const auto& e : row.estimators) {
      out << format_number(row.n) << ',' << to_string(e.estimator) << ',' << e.trials << ','
          << format_number(e.mean_rel_bias) << ',' << format_number(e.rel_rmse) << ','
          << format_number(e.theoretical_rmse) << '\n';
    }
  }
}

}  // namespace ull::sim

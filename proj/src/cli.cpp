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

#include "ull/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "ull/errors.hpp"
#include "ull/estimators.hpp"
#include "ull/hashing.hpp"
#include "ull/simkit.hpp"
#include "ull/sketch.hpp"
#include "ull/theory.hpp"

namespace ull::cli {
namespace {

using sim::format_number;
using json = nlohmann::ordered_json;

// Raised for failures that are not the caller's fault in the command line
// (I/O, malformed input data).
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write to '" + path + "' failed");
}

Sketch load_sketch(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return Sketch::deserialize(bytes);
  } catch (const DecodeError& e) {
    throw DataError(path + ": " + e.what());
  }
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

std::uint64_t parse_hex_hash(std::string_view line, std::size_t line_no) {
  std::uint64_t h = 0;
  const auto* end = line.data() + line.size();
  const auto [ptr, ec] = std::from_chars(line.data(), end, h, 16);
  if (line.size() != 16 || ec != std::errc() || ptr != end) {
    throw DataError("line " + std::to_string(line_no) + ": expected 16 hex digits");
  }
  return h;
}

double fresh_mvp_factor() { return theory::kUltraLogLog.q + theory::kUltraLogLog.r; }

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  int p = 8;
  std::string estimators = "fgra,ml,martingale";
  std::string targets;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  std::string mode = "exact";
  double exact_threshold = sim::kDefaultExactThreshold;
  unsigned threads = 0;
  std::string out_path;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  sim::SimPlan plan;
  plan.p = a.p;
  plan.estimators = sim::parse_estimators(a.estimators);
  plan.targets = sim::parse_targets(a.targets);
  plan.trials = a.trials;
  plan.seed = a.seed;
  plan.exact_threshold = a.exact_threshold;
  const auto mode = sim::parse_mode(a.mode);
  plan.validate();
  if (mode == sim::SimMode::exact && plan.targets.back() > plan.exact_threshold) {
    throw ConfigError("exact mode requires targets <= --exact-threshold; use --mode transitions");
  }
  const auto stats = sim::run(plan, mode, a.threads);
  if (a.out_path.empty()) {
    sim::write_csv(out, plan, mode, stats);
  } else {
    std::ofstream f(a.out_path);
    if (!f) throw DataError("cannot write '" + a.out_path + "'");
    sim::write_csv(f, plan, mode, stats);
  }
  return kExitOk;
}

// ---- theory -----------------------------------------------------------------

struct TheoryArgs {
  double b = 2.0;
  int q = 2;
  int r = 6;
  bool grid = false;
  double b_min = 1.05;
  double b_max = 2.2;
  int points = 50;
  std::string q_list = "0,1,2,3,4,5,6";
};

void write_report(std::ostream& out, const theory::MvpReport& rep) {
  out << format_number(rep.config.b) << ',' << rep.config.q << ',' << rep.config.r << ','
      << format_number(rep.fisher_factor) << ',' << format_number(rep.entropy_rate) << ','
      << format_number(rep.mvp_uncompressed) << ',' << format_number(rep.mvp_compressed) << ','
      << format_number(rep.mvp_martingale) << ',' << format_number(rep.mvp_compressed_martingale)
      << '\n';
}

int cmd_theory(const TheoryArgs& a, std::ostream& out) {
  std::vector<theory::GeneralizedConfig> configs;
  if (a.grid) {
    if (!(a.b_min > 1.0) || !(a.b_max >= a.b_min)) {
      throw ConfigError("grid needs 1 < --b-min <= --b-max");
    }
    if (a.points < 1) throw ConfigError("--points must be positive");
    std::vector<int> qs;
    for (double q : sim::parse_targets(a.q_list)) qs.push_back(static_cast<int>(q));
    const double step = a.points > 1 ? std::log(a.b_max / a.b_min) / (a.points - 1) : 0.0;
    for (int q : qs) {
      for (int i = 0; i < a.points; ++i) {
        configs.push_back({a.b_min * std::exp(step * i), q, a.r});
      }
    }
  } else {
    configs.push_back({a.b, a.q, a.r});
  }
  for (const auto& c : configs) {
    try {
      c.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  out << "# schema: ull-theory/1\n";
  out << "b,q,r,fisher_factor,entropy_rate,mvp_uncompressed,mvp_compressed,mvp_martingale,"
         "mvp_compressed_martingale\n";
  for (const auto& c : configs) write_report(out, theory::mvp_report(c));
  return kExitOk;
}

// ---- optimize / constants ---------------------------------------------------

json optimum_json(theory::Objective objective, double b) {
  if (!(b > 1.0) || !std::isfinite(b)) throw ConfigError("--b must be > 1");
  const auto opt = theory::optimize_tau(objective, b);
  const auto phi = objective == theory::Objective::fgra ? theory::fgra_coefficients(b, opt.tau)
                                                        : theory::gra_coefficients(b, opt.tau);
  json j;
  j["schema"] = "ull-optimize/1";
  j["estimator"] = objective == theory::Objective::fgra ? "fgra" : "gra";
  j["b"] = b;
  j["tau"] = opt.tau;
  j["v"] = opt.v;
  j["phi"] = phi;
  j["mvp"] = fresh_mvp_factor() * opt.v;
  return j;
}

void print_json(std::ostream& out, const json& j) {
  // nlohmann::json emits the shortest round-trip representation of doubles.
  out << j.dump(2) << '\n';
}

int cmd_optimize(const std::string& estimator, double b, std::ostream& out) {
  theory::Objective objective;
  if (estimator == "fgra") {
    objective = theory::Objective::fgra;
  } else if (estimator == "gra") {
    objective = theory::Objective::gra;
  } else {
    throw ConfigError("unknown estimator '" + estimator + "'");
  }
  print_json(out, optimum_json(objective, b));
  return kExitOk;
}

int cmd_constants(std::ostream& out, std::ostream& err) {
  constexpr double kTolerance = 1e-6;
  const auto baked = fgra_constants_default();
  const auto fresh = theory::optimize_tau(theory::Objective::fgra, 2.0);
  const auto fresh_phi = theory::fgra_coefficients(2.0, fresh.tau);
  double drift = std::max(std::abs(baked.tau - fresh.tau), std::abs(baked.v - fresh.v));
  for (int j = 0; j < 4; ++j) drift = std::max(drift, std::abs(baked.phi[j] - fresh_phi[j]));

  json j;
  j["schema"] = "ull-constants/1";
  j["tau"] = baked.tau;
  j["v"] = baked.v;
  j["phi"] = baked.phi;
  j["mvp"] = fresh_mvp_factor() * baked.v;
  j["ml_bias_constant"] = ml_bias_constant();
  j["fresh"] = {{"tau", fresh.tau}, {"v", fresh.v}, {"phi", fresh_phi}};
  j["max_drift"] = drift;
  j["tolerance"] = kTolerance;
  j["ok"] = drift <= kTolerance;
  print_json(out, j);
  if (drift > kTolerance) {
    err << "error: baked-in constants drift from a fresh optimization by "
        << format_number(drift) << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// ---- sketch -----------------------------------------------------------------

struct SketchArgs {
  std::string path;
  std::string out_path;
  std::vector<std::string> inputs;
  std::string input = "-";
  int p = 12;
  bool raw = false;
  std::string estimator = "fgra";
  std::string format = "json";
};

int cmd_sketch_add(const SketchArgs& a, std::istream& in) {
  if (a.p < kMinPrecision || a.p > kMaxPrecision) {
    throw ConfigError("--p must lie in [3, 26]");
  }
  Sketch s = file_exists(a.path) ? load_sketch(a.path) : Sketch(a.p);
  std::ifstream file;
  std::istream* src = &in;
  if (a.input != "-") {
    file.open(a.input);
    if (!file) throw DataError("cannot open '" + a.input + "'");
    src = &file;
  }
  const DefaultHasher hasher;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(*src, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    s.insert_hash(a.raw ? parse_hex_hash(line, line_no) : hasher.hash(line));
  }
  write_file(a.path, s.serialize());
  return kExitOk;
}

int cmd_sketch_merge(const SketchArgs& a) {
  std::vector<Sketch> sketches;
  for (const auto& path : a.inputs) sketches.push_back(load_sketch(path));
  int p = kMaxPrecision;
  for (const auto& s : sketches) p = std::min(p, s.precision());
  Sketch result(p);
  for (const auto& s : sketches) result.merge_from(s);
  write_file(a.out_path, result.serialize());
  return kExitOk;
}

int cmd_sketch_downsize(const SketchArgs& a) {
  const Sketch s = load_sketch(a.path);
  if (a.p < kMinPrecision || a.p > s.precision()) {
    throw ConfigError("--p must lie in [3, " + std::to_string(s.precision()) + "]");
  }
  write_file(a.out_path, s.downsize(a.p).serialize());
  return kExitOk;
}

int cmd_sketch_estimate(const SketchArgs& a, std::ostream& out) {
  if (a.estimator != "fgra" && a.estimator != "ml") {
    throw ConfigError("--estimator must be fgra or ml (martingale estimates are not stored)");
  }
  const Sketch s = load_sketch(a.path);
  const auto h = s.histogram();
  out << format_number(a.estimator == "fgra" ? fgra_estimate(h) : ml_estimate(h)) << '\n';
  return kExitOk;
}

int cmd_sketch_export(const SketchArgs& a, std::ostream& out) {
  const Sketch s = load_sketch(a.path);
  const auto h = s.histogram();
  if (a.format == "json") {
    json j;
    j["schema"] = "ull-sketch/1";
    j["p"] = s.precision();
    j["registers"] = std::vector<int>(s.registers().begin(), s.registers().end());
    json hist = json::object();
    for (int r = 0; r < 256; ++r) {
      if (h[r] != 0) hist[std::to_string(r)] = h[r];
    }
    j["histogram"] = hist;
    j["fgra"] = fgra_estimate(h);
    j["ml"] = ml_estimate(h);
    print_json(out, j);
  } else if (a.format == "csv") {
    out << "# schema: ull-sketch/1\n# p=" << s.precision() << "\nindex,register\n";
    for (std::size_t i = 0; i < s.size(); ++i) out << i << ',' << int{s[i]} << '\n';
  } else {
    throw ConfigError("--format must be json or csv");
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"UltraLogLog sketches, estimators, theory and simulation", "ull"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo estimation error as CSV");
  simulate->add_option("--p", sim_args.p, "Precision (3..26)")->capture_default_str();
  simulate->add_option("--estimators", sim_args.estimators, "Comma list of fgra, ml, martingale")
      ->capture_default_str();
  simulate->add_option("--targets", sim_args.targets,
                       "Distinct counts: comma list or geom:start:stop:points")
      ->required();
  simulate->add_option("--trials", sim_args.trials)->capture_default_str();
  simulate->add_option("--seed", sim_args.seed)->capture_default_str();
  simulate->add_option("--mode", sim_args.mode, "exact or transitions")->capture_default_str();
  simulate->add_option("--exact-threshold", sim_args.exact_threshold,
                       "Switch point to waiting-time simulation")
      ->capture_default_str();
  simulate->add_option("--threads", sim_args.threads, "0 = hardware concurrency")
      ->capture_default_str();
  simulate->add_option("--out", sim_args.out_path, "Output file (default stdout)");

  TheoryArgs th;
  auto* theory_cmd = app.add_subcommand("theory", "Memory-variance products as CSV");
  theory_cmd->add_option("--b", th.b, "Base")->capture_default_str();
  theory_cmd->add_option("--q", th.q, "Extra occurrence bits")->capture_default_str();
  theory_cmd->add_option("--r", th.r, "Bits for the maximum")->capture_default_str();
  theory_cmd->add_flag("--grid", th.grid, "Sweep b over a log grid for each q");
  theory_cmd->add_option("--b-min", th.b_min)->capture_default_str();
  theory_cmd->add_option("--b-max", th.b_max)->capture_default_str();
  theory_cmd->add_option("--points", th.points)->capture_default_str();
  theory_cmd->add_option("--q-list", th.q_list)->capture_default_str();

  std::string opt_estimator = "fgra";
  double opt_b = 2.0;
  auto* optimize = app.add_subcommand("optimize", "Optimal tau, v and coefficients as JSON");
  optimize->add_option("--estimator", opt_estimator, "gra or fgra")->capture_default_str();
  optimize->add_option("--b", opt_b, "Base")->capture_default_str();

  auto* constants = app.add_subcommand("constants", "Print and verify built-in FGRA constants");

  SketchArgs sk;
  auto* sketch = app.add_subcommand("sketch", "Operate on serialized sketch files");
  sketch->require_subcommand(1);
  auto* add = sketch->add_subcommand("add", "Insert newline-delimited tokens");
  add->add_option("sketch", sk.path, "Sketch file, created if missing")->required();
  add->add_option("--p", sk.p, "Precision for a new sketch")->capture_default_str();
  add->add_option("--input", sk.input, "Token file, - for stdin")->capture_default_str();
  add->add_flag("--raw", sk.raw, "Lines are 16-digit hex hashes");
  auto* merge = sketch->add_subcommand("merge", "Union of sketches at the lowest precision");
  merge->add_option("out", sk.out_path, "Output sketch file")->required();
  merge->add_option("inputs", sk.inputs, "Input sketch files")->required();
  auto* down = sketch->add_subcommand("downsize", "Reduce precision");
  down->add_option("sketch", sk.path)->required();
  down->add_option("out", sk.out_path)->required();
  down->add_option("--p", sk.p, "Target precision")->required();
  auto* estimate = sketch->add_subcommand("estimate", "Print the distinct-count estimate");
  estimate->add_option("sketch", sk.path)->required();
  estimate->add_option("--estimator", sk.estimator, "fgra or ml")->capture_default_str();
  auto* exp = sketch->add_subcommand("export", "Dump registers as JSON or CSV");
  exp->add_option("sketch", sk.path)->required();
  exp->add_option("--format", sk.format, "json or csv")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_args, out);
    if (theory_cmd->parsed()) return cmd_theory(th, out);
    if (optimize->parsed()) return cmd_optimize(opt_estimator, opt_b, out);
    if (constants->parsed()) return cmd_constants(out, err);
    if (add->parsed()) return cmd_sketch_add(sk, in);
    if (merge->parsed()) return cmd_sketch_merge(sk);
    if (down->parsed()) return cmd_sketch_downsize(sk);
    if (estimate->parsed()) return cmd_sketch_estimate(sk, out);
    if (exp->parsed()) return cmd_sketch_export(sk, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ull::cli

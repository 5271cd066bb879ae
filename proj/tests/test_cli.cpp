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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "ull/cli.hpp"

namespace fs = std::filesystem;
using ull::cli::kExitOk;
using ull::cli::kExitRuntime;
using ull::cli::kExitUsage;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out;
  std::ostringstream err;
  const int code = ull::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> result;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) result.push_back(line);
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ull-cli-test-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string tokens(int from, int to) {
  std::string text;
  for (int i = from; i < to; ++i) text += "item-" + std::to_string(i) + "\n";
  return text;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(invoke({"--help"}).code == kExitOk);
  CHECK(invoke({"simulate", "--help"}).code == kExitOk);
  CHECK(invoke({}).code == kExitUsage);
  CHECK(invoke({"bogus"}).code == kExitUsage);
  CHECK(invoke({"simulate"}).code == kExitUsage);  // --targets is required
  CHECK(invoke({"simulate", "--targets", "10", "--p", "2"}).code == kExitUsage);
  CHECK(invoke({"simulate", "--targets", "10,5"}).code == kExitUsage);
  CHECK(invoke({"simulate", "--targets", "10", "--estimators", "hll"}).code == kExitUsage);
  CHECK(invoke({"theory", "--b", "1"}).code == kExitUsage);
  CHECK(invoke({"optimize", "--estimator", "ml"}).code == kExitUsage);
  CHECK(invoke({"sketch", "estimate", "/nonexistent/file.ull"}).code == kExitRuntime);
}

TEST_CASE("simulate writes one row per target and estimator") {
  const auto r = invoke({"simulate", "--p", "8", "--estimators", "fgra,ml,martingale", "--targets",
                         "1e3,1e4,1e5", "--trials", "20", "--seed", "7"});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] == "# schema: ull-simulate/1");
  CHECK(rows[2] == "target_n,estimator,trials,mean_rel_bias,rel_rmse,theoretical_rmse");
  CHECK(rows[3].rfind("1000,fgra,20,", 0) == 0);
  CHECK(rows[11].rfind("100000,martingale,20,", 0) == 0);
  // Same seed, same bytes; --threads does not matter.
  const auto again = invoke({"simulate", "--p", "8", "--estimators", "fgra,ml,martingale",
                             "--targets", "1e3,1e4,1e5", "--trials", "20", "--seed", "7",
                             "--threads", "3"});
  CHECK(again.out == r.out);
}

TEST_CASE("simulate in transitions mode reaches large targets") {
  const auto r = invoke({"simulate", "--p", "6", "--estimators", "fgra", "--targets", "1e9,1e15",
                         "--trials", "5", "--mode", "transitions", "--exact-threshold", "1000"});
  REQUIRE(r.code == kExitOk);
  CHECK(lines(r.out).size() == 5);
  CHECK(invoke({"simulate", "--targets", "1e8", "--trials", "1"}).code == kExitUsage);
}

TEST_CASE("theory point and grid") {
  const auto r = invoke({"theory", "--b", "2", "--q", "2", "--r", "6"});
  REQUIRE(r.code == kExitOk);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "# schema: ull-theory/1");
  std::istringstream row(rows[2]);
  std::vector<double> values;
  for (std::string cell; std::getline(row, cell, ',');) values.push_back(std::stod(cell));
  REQUIRE(values.size() == 9);
  CHECK(values[5] == doctest::Approx(4.63129).epsilon(1e-5));
  CHECK(values[6] == doctest::Approx(2.31217).epsilon(1e-5));
  CHECK(values[7] == doctest::Approx(3.46574).epsilon(1e-5));

  const auto grid = invoke({"theory", "--grid", "--points", "4", "--q-list", "0,2"});
  REQUIRE(grid.code == kExitOk);
  CHECK(lines(grid.out).size() == 2 + 8);
}

TEST_CASE("optimize and constants") {
  const auto r = invoke({"optimize", "--estimator", "fgra", "--b", "2"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == "ull-optimize/1");
  CHECK(j["tau"].get<double>() == doctest::Approx(0.819491).epsilon(1e-5));
  CHECK(j["v"].get<double>() == doctest::Approx(0.611893).epsilon(1e-5));
  CHECK(j["mvp"].get<double>() == doctest::Approx(4.895145).epsilon(1e-6));
  CHECK(j["phi"].size() == 4);

  const auto gra = nlohmann::json::parse(invoke({"optimize", "--estimator", "gra"}).out);
  CHECK(gra["tau"].get<double>() == doctest::Approx(0.755097).epsilon(1e-5));
  CHECK(gra["mvp"].get<double>() == doctest::Approx(4.935917).epsilon(1e-6));

  const auto c = invoke({"constants"});
  CHECK(c.code == kExitOk);
  CHECK(nlohmann::json::parse(c.out)["ok"] == true);
}

TEST_CASE("sketch file pipeline") {
  TempDir dir;
  const auto a = dir / "a.ull";
  const auto b = dir / "b.ull";
  REQUIRE(invoke({"sketch", "add", a, "--p", "10"}, tokens(0, 3000)).code == kExitOk);
  const auto first = invoke({"sketch", "estimate", a});
  REQUIRE(first.code == kExitOk);
  const double est = std::stod(first.out);
  CHECK(est == doctest::Approx(3000).epsilon(0.15));

  // Re-adding the same tokens changes nothing.
  const auto before = slurp(a);
  REQUIRE(invoke({"sketch", "add", a}, tokens(0, 3000)).code == kExitOk);
  CHECK(slurp(a) == before);
  CHECK(invoke({"sketch", "estimate", a}).out == first.out);
  const double ml = std::stod(invoke({"sketch", "estimate", a, "--estimator", "ml"}).out);
  CHECK(ml == doctest::Approx(3000).epsilon(0.15));

  // Merging two halves equals adding everything to one sketch.
  const auto lo = dir / "lo.ull";
  const auto hi = dir / "hi.ull";
  REQUIRE(invoke({"sketch", "add", lo, "--p", "10"}, tokens(0, 1500)).code == kExitOk);
  REQUIRE(invoke({"sketch", "add", hi, "--p", "12"}, tokens(1500, 3000)).code == kExitOk);
  const auto merged = dir / "merged.ull";
  REQUIRE(invoke({"sketch", "merge", merged, lo, hi}).code == kExitOk);
  CHECK(slurp(merged) == slurp(a));

  // Downsizing commutes with insertion.
  REQUIRE(invoke({"sketch", "add", b, "--p", "12"}, tokens(0, 3000)).code == kExitOk);
  const auto small = dir / "small.ull";
  REQUIRE(invoke({"sketch", "downsize", b, small, "--p", "10"}).code == kExitOk);
  CHECK(slurp(small) == slurp(a));
  CHECK(invoke({"sketch", "downsize", a, small, "--p", "12"}).code != kExitOk);

  const auto exported = invoke({"sketch", "export", a});
  REQUIRE(exported.code == kExitOk);
  const auto j = nlohmann::json::parse(exported.out);
  CHECK(j["p"] == 10);
  CHECK(j["registers"].size() == 1024);
  const auto rows = lines(invoke({"sketch", "export", a, "--format", "csv"}).out);
  CHECK(rows.size() == 3 + 1024);
  CHECK(rows[0] == "# schema: ull-sketch/1");

  // Raw hex hashes.
  const auto raw = dir / "raw.ull";
  CHECK(invoke({"sketch", "add", raw, "--raw", "--p", "4"}, "00000000000000ff\nffffffffffffffff\n")
            .code == kExitOk);
  CHECK(invoke({"sketch", "add", raw, "--raw"}, "xyz\n").code == kExitRuntime);

  // Corrupt files are reported, not crashed on.
  const auto bad = dir / "bad.ull";
  std::ofstream(bad, std::ios::binary) << "not a sketch";
  const auto r = invoke({"sketch", "estimate", bad});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("bad.ull") != std::string::npos);
}

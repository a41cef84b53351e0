// Copyright 2026 The mrbf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "mrbf/data.hpp"
#include "oracles.hpp"

using namespace mrbf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("mrbf_test_data_" + std::to_string(++counter));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = (path / name).string();
    std::ofstream(p) << text;
    return p;
  }
};

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

MultivariateSeries ramp(Eigen::Index n, Eigen::Index m) {
  Eigen::MatrixXd v(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) v(i, j) = 0.5 * i - j + 0.25;
  return complete_series(Eigen::VectorXd::LinSpaced(n, 0, static_cast<double>(n - 1)), v);
}

void check_bookkeeping(const MultivariateSeries& original, const GroundTruthPair& pair) {
  for (Eigen::Index n = 0; n < original.rows(); ++n)
    for (Eigen::Index m = 0; m < original.vars(); ++m) {
      const bool hidden = pair.eval_mask(n, m) == 1.0;
      CHECK_FALSE((hidden && pair.corrupted.observed(n, m)));
      CHECK(original.observed(n, m) == (hidden || pair.corrupted.observed(n, m)));
      if (hidden) CHECK(pair.truth(n, m) == original.values()(n, m));
    }
  Eigen::MatrixXd restored = (pair.eval_mask.array() == 1.0).select(pair.truth, pair.corrupted.values());
  CHECK(oracle::same(restored, original.values()));
}

}  // namespace

TEST_CASE("load_csv reads empty cells as missing") {
  TempDir dir;
  const auto path = dir.write("a.csv", "timestamp,a,b\n0,1.5,2\n1,,3\n2.5,4,-1e-3\n");
  auto s = load_csv(path);
  CHECK(s.rows() == 3);
  CHECK(s.names() == std::vector<std::string>{"a", "b"});
  CHECK(s.mask().sum() == 5.0);
  CHECK_FALSE(s.observed(1, 0));
  CHECK(s.values()(2, 1) == -1e-3);
  CHECK(s.timestamps()[2] == 2.5);
}

TEST_CASE("sidecar mask overrides a present value") {
  TempDir dir;
  const auto path = dir.write("a.csv", "timestamp,a,b\n0,1,2\n1,3,4\n");
  const auto mask = dir.write("m.csv", "timestamp,a,b\n0,1,0\n1,1,1\n");
  auto s = load_csv(path, mask);
  CHECK_FALSE(s.observed(0, 1));
  CHECK(s.mask().sum() == 3.0);
  const auto bad = dir.write("bad.csv", "timestamp,a,b\n0,1,2\n1,1,1\n");
  CHECK(error_of([&] { load_csv(path, bad); }).find("mask not binary") != std::string::npos);
}

TEST_CASE("load_csv errors carry the line number") {
  TempDir dir;
  CHECK(error_of([&] { load_csv(dir.write("r.csv", "timestamp,a,b\n0,1,2\n1,3\n")); }).find("r.csv:3") !=
        std::string::npos);
  CHECK(error_of([&] { load_csv(dir.write("n.csv", "timestamp,a\n0,1\n1,abc\n")); }).find(":3") != std::string::npos);
  CHECK(error_of([&] { load_csv(dir.write("t.csv", "timestamp,a\n0,1\n0,2\n")); }).find("non-increasing") !=
        std::string::npos);
  CHECK(error_of([&] { load_csv(dir.write("h.csv", "time,a\n0,1\n")); }).find("timestamp") != std::string::npos);
  CHECK_THROWS_AS(load_csv((dir.path / "missing.csv").string()), Error);
}

TEST_CASE("save_csv and load_csv round-trip") {
  TempDir dir;
  std::mt19937_64 rng(1);
  auto s = oracle::random_series(rng, 20, 3, 0.7);
  const auto path = (dir.path / "s.csv").string();
  save_csv(s, path);
  auto back = load_csv(path);
  CHECK(back.timestamps() == s.timestamps());
  CHECK(back.mask() == s.mask());
  CHECK(oracle::same(back.values(), s.values()));
}

TEST_CASE("inject_random hides the exact budget") {
  auto s = ramp(50, 2);
  auto pair = inject_random(s, 0.3, 5);
  CHECK(pair.eval_mask.sum() == 30.0);
  CHECK(pair.corrupted.observed_count() == 70);
  check_bookkeeping(s, pair);
  CHECK(inject_random(s, 0.3, 5).eval_mask == pair.eval_mask);
  CHECK(inject_random(s, 0.3, 6).eval_mask != pair.eval_mask);
}

TEST_CASE("inject_random keeps every variable observed") {
  auto s = ramp(40, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto pair = inject_random(s, 0.8, seed);
    CHECK(pair.eval_mask.sum() == 96.0);
    for (Eigen::Index m = 0; m < 3; ++m) CHECK(pair.corrupted.mask().col(m).sum() >= 1.0);
  }
  // Two cells per variable: hiding both of them is never allowed.
  auto tiny = ramp(2, 2);
  CHECK_THROWS_AS(inject_random(tiny, 0.9, 1), Error);
  CHECK_THROWS_AS(inject_random(s, 1.0, 1), Error);
  CHECK_THROWS_AS(inject_random(s, 0.0, 1), Error);
}

TEST_CASE("inject_long_term budget and runs") {
  auto s = ramp(500, 1);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto pair = inject_long_term(s, 0.2, 50, 80, seed);
    CHECK(pair.eval_mask.sum() == 100.0);
    check_bookkeeping(s, pair);
    Eigen::Index longest = 0, run = 0;
    for (Eigen::Index n = 0; n < 500; ++n) {
      run = pair.eval_mask(n, 0) == 1.0 ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    CHECK(longest >= 50);
    CHECK(longest <= 80);
    CHECK(inject_long_term(s, 0.2, 50, 80, seed).eval_mask == pair.eval_mask);
  }

  auto wide = ramp(500, 5);
  auto pair = inject_long_term(wide, 0.2, 50, 80, 3);
  CHECK(pair.eval_mask.sum() == 500.0);
  for (Eigen::Index m = 0; m < 5; ++m) {
    Eigen::Index run = 0;
    for (Eigen::Index n = 0; n <= 500; ++n) {
      if (n < 500 && pair.eval_mask(n, m) == 1.0) {
        ++run;
        continue;
      }
      if (run > 1) {
        CHECK(run >= 50);
        CHECK(run <= 80);
      }
      run = 0;
    }
  }

  auto unit = inject_long_term(s, 0.3, 1, 1, 4);
  CHECK(unit.eval_mask.sum() == 150.0);
  CHECK_THROWS_AS(inject_long_term(ramp(30, 1), 0.2, 50, 80, 1), Error);
  CHECK_THROWS_AS(inject_long_term(s, 0.2, 80, 50, 1), Error);
}

TEST_CASE("corrupt dispatches on the mode") {
  auto s = ramp(100, 2);
  CorruptionSpec spec{CorruptionMode::kLongTerm, 0.2, 5, 10, 9};
  CHECK(corrupt(s, spec).eval_mask == inject_long_term(s, 0.2, 5, 10, 9).eval_mask);
  spec.mode = CorruptionMode::kRandom;
  CHECK(corrupt(s, spec).eval_mask == inject_random(s, 0.2, 9).eval_mask);
}

TEST_CASE("pairs round-trip through a directory") {
  TempDir dir;
  auto s = ramp(30, 2);
  auto pair = inject_random(s, 0.3, 2);
  save_pair(pair, dir.path.string());
  auto back = load_pair(dir.path.string());
  CHECK(back.eval_mask == pair.eval_mask);
  CHECK(back.corrupted.mask() == pair.corrupted.mask());
  CHECK(oracle::same(back.truth, pair.truth));
}

TEST_CASE("Lorenz-96") {
  Lorenz96Config still;
  still.perturbation = 0.0;
  auto flat = lorenz96(still);
  CHECK((flat.values().array() == 8.0).all());

  Lorenz96Config c;
  c.seed = 4;
  auto a = lorenz96(c), b = lorenz96(c);
  CHECK(a.rows() == 200);
  CHECK(a.vars() == 5);
  CHECK(a.values() == b.values());
  CHECK(a.timestamps() == Eigen::VectorXd::LinSpaced(200, 0, 199));
  CHECK(a.observed_count() == 1000);
  CHECK(a.values().row(199).cwiseAbs().maxCoeff() > 1.0);

  Eigen::VectorXd x(5);
  x << 8, 8, 8, 8, 8;
  CHECK(lorenz96_derivative(x, 8.0).isZero(0.0));
  x << 1, 2, 3, 4, 5;
  // dx_0 = (x_1 - x_3) x_4 - x_0 + F with cyclic indices.
  CHECK(lorenz96_derivative(x, 8.0)[0] == (2 - 4) * 5 - 1 + 8);

  CHECK_THROWS_AS(lorenz96({.dims = 3}), Error);
  CHECK(error_of([] { lorenz96({.steps = 400, .dt = 5.0, .seed = 1}); }).find("smaller dt") != std::string::npos);
}

TEST_CASE("RK4 converges at fourth order") {
  Eigen::VectorXd x0(5);
  x0 << 8.5, 7.9, 8.2, 6.0, 9.1;
  auto integrate = [&](double dt, int steps) {
    Eigen::VectorXd x = x0;
    for (int i = 0; i < steps; ++i) x = lorenz96_rk4_step(x, 8.0, dt);
    return x;
  };
  const double T = 0.5;
  const Eigen::VectorXd exact = integrate(T / 3200, 3200);
  const double e1 = (integrate(T / 50, 50) - exact).cwiseAbs().maxCoeff();
  const double e2 = (integrate(T / 100, 100) - exact).cwiseAbs().maxCoeff();
  CHECK(e1 / e2 > 13.0);
  CHECK(e1 / e2 < 19.0);
}

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
#include <random>
#include <string>

#include <doctest.h>

#include "mrbf/bank_io.hpp"
#include "mrbf/grbf.hpp"
#include "oracles.hpp"

using namespace mrbf;

namespace {

GrbfBank random_bank(std::mt19937_64& rng, Eigen::Index k, Eigen::Index m) {
  std::uniform_real_distribution<double> c(0.0, 20.0), s(0.1, 10.0), w(-2.0, 2.0);
  GrbfBank bank(m);
  Eigen::VectorXd cc(k), ss(k);
  Eigen::MatrixXd ww(k, m);
  for (Eigen::Index i = 0; i < k; ++i) {
    cc[i] = c(rng);
    ss[i] = s(rng);
    for (Eigen::Index j = 0; j < m; ++j) ww(i, j) = w(rng);
  }
  bank.append_stage(cc, ss, ww);
  return bank;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mrbf_test_" + name)).string();
}

}  // namespace

TEST_CASE("grbf_eval") {
  CHECK(grbf_eval(5.0, 2.0, 5.0) == 1.0);
  CHECK(grbf_eval(0.0, 4.0, 2.0) == doctest::Approx(0.367879441171).epsilon(1e-12));
  CHECK(grbf_eval(0.0, 1.0, 3.0) == grbf_eval(0.0, 1.0, -3.0));
  CHECK_THROWS_AS(grbf_eval(0.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(grbf_eval(0.0, -1.0, 1.0), Error);
  CHECK(grbf_eval(0.0f, 4.0f, 2.0f) == doctest::Approx(0.367879441171).epsilon(1e-6));
  CHECK(grbf_eval<long double>(0.0L, 4.0L, 2.0L) == doctest::Approx(0.367879441171).epsilon(1e-12));
}

TEST_CASE("cf_eval") {
  GrbfBank zero(2);
  zero.append_stage(Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(1, 1, 1), Eigen::MatrixXd::Zero(3, 2));
  CHECK(cf_eval(zero, 0.7, 1) == 0.0);

  GrbfBank one(1);
  one.append_stage(Eigen::VectorXd::Constant(1, 4.0), Eigen::VectorXd::Constant(1, 2.0),
                   Eigen::MatrixXd::Constant(1, 1, 3.5));
  CHECK(cf_eval(one, 4.0, 0) == 3.5);

  GrbfBank two(1);
  two.append_stage(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 2));
  const double want = oracle::cf({0, 1}, {1, 1}, {1, 2}, 0.5);
  CHECK(cf_eval(two, 0.5, 0) == doctest::Approx(want).epsilon(1e-15));
  CHECK(cf_eval(two, 0.5, 0) == doctest::Approx(2.33640).epsilon(1e-5));

  CHECK_THROWS_AS(cf_eval(two, 0.5, 1), Error);
  CHECK_THROWS_AS(cf_eval(two, 0.5, -1), Error);
}

TEST_CASE("cf_eval_series agrees with pointwise evaluation") {
  std::mt19937_64 rng(1);
  auto bank = random_bank(rng, 6, 3);

  Eigen::VectorXd t1 = Eigen::VectorXd::Constant(1, 7.3);
  const Eigen::MatrixXd one = cf_eval_series(bank, t1);
  for (Eigen::Index m = 0; m < 3; ++m) CHECK(one(0, m) == doctest::Approx(cf_eval(bank, 7.3, m)).epsilon(1e-14));

  Eigen::VectorXd t(3);
  t << 1.5, 9.0, 14.25;
  const Eigen::MatrixXd full = cf_eval_series(bank, t);
  for (Eigen::Index n = 0; n < 3; ++n)
    for (Eigen::Index m = 0; m < 3; ++m) CHECK(std::abs(full(n, m) - cf_eval(bank, t[n], m)) < 1e-12);

  Eigen::VectorXd perm(3);
  perm << 14.25, 1.5, 9.0;
  const Eigen::MatrixXd p = cf_eval_series(bank, perm);
  CHECK(p.row(0) == full.row(2));
  CHECK(p.row(1) == full.row(0));
  CHECK(p.row(2) == full.row(1));
}

TEST_CASE("pruned evaluation matches the unpruned sum") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto bank = random_bank(rng, 10, 1);
    bank.sigmas *= 0.01;  // narrow bases make most responses prune
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(400, -5.0, 25.0);
    const Eigen::MatrixXd got = cf_eval_series(bank, t);
    std::vector<double> c(bank.centers.data(), bank.centers.data() + 10);
    std::vector<double> s(bank.sigmas.data(), bank.sigmas.data() + 10);
    std::vector<double> w(bank.weights.data(), bank.weights.data() + 10);
    for (Eigen::Index n = 0; n < t.size(); ++n) REQUIRE(std::abs(got(n, 0) - oracle::cf(c, s, w, t[n])) < 1e-8);
  }
}

TEST_CASE("second differences stay finite for tiny widths") {
  std::mt19937_64 rng(4);
  auto bank = random_bank(rng, 8, 2);
  bank.sigmas[0] = 1e-12;
  bank.sigmas[1] = 1e-8;
  const double h = 1e-3;
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(2001, 0.0, 20.0);
  Eigen::VectorXd lo = t.array() - h, hi = t.array() + h;
  const Eigen::MatrixXd d2 = (cf_eval_series(bank, hi) - 2.0 * cf_eval_series(bank, t) + cf_eval_series(bank, lo)) /
                             (h * h);
  CHECK(d2.allFinite());
}

TEST_CASE("weights of one variable do not touch another") {
  std::mt19937_64 rng(5);
  auto bank = random_bank(rng, 5, 3);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(50, 0.0, 20.0);
  const Eigen::MatrixXd before = cf_eval_series(bank, t);
  bank.weights.col(1).setRandom();
  const Eigen::MatrixXd after = cf_eval_series(bank, t);
  CHECK(after.col(0) == before.col(0));
  CHECK(after.col(2) == before.col(2));
  CHECK(after.col(1) != before.col(1));
}

TEST_CASE("impute_with_cf") {
  std::mt19937_64 rng(6);
  auto bank = random_bank(rng, 4, 2);
  auto s = oracle::random_series(rng, 12, 2, 1.0);
  auto same = impute_with_cf(s, bank);
  CHECK(same.values() == s.values());

  auto empty = new_series(s.timestamps(), s.values(), Eigen::MatrixXd::Zero(12, 2));
  auto all = impute_with_cf(empty, bank);
  CHECK(all.values() == cf_eval_series(bank, s.timestamps()));
  CHECK((all.mask().array() == 1.0).all());

  auto mixed = oracle::random_series(rng, 12, 2, 0.5);
  auto got = impute_with_cf(mixed, bank);
  for (Eigen::Index n = 0; n < 12; ++n)
    for (Eigen::Index m = 0; m < 2; ++m) {
      const double want = mixed.observed(n, m) ? mixed.values()(n, m) : cf_eval(bank, mixed.timestamps()[n], m);
      CHECK(got.values()(n, m) == doctest::Approx(want).epsilon(1e-13));
      if (mixed.observed(n, m)) CHECK(got.values()(n, m) == mixed.values()(n, m));
    }

  auto three = oracle::random_series(rng, 12, 3, 0.5);
  CHECK_THROWS_AS(impute_with_cf(three, bank), Error);
}

TEST_CASE("ContinuousFunction reads the bank on the data scale") {
  std::mt19937_64 rng(7);
  ContinuousFunction cf{random_bank(rng, 4, 2), {"a", "b"}, NormalizationStats{Eigen::Vector2d(10, -1), Eigen::Vector2d(2, 0.5)}};
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(5, 0, 10);
  const Eigen::MatrixXd raw = cf_eval_series(cf.bank, t);
  const Eigen::MatrixXd got = cf.evaluate(t);
  for (Eigen::Index n = 0; n < 5; ++n) {
    CHECK(got(n, 0) == doctest::Approx(raw(n, 0) * 2 + 10));
    CHECK(got(n, 1) == doctest::Approx(raw(n, 1) * 0.5 - 1));
  }
  auto s = oracle::random_series(rng, 5, 2, 0.5);
  auto imp = cf.impute(s);
  for (Eigen::Index n = 0; n < 5; ++n)
    for (Eigen::Index m = 0; m < 2; ++m)
      if (s.observed(n, m)) CHECK(imp.values()(n, m) == s.values()(n, m));
}

TEST_CASE("bank files round-trip bit for bit") {
  std::mt19937_64 rng(8);
  ContinuousFunction cf{random_bank(rng, 5, 2), {"u", "v"}, NormalizationStats{Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(1.0 / 3, 7.0)}};
  cf.bank.append_stage(Eigen::Vector2d(1.0 / 7, 2), Eigen::Vector2d(0.3, 1e-8), Eigen::MatrixXd::Random(2, 2));
  const auto path = temp_path("bank.json");
  save_bank(cf, path);
  auto back = load_bank(path);
  CHECK(back.bank.centers == cf.bank.centers);
  CHECK(back.bank.sigmas == cf.bank.sigmas);
  CHECK(back.bank.weights == cf.bank.weights);
  CHECK(back.bank.stage_boundaries == cf.bank.stage_boundaries);
  CHECK(back.names == cf.names);
  REQUIRE(back.stats);
  CHECK(back.stats->mean == cf.stats->mean);
  CHECK(back.stats->std == cf.stats->std);

  cf.stats.reset();
  save_bank(cf, path);
  CHECK_FALSE(load_bank(path).stats);

  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path);
    out << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(load_bank(path), Error);

  auto doc = bank_to_json(cf);
  doc["version"] = 99;
  try {
    bank_from_json(doc);
    FAIL("expected a version error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("version 99") != std::string::npos);
  }
  doc["version"] = kBankFormatVersion;
  doc["sigmas"][0] = -1.0;
  CHECK_THROWS_AS(bank_from_json(doc), Error);
  CHECK_THROWS_AS(load_bank(temp_path("does_not_exist.json")), Error);
  std::filesystem::remove(path);
}

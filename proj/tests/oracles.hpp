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

// Independent reference implementations used by the unit and acceptance tests.
// They work on plain std::vector data and share no code with the library.
#ifndef MRBF_TESTS_ORACLES_HPP_
#define MRBF_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mrbf/series.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;  // [row][var]

inline Grid to_grid(const Eigen::MatrixXd& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

// Elapsed time since the previous observation, written out case by case.
inline Grid time_gap(const std::vector<double>& t, const Grid& mask) {
  const std::size_t n = t.size();
  const std::size_t d = n ? mask[0].size() : 0;
  Grid delta(n, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 1; i < n; ++i) {
      if (mask[i - 1][j] == 1.0)
        delta[i][j] = t[i] - t[i - 1];
      else
        delta[i][j] = delta[i - 1][j] + (t[i] - t[i - 1]);
    }
  }
  return delta;
}

// sum_k w_k exp(-(t - c_k)^2 / s_k) without pruning.
inline double cf(const std::vector<double>& c, const std::vector<double>& s, const std::vector<double>& w,
                 double t) {
  double sum = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) sum += w[k] * std::exp(-(t - c[k]) * (t - c[k]) / s[k]);
  return sum;
}

// Masked mean squared error of a single-stage bank against a target.
inline double stage_loss(const std::vector<double>& c, const std::vector<double>& s, const Grid& w /*[k][m]*/,
                         const std::vector<double>& t, const Grid& target, const Grid& mask) {
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t m = 0; m < mask[i].size(); ++m) {
      if (mask[i][m] != 1.0) continue;
      double f = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) f += w[k][m] * std::exp(-(t[i] - c[k]) * (t[i] - c[k]) / s[k]);
      sum += (f - target[i][m]) * (f - target[i][m]);
      count += 1.0;
    }
  }
  return sum / count;
}

// Brute-force KNN imputation: for every missing cell, score all rows that
// observe the variable, sort by (distance, row) and average the first k.
inline Grid knn(const Grid& values, const Grid& mask, std::size_t k) {
  const std::size_t n = values.size();
  const std::size_t d = n ? values[0].size() : 0;
  Grid out = values;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (mask[i][j] == 1.0) continue;
      std::vector<std::pair<double, std::size_t>> cand;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i || mask[r][j] != 1.0) continue;
        double ss = 0.0;
        int shared = 0;
        for (std::size_t q = 0; q < d; ++q) {
          if (mask[i][q] == 1.0 && mask[r][q] == 1.0) {
            ss += (values[i][q] - values[r][q]) * (values[i][q] - values[r][q]);
            ++shared;
          }
        }
        const double dist = shared ? std::sqrt(ss / shared) : std::numeric_limits<double>::infinity();
        cand.emplace_back(dist, r);
      }
      std::sort(cand.begin(), cand.end());
      const std::size_t take = std::min(k, cand.size());
      double sum = 0.0;
      for (std::size_t q = 0; q < take; ++q) sum += values[cand[q].second][j];
      out[i][j] = sum / static_cast<double>(take);
    }
  }
  return out;
}

// Random strictly increasing timestamps, values in [-3, 3] and a Bernoulli mask.
inline mrbf::MultivariateSeries random_series(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d,
                                              double p_observed, bool keep_two = true) {
  std::uniform_real_distribution<double> gap(0.25, 2.0), val(-3.0, 3.0), coin(0.0, 1.0);
  Eigen::VectorXd t(n);
  double now = val(rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    now += gap(rng);
    t[i] = now;
  }
  Eigen::MatrixXd v(n, d), m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      v(i, j) = val(rng);
      m(i, j) = coin(rng) < p_observed ? 1.0 : 0.0;
    }
  if (keep_two && n >= 2)
    for (Eigen::Index j = 0; j < d; ++j) m(0, j) = m(n - 1, j) = 1.0;
  return mrbf::new_series(t, v, m);
}

// Equality that treats NaN == NaN.
inline bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const bool na = std::isnan(a(i, j)), nb = std::isnan(b(i, j));
      if (na != nb || (!na && a(i, j) != b(i, j))) return false;
    }
  return true;
}

}  // namespace oracle

#endif  // MRBF_TESTS_ORACLES_HPP_

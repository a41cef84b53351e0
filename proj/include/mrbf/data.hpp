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

// CSV ingestion, missingness injection and the Lorenz-96 generator.
//
// CSV layout: header `timestamp,<var>,...`, one row per time step, an empty
// cell marks a missing value. An optional mask CSV of the same shape (0/1
// cells, same header) overrides emptiness.

#ifndef MRBF_DATA_HPP_
#define MRBF_DATA_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "mrbf/series.hpp"

namespace mrbf {

MultivariateSeries load_csv(const std::string& path, const std::optional<std::string>& mask_path = std::nullopt);
void save_csv(const MultivariateSeries& series, const std::string& path);

// Dense matrix CSV with the same header layout; NaN cells are written empty.
void save_matrix_csv(const Eigen::VectorXd& timestamps, const Eigen::MatrixXd& values,
                     const std::vector<std::string>& names, const std::string& path);

enum class CorruptionMode { kRandom, kLongTerm };

struct CorruptionSpec {
  CorruptionMode mode = CorruptionMode::kRandom;
  double rate = 0.3;
  Eigen::Index term_min = 1;
  Eigen::Index term_max = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruthPair {
  MultivariateSeries corrupted;
  Eigen::MatrixXd truth;      // original values, NaN where never observed
  Eigen::MatrixXd eval_mask;  // 1 where hidden by the corruption
};

// Hides round(rate * #observed) observed cells chosen uniformly without
// replacement, never the last observation of a variable.
GroundTruthPair inject_random(const MultivariateSeries& series, double rate, std::uint64_t seed);

// Places non-overlapping runs with lengths uniform in [term_min, term_max] on
// randomly chosen variables until the budget round(rate * #observed) is spent;
// a remainder shorter than term_min is hidden as random single cells.
GroundTruthPair inject_long_term(const MultivariateSeries& series, double rate, Eigen::Index term_min,
                                 Eigen::Index term_max, std::uint64_t seed);

GroundTruthPair corrupt(const MultivariateSeries& series, const CorruptionSpec& spec);

// Writes corrupted.csv, truth.csv and eval_mask.csv into dir.
void save_pair(const GroundTruthPair& pair, const std::string& dir);
GroundTruthPair load_pair(const std::string& dir);

struct Lorenz96Config {
  Eigen::Index steps = 200;
  Eigen::Index dims = 5;
  double forcing = 8.0;
  double dt = 0.05;
  double perturbation = 0.01;
  // Integration steps discarded before recording starts.
  Eigen::Index burn_in = 0;
  std::uint64_t seed = 0;
};

// dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F, cyclic indices.
Eigen::VectorXd lorenz96_derivative(const Eigen::VectorXd& x, double forcing);
Eigen::VectorXd lorenz96_rk4_step(const Eigen::VectorXd& x, double forcing, double dt);

// Starts from x = F with `perturbation` added to one seeded coordinate and
// records `steps` states dt apart. Timestamps are the sample index n, so
// time gaps count samples. Fully observed.
MultivariateSeries lorenz96(const Lorenz96Config& config);

}  // namespace mrbf

#endif  // MRBF_DATA_HPP_

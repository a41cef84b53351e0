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

// Incomplete multivariate time series: values, observation mask, time gaps,
// z-score normalization and windowing.

#ifndef MRBF_SERIES_HPP_
#define MRBF_SERIES_HPP_

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrbf/error.hpp"

namespace mrbf {

// Value stored at every unobserved cell. Never read by any computation; the
// mask is the single source of truth.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// N timestamps, an N x M value matrix and an N x M {0,1} mask
// (1 = observed). Immutable after construction.
class MultivariateSeries {
 public:
  MultivariateSeries(Eigen::VectorXd timestamps, Eigen::MatrixXd values,
                     Eigen::MatrixXd mask, std::vector<std::string> names = {});

  const Eigen::VectorXd& timestamps() const { return timestamps_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::MatrixXd& mask() const { return mask_; }
  const std::vector<std::string>& names() const { return names_; }

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index vars() const { return values_.cols(); }
  bool observed(Eigen::Index n, Eigen::Index m) const { return mask_(n, m) != 0.0; }
  Eigen::Index observed_count() const;

  // Values with masked cells replaced by zero; safe for masked arithmetic.
  Eigen::MatrixXd filled(double fill = 0.0) const;

  // Rows [begin, begin + length) as a new series.
  MultivariateSeries slice(Eigen::Index begin, Eigen::Index length) const;

  // Time-reversed series with timestamps t'_n = -t_{N-1-n}, so spacings are
  // preserved and the result is again strictly increasing.
  MultivariateSeries reversed() const;

 private:
  Eigen::VectorXd timestamps_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd mask_;
  std::vector<std::string> names_;
};

// Validating constructor with default names x0..x{M-1} when none are given.
MultivariateSeries new_series(Eigen::VectorXd timestamps, Eigen::MatrixXd values,
                              Eigen::MatrixXd mask, std::vector<std::string> names = {});

// Fully observed series.
MultivariateSeries complete_series(Eigen::VectorXd timestamps, Eigen::MatrixXd values,
                                   std::vector<std::string> names = {});

// Per-variable elapsed time since the last observation:
//   delta_0 = 0;  delta_n = t_n - t_{n-1}              if m_{n-1} = 1
//                 delta_n = delta_{n-1} + t_n - t_{n-1} if m_{n-1} = 0
using TimeGapMatrix = Eigen::MatrixXd;

TimeGapMatrix time_gap(const MultivariateSeries& series);

struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // sample (n - 1) standard deviation
};

struct Normalized {
  MultivariateSeries series;
  NormalizationStats stats;
};

// Z-scores every variable over its observed entries. Throws when a variable
// has fewer than two observations or zero spread.
Normalized normalize(const MultivariateSeries& series);
MultivariateSeries normalize(const MultivariateSeries& series, const NormalizationStats& stats);
MultivariateSeries denormalize(const MultivariateSeries& series, const NormalizationStats& stats);

// Column-wise affine maps on a dense matrix (every cell, mask ignored).
Eigen::MatrixXd normalize_values(const Eigen::MatrixXd& values, const NormalizationStats& stats);
Eigen::MatrixXd denormalize_values(const Eigen::MatrixXd& values, const NormalizationStats& stats);

// Consecutive windows of `length` rows starting every `stride` rows; a trailing
// partial window is dropped. stride <= 0 means stride = length.
std::vector<MultivariateSeries> split_windows(const MultivariateSeries& series, Eigen::Index length,
                                              Eigen::Index stride = 0);

}  // namespace mrbf

#endif  // MRBF_SERIES_HPP_

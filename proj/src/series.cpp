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

#include "mrbf/series.hpp"

#include <cmath>
#include <utility>

namespace mrbf {

MultivariateSeries::MultivariateSeries(Eigen::VectorXd timestamps, Eigen::MatrixXd values,
                                       Eigen::MatrixXd mask, std::vector<std::string> names)
    : timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      mask_(std::move(mask)),
      names_(std::move(names)) {
  if (values_.rows() < 1 || values_.cols() < 1) throw Error("series needs N >= 1 and M >= 1");
  if (timestamps_.size() != values_.rows())
    throw Error("dimension mismatch: " + std::to_string(timestamps_.size()) + " timestamps for " +
                std::to_string(values_.rows()) + " rows");
  if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols())
    throw Error("dimension mismatch: mask shape differs from values shape");
  if (names_.empty()) {
    for (Eigen::Index m = 0; m < values_.cols(); ++m) names_.push_back("x" + std::to_string(m));
  }
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
    throw Error("dimension mismatch: " + std::to_string(names_.size()) + " names for " +
                std::to_string(values_.cols()) + " variables");
  for (Eigen::Index n = 0; n < timestamps_.size(); ++n) {
    if (!std::isfinite(timestamps_[n])) throw Error("non-finite timestamp at row " + std::to_string(n));
    if (n > 0 && !(timestamps_[n] > timestamps_[n - 1]))
      throw Error("non-increasing timestamps at row " + std::to_string(n));
  }
  for (Eigen::Index n = 0; n < mask_.rows(); ++n) {
    for (Eigen::Index m = 0; m < mask_.cols(); ++m) {
      const double v = mask_(n, m);
      if (v != 0.0 && v != 1.0)
        throw Error("mask not binary at (" + std::to_string(n) + ", " + std::to_string(m) + ")");
      if (v == 0.0) {
        values_(n, m) = kMissing;
      } else if (!std::isfinite(values_(n, m))) {
        throw Error("non-finite observed value at (" + std::to_string(n) + ", " + std::to_string(m) + ")");
      }
    }
  }
}

Eigen::Index MultivariateSeries::observed_count() const {
  return static_cast<Eigen::Index>(mask_.sum());
}

Eigen::MatrixXd MultivariateSeries::filled(double fill) const {
  return (mask_.array() != 0.0).select(values_, fill);
}

MultivariateSeries MultivariateSeries::slice(Eigen::Index begin, Eigen::Index length) const {
  if (begin < 0 || length < 1 || begin + length > rows()) throw Error("slice out of range");
  return MultivariateSeries(timestamps_.segment(begin, length), values_.middleRows(begin, length),
                            mask_.middleRows(begin, length), names_);
}

MultivariateSeries MultivariateSeries::reversed() const {
  Eigen::VectorXd t = -timestamps_.reverse();
  return MultivariateSeries(std::move(t), values_.colwise().reverse(), mask_.colwise().reverse(),
                            names_);
}

MultivariateSeries new_series(Eigen::VectorXd timestamps, Eigen::MatrixXd values,
                              Eigen::MatrixXd mask, std::vector<std::string> names) {
  return MultivariateSeries(std::move(timestamps), std::move(values), std::move(mask),
                            std::move(names));
}

MultivariateSeries complete_series(Eigen::VectorXd timestamps, Eigen::MatrixXd values,
                                   std::vector<std::string> names) {
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(values.rows(), values.cols());
  return MultivariateSeries(std::move(timestamps), std::move(values), std::move(mask),
                            std::move(names));
}

TimeGapMatrix time_gap(const MultivariateSeries& series) {
  const auto& t = series.timestamps();
  const auto& mask = series.mask();
  TimeGapMatrix delta = TimeGapMatrix::Zero(series.rows(), series.vars());
  for (Eigen::Index n = 1; n < series.rows(); ++n) {
    const double step = t[n] - t[n - 1];
    for (Eigen::Index m = 0; m < series.vars(); ++m) {
      delta(n, m) = mask(n - 1, m) != 0.0 ? step : delta(n - 1, m) + step;
    }
  }
  return delta;
}

Normalized normalize(const MultivariateSeries& series) {
  const Eigen::Index vars = series.vars();
  NormalizationStats stats{Eigen::VectorXd(vars), Eigen::VectorXd(vars)};
  for (Eigen::Index m = 0; m < vars; ++m) {
    double count = 0.0, sum = 0.0;
    for (Eigen::Index n = 0; n < series.rows(); ++n) {
      if (series.observed(n, m)) {
        count += 1.0;
        sum += series.values()(n, m);
      }
    }
    const std::string& name = series.names()[static_cast<std::size_t>(m)];
    if (count < 2.0) throw Error("variable '" + name + "' has fewer than two observations");
    const double mean = sum / count;
    double ss = 0.0;
    for (Eigen::Index n = 0; n < series.rows(); ++n) {
      if (series.observed(n, m)) ss += (series.values()(n, m) - mean) * (series.values()(n, m) - mean);
    }
    const double sd = std::sqrt(ss / (count - 1.0));
    if (!(sd > 0.0)) throw Error("zero spread in variable '" + name + "'");
    stats.mean[m] = mean;
    stats.std[m] = sd;
  }
  return {normalize(series, stats), stats};
}

Eigen::MatrixXd normalize_values(const Eigen::MatrixXd& values, const NormalizationStats& stats) {
  if (values.cols() != stats.mean.size()) throw Error("variable-count mismatch with normalization stats");
  return ((values.rowwise() - stats.mean.transpose()).array().rowwise() / stats.std.transpose().array())
      .matrix();
}

Eigen::MatrixXd denormalize_values(const Eigen::MatrixXd& values, const NormalizationStats& stats) {
  if (values.cols() != stats.mean.size()) throw Error("variable-count mismatch with normalization stats");
  return ((values.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
          stats.mean.transpose());
}

MultivariateSeries normalize(const MultivariateSeries& series, const NormalizationStats& stats) {
  return MultivariateSeries(series.timestamps(), normalize_values(series.filled(), stats),
                            series.mask(), series.names());
}

MultivariateSeries denormalize(const MultivariateSeries& series, const NormalizationStats& stats) {
  return MultivariateSeries(series.timestamps(), denormalize_values(series.filled(), stats),
                            series.mask(), series.names());
}

std::vector<MultivariateSeries> split_windows(const MultivariateSeries& series, Eigen::Index length,
                                              Eigen::Index stride) {
  if (length < 1) throw Error("window length must be >= 1");
  if (length > series.rows())
    throw Error("window length " + std::to_string(length) + " exceeds series length " +
                std::to_string(series.rows()));
  if (stride <= 0) stride = length;
  std::vector<MultivariateSeries> windows;
  for (Eigen::Index begin = 0; begin + length <= series.rows(); begin += stride) {
    windows.push_back(series.slice(begin, length));
  }
  return windows;
}

}  // namespace mrbf

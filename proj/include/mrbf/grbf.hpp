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

// Shared Gaussian RBF bank: K centers and widths common to all variables, one
// weight column per variable. Each column realizes a continuous function
//
//   CF^m(t) = sum_k w_k^m exp(-(t - c_k)^2 / sigma_k)
//
// with sigma in squared-time units.

#ifndef MRBF_GRBF_HPP_
#define MRBF_GRBF_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrbf/error.hpp"
#include "mrbf/series.hpp"

namespace mrbf {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Lower bound applied to every sigma after an update.
inline constexpr double kSigmaFloor = 1e-8;

// Basis responses below exp(-60) (about 1e-26) are treated as exactly zero.
inline constexpr double kPruneExponent = 60.0;

// Half-open range [begin, end) of basis indices.
struct StageRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  Eigen::Index size() const { return end - begin; }
};

template <typename Scalar>
struct BasicGrbfBank {
  VectorX<Scalar> centers;
  VectorX<Scalar> sigmas;
  MatrixX<Scalar> weights;  // K x M
  // Stage s owns bases [stage_boundaries[s], stage_boundaries[s + 1]).
  std::vector<Eigen::Index> stage_boundaries{0};

  BasicGrbfBank() = default;
  explicit BasicGrbfBank(Eigen::Index vars) : weights(0, vars) {}

  Eigen::Index size() const { return centers.size(); }
  Eigen::Index vars() const { return weights.cols(); }
  Eigen::Index stages() const { return static_cast<Eigen::Index>(stage_boundaries.size()) - 1; }
  StageRange stage(Eigen::Index s) const {
    return {stage_boundaries.at(static_cast<std::size_t>(s)),
            stage_boundaries.at(static_cast<std::size_t>(s + 1))};
  }

  // Appends a new stage of bases.
  StageRange append_stage(const VectorX<Scalar>& c, const VectorX<Scalar>& s, const MatrixX<Scalar>& w) {
    if (c.size() != s.size() || w.rows() != c.size() || w.cols() != vars())
      throw Error("stage shape mismatch");
    const Eigen::Index k0 = size();
    centers.conservativeResize(k0 + c.size());
    sigmas.conservativeResize(k0 + c.size());
    weights.conservativeResize(k0 + c.size(), Eigen::NoChange);
    centers.tail(c.size()) = c;
    sigmas.tail(c.size()) = s;
    weights.bottomRows(c.size()) = w;
    stage_boundaries.push_back(size());
    return {k0, size()};
  }

  void validate() const {
    if (sigmas.size() != centers.size() || weights.rows() != centers.size())
      throw Error("bank shape mismatch");
    if (stage_boundaries.empty() || stage_boundaries.front() != 0 || stage_boundaries.back() != size())
      throw Error("bank stage boundaries do not cover the bank");
    for (std::size_t i = 1; i < stage_boundaries.size(); ++i)
      if (stage_boundaries[i] < stage_boundaries[i - 1]) throw Error("bank stage boundaries decrease");
    for (Eigen::Index k = 0; k < size(); ++k)
      if (!(sigmas[k] > Scalar(0))) throw Error("bank sigma " + std::to_string(k) + " is not positive");
  }
};

using GrbfBank = BasicGrbfBank<double>;

template <typename Scalar>
Scalar grbf_eval(Scalar center, Scalar sigma, Scalar t) {
  using std::exp;
  if (!(sigma > Scalar(0))) throw Error("grbf sigma must be positive");
  const Scalar d = t - center;
  return exp(-d * d / sigma);
}

// N x K matrix of basis responses, entry (n, k) = phi_k(t_n).
template <typename Scalar>
MatrixX<Scalar> basis_matrix(const VectorX<Scalar>& centers, const VectorX<Scalar>& sigmas,
                             const VectorX<Scalar>& timestamps) {
  MatrixX<Scalar> phi(timestamps.size(), centers.size());
  for (Eigen::Index k = 0; k < centers.size(); ++k) {
    const auto d = (timestamps.array() - centers[k]);
    const auto arg = (-(d * d) / sigmas[k]).eval();
    // exp() of deeply negative arguments takes libm's slow underflow path.
    phi.col(k) = (arg < Scalar(-kPruneExponent)).select(Scalar(0), arg.exp()).matrix();
  }
  return phi;
}

template <typename Scalar>
Scalar cf_eval(const BasicGrbfBank<Scalar>& bank, Scalar t, Eigen::Index var) {
  if (var < 0 || var >= bank.vars()) throw Error("variable index out of range");
  Scalar sum(0);
  for (Eigen::Index k = 0; k < bank.size(); ++k)
    sum += bank.weights(k, var) * grbf_eval(bank.centers[k], bank.sigmas[k], t);
  return sum;
}

// N x M matrix of CF^m(t_n).
template <typename Scalar>
MatrixX<Scalar> cf_eval_series(const BasicGrbfBank<Scalar>& bank, const VectorX<Scalar>& timestamps) {
  if (bank.size() == 0) return MatrixX<Scalar>::Zero(timestamps.size(), bank.vars());
  return basis_matrix(bank.centers, bank.sigmas, timestamps) * bank.weights;
}

// Contribution of one stage's bases only.
template <typename Scalar>
MatrixX<Scalar> cf_eval_stage(const BasicGrbfBank<Scalar>& bank, StageRange range,
                              const VectorX<Scalar>& timestamps) {
  const VectorX<Scalar> c = bank.centers.segment(range.begin, range.size());
  const VectorX<Scalar> s = bank.sigmas.segment(range.begin, range.size());
  return basis_matrix(c, s, timestamps) * bank.weights.middleRows(range.begin, range.size());
}

// Observed cells keep their values; every missing cell takes CF^m(t_n).
// The bank must be on the same scale as the series.
MultivariateSeries impute_with_cf(const MultivariateSeries& series, const GrbfBank& bank);

// A fitted bank together with what is needed to read it on the data's scale.
struct ContinuousFunction {
  GrbfBank bank;
  std::vector<std::string> names;
  // Present when the bank was fit on z-scored data.
  std::optional<NormalizationStats> stats;

  // CF values on the original data scale.
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& timestamps) const;
  // Imputation on the original data scale; observed cells copied verbatim.
  MultivariateSeries impute(const MultivariateSeries& series) const;
};

}  // namespace mrbf

#endif  // MRBF_GRBF_HPP_

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

// Incremental training of the shared GRBF bank.
//
// Stage 0 fits the observed data. Every further stage fits the residual left
// by all earlier stages with a fresh block of bases while earlier stages stay
// frozen. Fitting stops once the observed-cell MAPE of the cumulative function
// drops to the threshold or the stage cap is reached.

#ifndef MRBF_RBFNN_HPP_
#define MRBF_RBFNN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mrbf/grbf.hpp"
#include "mrbf/series.hpp"

namespace mrbf {

enum class SigmaInit { kTimeGapMean, kRandomUnitNormalAbs };
enum class BankMode { kShared, kPerVariable };

struct TrainConfig {
  // Bases added per stage. In per-variable mode each variable's bank gets
  // ceil(k_per_stage / M) of them.
  Eigen::Index k_per_stage = 32;
  Eigen::Index max_stages = 4;
  double mape_threshold = 0.05;
  double lr = 1e-2;
  Eigen::Index epochs_per_stage = 2000;
  SigmaInit sigma_init = SigmaInit::kTimeGapMean;
  BankMode bank_mode = BankMode::kShared;
  std::uint64_t seed = 0;
  // Fit on z-scored data; stage metrics are always reported on the input scale.
  bool normalize = true;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& doc);

// Current regression targets (N x M); cells where the series is unobserved
// hold zero and are never used.
using ResidualTarget = Eigen::MatrixXd;

ResidualTarget initial_target(const MultivariateSeries& series);

struct CenterChoice {
  Eigen::VectorXd centers;
  std::vector<Eigen::Index> rows;  // source row of each center
};

// Picks the K timestamps with the largest |target| (max over observed
// variables), earlier timestamps first on ties. When K exceeds the number of
// observed timestamps the ranking wraps and the r-th repeat is shifted by
// r * jitter.
CenterChoice init_centers(const ResidualTarget& target, const MultivariateSeries& series,
                          Eigen::Index k, double jitter = 0.0);

// w_k^m = target at the center's row, 0 where variable m is unobserved there.
Eigen::MatrixXd init_weights(const ResidualTarget& target, const MultivariateSeries& series,
                             const CenterChoice& choice);

// Time-gap mode: every sigma is the mean of delta over n > 0 and all
// variables. Random mode: |N(0, 1)| + 1e-3 from a seeded generator.
Eigen::VectorXd init_sigmas(const TimeGapMatrix& delta, SigmaInit mode, Eigen::Index k,
                            std::uint64_t seed);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd d_centers;
  Eigen::VectorXd d_sigmas;
  Eigen::MatrixXd d_weights;  // range.size() x M
};

// Masked mean squared error of the stage's function against the target and its
// exact gradient with respect to that stage's parameters. Center and sigma
// gradients sum over variables.
LossGradient stage_loss_gradient(const GrbfBank& bank, StageRange range, const ResidualTarget& target,
                                 const MultivariateSeries& series);

// One full-batch gradient-descent step on the stage's parameters. Returns the
// loss before the step. Throws on a non-finite loss or gradient.
double grad_step(GrbfBank& bank, StageRange range, const ResidualTarget& target,
                 const MultivariateSeries& series, double lr);

struct StageReport {
  Eigen::Index stage = 0;
  Eigen::Index variable = -1;  // -1 for the shared bank
  Eigen::Index bases = 0;
  Eigen::Index epochs = 0;
  double final_loss = 0.0;
  double mape = 0.0;  // cumulative function, observed cells, input scale
  double mae = 0.0;
};

nlohmann::json stage_reports_to_json(const std::vector<StageReport>& reports);

// Appends k_per_stage bases initialized against the target and trains only
// those bases. The report's MAPE/MAE are left for the caller.
StageRange fit_stage(GrbfBank& bank, const ResidualTarget& target, const MultivariateSeries& series,
                     const TrainConfig& config, StageReport* report = nullptr);

// target - stage contribution at observed cells; unobserved cells untouched.
ResidualTarget update_residual(const ResidualTarget& target, const GrbfBank& bank, StageRange range,
                               const MultivariateSeries& series);

// Pooled observed-cell MAPE (|truth| < 1e-8 excluded) and MAE of a prediction.
double observed_mape(const MultivariateSeries& series, const Eigen::MatrixXd& prediction);
double observed_mae(const MultivariateSeries& series, const Eigen::MatrixXd& prediction);

struct FitResult {
  ContinuousFunction cf;
  std::vector<StageReport> reports;
};

FitResult fit(const MultivariateSeries& series, const TrainConfig& config);

}  // namespace mrbf

#endif  // MRBF_RBFNN_HPP_

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

// Imputation metrics, the mean and KNN baselines, and the ablation harness.

#ifndef MRBF_EVAL_HPP_
#define MRBF_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mrbf/data.hpp"
#include "mrbf/grbf.hpp"
#include "mrbf/mirnn.hpp"
#include "mrbf/rbfnn.hpp"
#include "mrbf/series.hpp"

namespace mrbf {

struct Metrics {
  double mae = 0.0;
  double mre = 0.0;   // sum |pred - truth| / sum |truth|
  double mape = 0.0;  // cells with |truth| < 1e-8 excluded
  Eigen::Index count = 0;
  Eigen::Index mape_count = 0;
};

struct ImputationReport {
  Metrics pooled;
  std::vector<Metrics> per_variable;
  std::vector<std::string> names;
  std::string fingerprint;
  double seconds = 0.0;
};

nlohmann::json report_to_json(const ImputationReport& report);

// Metrics over eval_mask = 1 cells on whatever scale the inputs are given in.
ImputationReport evaluate(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth,
                          const Eigen::MatrixXd& eval_mask, std::vector<std::string> names = {});

// Missing cells take the observed mean of their variable.
MultivariateSeries mean_baseline(const MultivariateSeries& series);

// Missing cells take the mean of the k nearest rows that observe the variable.
// Row distance is the RMS difference over variables observed in both rows;
// rows sharing no observed variable rank last, ties by row index.
MultivariateSeries knn_baseline(const MultivariateSeries& series, Eigen::Index k = 10);

enum class Variant { kMim, kMimRandomSigma, kMis, kMisRandomSigma, kMirnn, kMean, kKnn };

std::string variant_key(Variant v);   // CLI spelling, e.g. "mim-rand"
std::string variant_tag(Variant v);   // report tag, e.g. "MIM+RandomSigma"
Variant parse_variant(const std::string& key);

struct AblationOptions {
  TrainConfig rbf;
  MirnnConfig mirnn;
  Eigen::Index knn_k = 10;
  // When set, results.json, summary.csv and plot data are written here.
  std::optional<std::string> out_dir;
};

struct AblationResult {
  Variant variant = Variant::kMean;
  std::uint64_t seed = 0;
  ImputationReport report;
  Eigen::MatrixXd imputed;
};

nlohmann::json ablation_to_json(const std::vector<AblationResult>& results);

// Runs every variant for every seed on the same pair, in order.
std::vector<AblationResult> run_ablation(const GroundTruthPair& pair, const std::vector<Variant>& variants,
                                         const std::vector<std::uint64_t>& seeds, const AblationOptions& options);

// Mean pooled MAE per variant over the results.
double mean_mae(const std::vector<AblationResult>& results, Variant variant);

struct PlotRow {
  std::string kind;  // "cf", "observed" or "eval"
  std::string variable;
  double t = 0.0;
  double value = 0.0;
  double truth = kMissing;  // eval rows only
};

// Tidy CSV `kind,variable,t,value,truth`: CF sampled at 10x the timestamp
// density (every original timestamp included), one row per observed cell and
// one per evaluation cell with its imputed and true value.
void emit_plot_data(const MultivariateSeries& series, const ContinuousFunction& cf, const Eigen::MatrixXd& imputed,
                    const Eigen::MatrixXd& truth, const Eigen::MatrixXd& eval_mask, const std::string& path);
std::vector<PlotRow> load_plot_data(const std::string& path);

// The 10x sampling grid used by emit_plot_data.
Eigen::VectorXd dense_grid(const Eigen::VectorXd& timestamps, int density = 10);

}  // namespace mrbf

#endif  // MRBF_EVAL_HPP_

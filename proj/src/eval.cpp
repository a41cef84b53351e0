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

#include "mrbf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "mrbf/bank_io.hpp"

namespace mrbf {

namespace {

constexpr double kMapeGuard = 1e-8;

struct MetricSums {
  double abs_err = 0.0;
  double abs_truth = 0.0;
  double ape = 0.0;
  Eigen::Index count = 0;
  Eigen::Index mape_count = 0;

  void add(double pred, double truth) {
    const double err = std::abs(pred - truth);
    abs_err += err;
    abs_truth += std::abs(truth);
    ++count;
    if (std::abs(truth) >= kMapeGuard) {
      ape += err / std::abs(truth);
      ++mape_count;
    }
  }

  Metrics finish() const {
    Metrics m;
    m.count = count;
    m.mape_count = mape_count;
    if (count > 0) m.mae = abs_err / static_cast<double>(count);
    m.mre = abs_truth > 0.0 ? abs_err / abs_truth : (abs_err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (mape_count > 0) m.mape = ape / static_cast<double>(mape_count);
    return m;
  }
};

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"mae", m.mae}, {"mre", m.mre}, {"mape", m.mape}, {"count", m.count}, {"mape_count", m.mape_count}};
}

std::string hex_fingerprint(const std::string& text) {
  std::ostringstream out;
  out << std::hex << std::hash<std::string>{}(text);
  return out.str();
}

}  // namespace

nlohmann::json report_to_json(const ImputationReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t m = 0; m < report.per_variable.size(); ++m) {
    auto entry = metrics_to_json(report.per_variable[m]);
    entry["variable"] = m < report.names.size() ? report.names[m] : std::to_string(m);
    per.push_back(entry);
  }
  return {{"pooled", metrics_to_json(report.pooled)},
          {"per_variable", per},
          {"fingerprint", report.fingerprint},
          {"seconds", report.seconds}};
}

ImputationReport evaluate(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth, const Eigen::MatrixXd& eval_mask,
                          std::vector<std::string> names) {
  if (imputed.rows() != truth.rows() || imputed.cols() != truth.cols() || eval_mask.rows() != truth.rows() ||
      eval_mask.cols() != truth.cols())
    throw Error("shape mismatch between imputed, truth and eval_mask");
  MetricSums pooled;
  std::vector<MetricSums> per(static_cast<std::size_t>(truth.cols()));
  for (Eigen::Index m = 0; m < truth.cols(); ++m) {
    for (Eigen::Index n = 0; n < truth.rows(); ++n) {
      if (eval_mask(n, m) == 0.0) continue;
      if (!std::isfinite(truth(n, m))) throw Error("ground truth undefined at an evaluation cell");
      if (!std::isfinite(imputed(n, m))) throw Error("non-finite imputed value at an evaluation cell");
      pooled.add(imputed(n, m), truth(n, m));
      per[static_cast<std::size_t>(m)].add(imputed(n, m), truth(n, m));
    }
  }
  if (pooled.count == 0) throw Error("empty evaluation mask");
  ImputationReport report;
  report.pooled = pooled.finish();
  for (const auto& s : per) report.per_variable.push_back(s.finish());
  if (names.empty())
    for (Eigen::Index m = 0; m < truth.cols(); ++m) names.push_back("x" + std::to_string(m));
  report.names = std::move(names);
  return report;
}

MultivariateSeries mean_baseline(const MultivariateSeries& series) {
  Eigen::MatrixXd out = series.filled();
  for (Eigen::Index m = 0; m < series.vars(); ++m) {
    const double count = series.mask().col(m).sum();
    if (count == 0.0)
      throw Error("variable '" + series.names()[static_cast<std::size_t>(m)] + "' has no observations to average");
    const double mean = out.col(m).sum() / count;
    for (Eigen::Index n = 0; n < series.rows(); ++n)
      if (!series.observed(n, m)) out(n, m) = mean;
  }
  return complete_series(series.timestamps(), std::move(out), series.names());
}

MultivariateSeries knn_baseline(const MultivariateSeries& series, Eigen::Index k) {
  if (k <= 0) throw Error("k must be positive");
  const Eigen::Index rows = series.rows();
  const Eigen::Index vars = series.vars();
  const Eigen::MatrixXd x = series.filled();
  const MultivariateSeries fallback = mean_baseline(series);
  Eigen::MatrixXd out = fallback.values();
  std::vector<double> dist(static_cast<std::size_t>(rows));
  std::vector<Eigen::Index> candidates;

  for (Eigen::Index i = 0; i < rows; ++i) {
    if (series.mask().row(i).sum() == static_cast<double>(vars)) continue;
    for (Eigen::Index j = 0; j < rows; ++j) {
      const Eigen::ArrayXd shared = series.mask().row(i).array() * series.mask().row(j).array();
      const double count = shared.sum();
      dist[static_cast<std::size_t>(j)] =
          count > 0.0 ? std::sqrt((shared * (x.row(i) - x.row(j)).array().transpose().square()).sum() / count)
                      : std::numeric_limits<double>::infinity();
    }
    for (Eigen::Index m = 0; m < vars; ++m) {
      if (series.observed(i, m)) continue;
      candidates.clear();
      for (Eigen::Index j = 0; j < rows; ++j)
        if (j != i && series.observed(j, m)) candidates.push_back(j);
      if (candidates.empty()) continue;  // keeps the mean fallback
      std::stable_sort(candidates.begin(), candidates.end(), [&](Eigen::Index a, Eigen::Index b) {
        return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
      });
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
      double sum = 0.0;
      for (std::size_t c = 0; c < take; ++c) sum += x(candidates[c], m);
      out(i, m) = sum / static_cast<double>(take);
    }
  }
  return complete_series(series.timestamps(), std::move(out), series.names());
}

std::string variant_key(Variant v) {
  switch (v) {
    case Variant::kMim: return "mim";
    case Variant::kMimRandomSigma: return "mim-rand";
    case Variant::kMis: return "mis";
    case Variant::kMisRandomSigma: return "mis-rand";
    case Variant::kMirnn: return "mirnn";
    case Variant::kMean: return "mean";
    case Variant::kKnn: return "knn";
  }
  return "unknown";
}

std::string variant_tag(Variant v) {
  switch (v) {
    case Variant::kMim: return "MIM";
    case Variant::kMimRandomSigma: return "MIM+RandomSigma";
    case Variant::kMis: return "MIS";
    case Variant::kMisRandomSigma: return "MIS+RandomSigma";
    case Variant::kMirnn: return "MIRNN-CF";
    case Variant::kMean: return "Mean";
    case Variant::kKnn: return "KNN";
  }
  return "unknown";
}

Variant parse_variant(const std::string& key) {
  for (Variant v : {Variant::kMim, Variant::kMimRandomSigma, Variant::kMis, Variant::kMisRandomSigma, Variant::kMirnn,
                    Variant::kMean, Variant::kKnn})
    if (variant_key(v) == key) return v;
  throw Error("unknown variant '" + key + "'");
}

nlohmann::json ablation_to_json(const std::vector<AblationResult>& results) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : results) {
    out.push_back({{"variant", variant_tag(r.variant)}, {"seed", r.seed}, {"report", report_to_json(r.report)}});
  }
  return out;
}

std::vector<AblationResult> run_ablation(const GroundTruthPair& pair, const std::vector<Variant>& variants,
                                         const std::vector<std::uint64_t>& seeds, const AblationOptions& options) {
  if (variants.empty()) throw Error("no variants requested");
  if (seeds.empty()) throw Error("no seeds requested");
  const MultivariateSeries& data = pair.corrupted;
  std::optional<std::filesystem::path> out_dir;
  if (options.out_dir) {
    out_dir = *options.out_dir;
    std::filesystem::create_directories(*out_dir);
  }

  std::vector<AblationResult> results;
  for (const std::uint64_t seed : seeds) {
    std::optional<ContinuousFunction> mim_cf;  // reused by the recurrent variant
    for (const Variant variant : variants) {
      const auto start = std::chrono::steady_clock::now();
      nlohmann::json fingerprint = {{"variant", variant_key(variant)}, {"seed", seed}};
      std::optional<ContinuousFunction> cf;
      MultivariateSeries imputed = data;
      switch (variant) {
        case Variant::kMean:
          imputed = mean_baseline(data);
          break;
        case Variant::kKnn:
          imputed = knn_baseline(data, options.knn_k);
          fingerprint["k"] = options.knn_k;
          break;
        case Variant::kMim:
        case Variant::kMimRandomSigma:
        case Variant::kMis:
        case Variant::kMisRandomSigma: {
          TrainConfig config = options.rbf;
          config.seed = seed;
          config.sigma_init = (variant == Variant::kMim || variant == Variant::kMis) ? SigmaInit::kTimeGapMean
                                                                                     : SigmaInit::kRandomUnitNormalAbs;
          config.bank_mode =
              (variant == Variant::kMim || variant == Variant::kMimRandomSigma) ? BankMode::kShared : BankMode::kPerVariable;
          fingerprint["rbf"] = train_config_to_json(config);
          cf = fit(data, config).cf;
          imputed = cf->impute(data);
          if (variant == Variant::kMim) mim_cf = cf;
          break;
        }
        case Variant::kMirnn: {
          TrainConfig config = options.rbf;
          config.seed = seed;
          config.sigma_init = SigmaInit::kTimeGapMean;
          config.bank_mode = BankMode::kShared;
          if (!mim_cf) mim_cf = fit(data, config).cf;
          cf = mim_cf;
          MirnnConfig mirnn = options.mirnn;
          mirnn.seed = seed;
          fingerprint["rbf"] = train_config_to_json(config);
          fingerprint["mirnn"] = mirnn_config_to_json(mirnn);
          const MirnnFit fitted = fit_mirnn(data, *cf, mirnn);
          imputed = impute_mirnn(fitted.model, data, *cf);
          break;
        }
      }
      AblationResult result;
      result.variant = variant;
      result.seed = seed;
      result.imputed = imputed.values();
      result.report = evaluate(result.imputed, pair.truth, pair.eval_mask, data.names());
      result.report.fingerprint = hex_fingerprint(fingerprint.dump());
      result.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (out_dir && cf) {
        const std::string name = "plot_" + variant_key(variant) + "_seed" + std::to_string(seed) + ".csv";
        emit_plot_data(data, *cf, result.imputed, pair.truth, pair.eval_mask, (*out_dir / name).string());
      }
      results.push_back(std::move(result));
    }
  }

  if (out_dir) {
    write_json_file(ablation_to_json(results), (*out_dir / "results.json").string());
    std::ofstream summary(*out_dir / "summary.csv");
    summary << "variant,seed,mae,mre,mape,count,seconds\n";
    for (const auto& r : results) {
      summary << variant_tag(r.variant) << ',' << r.seed << ',' << r.report.pooled.mae << ',' << r.report.pooled.mre
              << ',' << r.report.pooled.mape << ',' << r.report.pooled.count << ',' << r.report.seconds << '\n';
    }
    if (!summary) throw Error("cannot write summary.csv");
  }
  return results;
}

double mean_mae(const std::vector<AblationResult>& results, Variant variant) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : results) {
    if (r.variant != variant) continue;
    sum += r.report.pooled.mae;
    ++count;
  }
  if (count == 0) throw Error("no results for variant " + variant_tag(variant));
  return sum / count;
}

Eigen::VectorXd dense_grid(const Eigen::VectorXd& timestamps, int density) {
  const Eigen::Index n = timestamps.size();
  Eigen::VectorXd grid(n * density);
  for (Eigen::Index i = 0; i < n; ++i) {
    double step = 1.0;
    if (i + 1 < n) {
      step = timestamps[i + 1] - timestamps[i];
    } else if (n > 1) {
      step = timestamps[i] - timestamps[i - 1];
    }
    for (int j = 0; j < density; ++j) grid[i * density + j] = timestamps[i] + step * j / density;
  }
  return grid;
}

void emit_plot_data(const MultivariateSeries& series, const ContinuousFunction& cf, const Eigen::MatrixXd& imputed,
                    const Eigen::MatrixXd& truth, const Eigen::MatrixXd& eval_mask, const std::string& path) {
  if (imputed.rows() != series.rows() || imputed.cols() != series.vars() || truth.rows() != series.rows() ||
      truth.cols() != series.vars() || eval_mask.rows() != series.rows() || eval_mask.cols() != series.vars())
    throw Error("plot data shape mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  out << "kind,variable,t,value,truth\n";
  const Eigen::VectorXd grid = dense_grid(series.timestamps());
  const Eigen::MatrixXd samples = cf.evaluate(grid);
  for (Eigen::Index m = 0; m < series.vars(); ++m) {
    const std::string& name = series.names()[static_cast<std::size_t>(m)];
    for (Eigen::Index i = 0; i < grid.size(); ++i) out << "cf," << name << ',' << grid[i] << ',' << samples(i, m) << ",\n";
    for (Eigen::Index n = 0; n < series.rows(); ++n) {
      if (series.observed(n, m))
        out << "observed," << name << ',' << series.timestamps()[n] << ',' << series.values()(n, m) << ",\n";
    }
    for (Eigen::Index n = 0; n < series.rows(); ++n) {
      if (eval_mask(n, m) != 0.0)
        out << "eval," << name << ',' << series.timestamps()[n] << ',' << imputed(n, m) << ',' << truth(n, m) << '\n';
    }
  }
  if (!out) throw Error("write failed for " + path);
}

std::vector<PlotRow> load_plot_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "kind,variable,t,value,truth") throw Error(path + ": not a plot data file");
  std::vector<PlotRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, variable, t, value, truth;
    std::getline(ss, kind, ',');
    std::getline(ss, variable, ',');
    std::getline(ss, t, ',');
    std::getline(ss, value, ',');
    std::getline(ss, truth, ',');
    PlotRow row{kind, variable, std::stod(t), std::stod(value), truth.empty() ? kMissing : std::stod(truth)};
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mrbf

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

#include "mrbf/rbfnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mrbf {

namespace {

constexpr double kMapeGuard = 1e-8;

std::string sigma_init_name(SigmaInit mode) {
  return mode == SigmaInit::kTimeGapMean ? "time-gap-mean" : "random-unit-normal-abs";
}

std::string bank_mode_name(BankMode mode) { return mode == BankMode::kShared ? "shared" : "per-variable"; }

double mean_time_gap(const TimeGapMatrix& delta) {
  if (delta.rows() < 2) throw Error("time-gap sigma needs at least two timestamps");
  return delta.bottomRows(delta.rows() - 1).mean();
}

}  // namespace

void TrainConfig::validate() const {
  if (k_per_stage < 1) throw Error("k_per_stage must be positive");
  if (max_stages < 1) throw Error("max_stages must be positive");
  if (!(mape_threshold > 0.0 && mape_threshold < 1.0)) throw Error("mape_threshold must lie in (0, 1)");
  if (!(lr > 0.0)) throw Error("lr must be positive");
  if (epochs_per_stage < 1) throw Error("epochs_per_stage must be positive");
}

nlohmann::json train_config_to_json(const TrainConfig& config) {
  return {{"k_per_stage", config.k_per_stage},
          {"max_stages", config.max_stages},
          {"mape_threshold", config.mape_threshold},
          {"lr", config.lr},
          {"epochs_per_stage", config.epochs_per_stage},
          {"sigma_init_mode", sigma_init_name(config.sigma_init)},
          {"bank_mode", bank_mode_name(config.bank_mode)},
          {"seed", config.seed},
          {"normalize", config.normalize}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  TrainConfig config;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "k_per_stage") {
        config.k_per_stage = value.get<Eigen::Index>();
      } else if (key == "max_stages") {
        config.max_stages = value.get<Eigen::Index>();
      } else if (key == "mape_threshold") {
        config.mape_threshold = value.get<double>();
      } else if (key == "lr") {
        config.lr = value.get<double>();
      } else if (key == "epochs_per_stage") {
        config.epochs_per_stage = value.get<Eigen::Index>();
      } else if (key == "sigma_init_mode") {
        const auto mode = value.get<std::string>();
        if (mode == "time-gap-mean") {
          config.sigma_init = SigmaInit::kTimeGapMean;
        } else if (mode == "random-unit-normal-abs") {
          config.sigma_init = SigmaInit::kRandomUnitNormalAbs;
        } else {
          throw Error("unknown sigma_init_mode '" + mode + "'");
        }
      } else if (key == "bank_mode") {
        const auto mode = value.get<std::string>();
        if (mode == "shared") {
          config.bank_mode = BankMode::kShared;
        } else if (mode == "per-variable") {
          config.bank_mode = BankMode::kPerVariable;
        } else {
          throw Error("unknown bank_mode '" + mode + "'");
        }
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "normalize") {
        config.normalize = value.get<bool>();
      } else {
        throw Error("unknown train config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed train config: ") + e.what());
  }
  config.validate();
  return config;
}

ResidualTarget initial_target(const MultivariateSeries& series) { return series.filled(); }

CenterChoice init_centers(const ResidualTarget& target, const MultivariateSeries& series, Eigen::Index k,
                          double jitter) {
  if (k <= 0) throw Error("number of centers must be positive");
  std::vector<Eigen::Index> rows;
  std::vector<double> score;
  for (Eigen::Index n = 0; n < series.rows(); ++n) {
    double best = -1.0;
    for (Eigen::Index m = 0; m < series.vars(); ++m) {
      if (series.observed(n, m)) best = std::max(best, std::abs(target(n, m)));
    }
    if (best >= 0.0) {
      rows.push_back(n);
      score.push_back(best);
    }
  }
  if (rows.empty()) throw Error("no observed cells to place centers on");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  CenterChoice choice;
  choice.centers.resize(k);
  const auto available = static_cast<Eigen::Index>(order.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index row = rows[order[static_cast<std::size_t>(i % available)]];
    const auto repeat = static_cast<double>(i / available);
    choice.rows.push_back(row);
    choice.centers[i] = series.timestamps()[row] + repeat * jitter;
  }
  return choice;
}

Eigen::MatrixXd init_weights(const ResidualTarget& target, const MultivariateSeries& series,
                             const CenterChoice& choice) {
  const auto k = static_cast<Eigen::Index>(choice.rows.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, series.vars());
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index row = choice.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index m = 0; m < series.vars(); ++m) {
      if (series.observed(row, m)) w(i, m) = target(row, m);
    }
  }
  return w;
}

Eigen::VectorXd init_sigmas(const TimeGapMatrix& delta, SigmaInit mode, Eigen::Index k, std::uint64_t seed) {
  if (k <= 0) throw Error("number of sigmas must be positive");
  if (mode == SigmaInit::kTimeGapMean) {
    const double mean = mean_time_gap(delta);
    if (!(mean > 0.0)) throw Error("mean time gap is zero");
    return Eigen::VectorXd::Constant(k, mean);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd sigmas(k);
  for (Eigen::Index i = 0; i < k; ++i) sigmas[i] = std::abs(unit(rng)) + 1e-3;
  return sigmas;
}

LossGradient stage_loss_gradient(const GrbfBank& bank, StageRange range, const ResidualTarget& target,
                                 const MultivariateSeries& series) {
  const double count = series.mask().sum();
  if (count <= 0.0) throw Error("no observed cells");
  const Eigen::VectorXd& t = series.timestamps();
  const Eigen::VectorXd c = bank.centers.segment(range.begin, range.size());
  const Eigen::VectorXd s = bank.sigmas.segment(range.begin, range.size());
  const auto w = bank.weights.middleRows(range.begin, range.size());

  const Eigen::MatrixXd phi = basis_matrix(c, s, t);
  // Unobserved target cells hold arbitrary values; the mask zeroes them out.
  const Eigen::MatrixXd residual =
      (series.mask().array() != 0.0).select(target - phi * w, 0.0);

  LossGradient out;
  out.loss = residual.squaredNorm() / count;
  const Eigen::MatrixXd d_f = (-2.0 / count) * residual;  // dL/dF at every cell
  out.d_weights = phi.transpose() * d_f;
  // a(n, k) = sum_m dL/dF(n, m) w_k^m; shared bases couple all variables here.
  const Eigen::ArrayXXd a = ((d_f * w.transpose()).array() * phi.array());
  out.d_centers.resize(range.size());
  out.d_sigmas.resize(range.size());
  for (Eigen::Index k = 0; k < range.size(); ++k) {
    const Eigen::ArrayXd diff = t.array() - c[k];
    out.d_centers[k] = (a.col(k) * 2.0 * diff / s[k]).sum();
    out.d_sigmas[k] = (a.col(k) * diff.square() / (s[k] * s[k])).sum();
  }
  return out;
}

double grad_step(GrbfBank& bank, StageRange range, const ResidualTarget& target,
                 const MultivariateSeries& series, double lr) {
  const LossGradient g = stage_loss_gradient(bank, range, target, series);
  if (!std::isfinite(g.loss)) throw Error("non-finite GRBF training loss");
  if (!g.d_centers.allFinite() || !g.d_sigmas.allFinite() || !g.d_weights.allFinite())
    throw Error("non-finite GRBF gradient");
  bank.weights.middleRows(range.begin, range.size()) -= lr * g.d_weights;
  bank.centers.segment(range.begin, range.size()) -= lr * g.d_centers;
  auto sig = bank.sigmas.segment(range.begin, range.size());
  sig -= lr * g.d_sigmas;
  sig = sig.cwiseMax(kSigmaFloor);
  return g.loss;
}

StageRange fit_stage(GrbfBank& bank, const ResidualTarget& target, const MultivariateSeries& series,
                     const TrainConfig& config, StageReport* report) {
  const TimeGapMatrix delta = time_gap(series);
  const double jitter = series.rows() > 1 ? 1e-3 * mean_time_gap(delta) : 1e-3;
  const CenterChoice choice = init_centers(target, series, config.k_per_stage, jitter);
  const Eigen::MatrixXd w = init_weights(target, series, choice);
  const std::uint64_t seed = config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(bank.stages());
  const Eigen::VectorXd s = init_sigmas(delta, config.sigma_init, config.k_per_stage, seed);
  const StageRange range = bank.append_stage(choice.centers, s, w);

  double loss = 0.0;
  for (Eigen::Index epoch = 0; epoch < config.epochs_per_stage; ++epoch) {
    loss = grad_step(bank, range, target, series, config.lr);
  }
  if (report) {
    report->stage = bank.stages() - 1;
    report->bases = range.size();
    report->epochs = config.epochs_per_stage;
    report->final_loss = loss;
  }
  return range;
}

ResidualTarget update_residual(const ResidualTarget& target, const GrbfBank& bank, StageRange range,
                               const MultivariateSeries& series) {
  const Eigen::MatrixXd contribution = cf_eval_stage(bank, range, series.timestamps());
  return (series.mask().array() != 0.0).select(target - contribution, target);
}

double observed_mape(const MultivariateSeries& series, const Eigen::MatrixXd& prediction) {
  double sum = 0.0;
  double count = 0.0;
  for (Eigen::Index m = 0; m < series.vars(); ++m) {
    for (Eigen::Index n = 0; n < series.rows(); ++n) {
      if (!series.observed(n, m)) continue;
      const double truth = series.values()(n, m);
      if (std::abs(truth) < kMapeGuard) continue;
      sum += std::abs(prediction(n, m) - truth) / std::abs(truth);
      count += 1.0;
    }
  }
  return count > 0.0 ? sum / count : 0.0;
}

double observed_mae(const MultivariateSeries& series, const Eigen::MatrixXd& prediction) {
  const double count = series.mask().sum();
  if (count <= 0.0) return 0.0;
  return (series.mask().array() != 0.0).select((prediction - series.filled()).cwiseAbs(), 0.0).sum() / count;
}

namespace {

// Stage loop on an already scaled series. `raw` is the series on the caller's
// scale; stage metrics are computed against it.
std::vector<StageReport> fit_shared(GrbfBank& bank, const MultivariateSeries& scaled,
                                    const MultivariateSeries& raw,
                                    const std::optional<NormalizationStats>& stats,
                                    const TrainConfig& config, Eigen::Index variable) {
  std::vector<StageReport> reports;
  ResidualTarget target = initial_target(scaled);
  for (Eigen::Index stage = 0; stage < config.max_stages; ++stage) {
    StageReport report;
    const StageRange range = fit_stage(bank, target, scaled, config, &report);
    target = update_residual(target, bank, range, scaled);
    Eigen::MatrixXd cf = cf_eval_series(bank, scaled.timestamps());
    if (stats) cf = denormalize_values(cf, *stats);
    report.variable = variable;
    report.mape = observed_mape(raw, cf);
    report.mae = observed_mae(raw, cf);
    reports.push_back(report);
    if (report.mape <= config.mape_threshold) break;
  }
  return reports;
}

MultivariateSeries column(const MultivariateSeries& series, Eigen::Index m) {
  return MultivariateSeries(series.timestamps(), series.filled().col(m), series.mask().col(m),
                            {series.names()[static_cast<std::size_t>(m)]});
}

NormalizationStats column(const NormalizationStats& stats, Eigen::Index m) {
  return {stats.mean.segment(m, 1), stats.std.segment(m, 1)};
}

}  // namespace

FitResult fit(const MultivariateSeries& series, const TrainConfig& config) {
  config.validate();
  if (series.observed_count() == 0) throw Error("no observed data to fit");
  FitResult result;
  result.cf.names = series.names();
  result.cf.bank = GrbfBank(series.vars());
  std::optional<Normalized> normalized;
  if (config.normalize) {
    normalized = normalize(series);
    result.cf.stats = normalized->stats;
  }
  const MultivariateSeries& scaled = normalized ? normalized->series : series;

  if (config.bank_mode == BankMode::kShared) {
    result.reports = fit_shared(result.cf.bank, scaled, series, result.cf.stats, config, -1);
    return result;
  }

  // Per-variable banks packed block-diagonally into one bank. The per-stage
  // basis budget is split across variables so both modes carry the same
  // number of bases.
  for (Eigen::Index m = 0; m < series.vars(); ++m) {
    const MultivariateSeries scaled_m = column(scaled, m);
    if (scaled_m.observed_count() == 0)
      throw Error("variable '" + series.names()[static_cast<std::size_t>(m)] + "' has no observations");
    std::optional<NormalizationStats> stats_m;
    if (result.cf.stats) stats_m = column(*result.cf.stats, m);
    TrainConfig config_m = config;
    config_m.seed = config.seed + 7919ULL * static_cast<std::uint64_t>(m);
    config_m.k_per_stage = (config.k_per_stage + series.vars() - 1) / series.vars();
    GrbfBank single(1);
    auto reports = fit_shared(single, scaled_m, column(series, m), stats_m, config_m, m);
    for (Eigen::Index s = 0; s < single.stages(); ++s) {
      const StageRange r = single.stage(s);
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(r.size(), series.vars());
      w.col(m) = single.weights.middleRows(r.begin, r.size());
      result.cf.bank.append_stage(single.centers.segment(r.begin, r.size()),
                                  single.sigmas.segment(r.begin, r.size()), w);
    }
    result.reports.insert(result.reports.end(), reports.begin(), reports.end());
  }
  return result;
}

nlohmann::json stage_reports_to_json(const std::vector<StageReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    out.push_back({{"stage", r.stage},
                   {"variable", r.variable},
                   {"bases", r.bases},
                   {"epochs", r.epochs},
                   {"final_loss", r.final_loss},
                   {"mape", r.mape},
                   {"mae", r.mae}});
  }
  return out;
}

}  // namespace mrbf

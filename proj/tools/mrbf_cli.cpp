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

// mrbf command-line interface.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrbf/bank_io.hpp"
#include "mrbf/data.hpp"
#include "mrbf/eval.hpp"
#include "mrbf/grbf.hpp"
#include "mrbf/mirnn.hpp"
#include "mrbf/rbfnn.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

mrbf::TrainConfig rbf_config(const std::string& path) {
  return path.empty() ? mrbf::TrainConfig{} : mrbf::train_config_from_json(mrbf::read_json_file(path));
}

mrbf::MirnnConfig mirnn_config(const std::string& path) {
  return path.empty() ? mrbf::MirnnConfig{} : mrbf::mirnn_config_from_json(mrbf::read_json_file(path));
}

std::optional<std::string> optional_path(const std::string& path) {
  return path.empty() ? std::nullopt : std::optional<std::string>(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missing-value imputation with shared Gaussian RBF banks and a bidirectional recurrent refiner"};
  app.require_subcommand(1);

  // synth lorenz96
  auto* synth = app.add_subcommand("synth", "Generate synthetic data");
  synth->require_subcommand(1);
  auto* l96 = synth->add_subcommand("lorenz96", "Lorenz-96 trajectory integrated with RK4");
  mrbf::Lorenz96Config l96_config;
  std::string l96_out;
  l96->add_option("--n", l96_config.steps, "Number of recorded time steps")->capture_default_str();
  l96->add_option("--d", l96_config.dims, "Number of variables (>= 4)")->capture_default_str();
  l96->add_option("--f", l96_config.forcing, "Forcing constant F")->capture_default_str();
  l96->add_option("--dt", l96_config.dt, "Integration and sampling step")->capture_default_str();
  l96->add_option("--perturbation", l96_config.perturbation, "Initial offset on one coordinate")->capture_default_str();
  l96->add_option("--burn-in", l96_config.burn_in, "Discarded steps before recording")->capture_default_str();
  l96->add_option("--seed", l96_config.seed)->capture_default_str();
  l96->add_option("--out", l96_out, "Output CSV")->required();

  // corrupt
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Hide observed cells and keep them as ground truth");
  std::string corrupt_mode = "random", corrupt_terms = "50,80", corrupt_in, corrupt_out;
  mrbf::CorruptionSpec spec;
  corrupt_cmd->add_option("--mode", corrupt_mode, "random | long-term")
      ->check(CLI::IsMember({"random", "long-term"}))
      ->capture_default_str();
  corrupt_cmd->add_option("--rate", spec.rate, "Fraction of observed cells to hide")->capture_default_str();
  corrupt_cmd->add_option("--terms", corrupt_terms, "Run length range a,b (long-term mode)")->capture_default_str();
  corrupt_cmd->add_option("--seed", spec.seed)->capture_default_str();
  corrupt_cmd->add_option("--in", corrupt_in, "Input CSV")->required();
  corrupt_cmd->add_option("--out", corrupt_out, "Output directory")->required();

  // fit-rbf
  auto* fit_rbf = app.add_subcommand("fit-rbf", "Fit a GRBF bank to the observed cells");
  std::string fit_input, fit_mask, fit_config, fit_out, fit_report;
  fit_rbf->add_option("--input", fit_input, "Input CSV")->required();
  fit_rbf->add_option("--mask", fit_mask, "Optional mask CSV");
  fit_rbf->add_option("--config", fit_config, "Training config JSON");
  fit_rbf->add_option("--out", fit_out, "Bank JSON")->required();
  fit_rbf->add_option("--report", fit_report, "Per-stage report JSON");

  // fit-mirnn
  auto* fit_rnn = app.add_subcommand("fit-mirnn", "Train the recurrent imputer on top of a fitted bank");
  std::string rnn_input, rnn_mask, rnn_bank, rnn_config, rnn_out, rnn_curve;
  fit_rnn->add_option("--input", rnn_input, "Input CSV")->required();
  fit_rnn->add_option("--mask", rnn_mask, "Optional mask CSV");
  fit_rnn->add_option("--bank", rnn_bank, "Bank JSON from fit-rbf")->required();
  fit_rnn->add_option("--config", rnn_config, "MIRNN config JSON");
  fit_rnn->add_option("--out", rnn_out, "Model JSON")->required();
  fit_rnn->add_option("--curve", rnn_curve, "Per-epoch loss JSON");

  // impute
  auto* impute = app.add_subcommand("impute", "Fill missing cells");
  std::string imp_input, imp_mask, imp_bank, imp_model, imp_out;
  impute->add_option("--input", imp_input, "Input CSV")->required();
  impute->add_option("--mask", imp_mask, "Optional mask CSV");
  impute->add_option("--bank", imp_bank, "Bank JSON")->required();
  impute->add_option("--model", imp_model, "MIRNN model JSON; without it the bank's function is used directly");
  impute->add_option("--out", imp_out, "Imputed CSV")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score an imputation against ground truth");
  std::string ev_pred, ev_truth, ev_mask, ev_out;
  eval_cmd->add_option("--pred", ev_pred, "Imputed CSV")->required();
  eval_cmd->add_option("--truth", ev_truth, "Ground-truth CSV")->required();
  eval_cmd->add_option("--eval-mask", ev_mask, "Evaluation mask CSV")->required();
  eval_cmd->add_option("--out", ev_out, "Report JSON (stdout when omitted)");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Compare model variants on a corrupted/truth pair");
  std::string ab_data, ab_variants = "mim,mim-rand,mis,mis-rand,mirnn,mean,knn", ab_seeds = "1,2,3", ab_out;
  std::string ab_rbf, ab_mirnn;
  Eigen::Index ab_k = 10;
  ablate->add_option("--data", ab_data, "Directory written by corrupt")->required();
  ablate->add_option("--variants", ab_variants, "Comma-separated variants")->capture_default_str();
  ablate->add_option("--seeds", ab_seeds, "Comma-separated seeds")->capture_default_str();
  ablate->add_option("--rbf-config", ab_rbf, "Training config JSON for the RBF variants");
  ablate->add_option("--mirnn-config", ab_mirnn, "MIRNN config JSON");
  ablate->add_option("--knn-k", ab_k, "Neighbors for the KNN baseline")->capture_default_str();
  ablate->add_option("--out", ab_out, "Results directory")->required();

  // plot
  auto* plot = app.add_subcommand("plot", "Write plot-ready CSV of a bank's functions and an imputation");
  std::string pl_data, pl_bank, pl_pred, pl_out;
  plot->add_option("--data", pl_data, "Directory written by corrupt")->required();
  plot->add_option("--bank", pl_bank, "Bank JSON")->required();
  plot->add_option("--pred", pl_pred, "Imputed CSV")->required();
  plot->add_option("--out", pl_out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*l96) {
      mrbf::save_csv(mrbf::lorenz96(l96_config), l96_out);
    } else if (*corrupt_cmd) {
      spec.mode = corrupt_mode == "random" ? mrbf::CorruptionMode::kRandom : mrbf::CorruptionMode::kLongTerm;
      if (spec.mode == mrbf::CorruptionMode::kLongTerm) {
        const auto terms = split_list(corrupt_terms);
        if (terms.size() != 2) throw mrbf::Error("--terms expects a,b");
        spec.term_min = std::stol(terms[0]);
        spec.term_max = std::stol(terms[1]);
      }
      mrbf::save_pair(mrbf::corrupt(mrbf::load_csv(corrupt_in), spec), corrupt_out);
    } else if (*fit_rbf) {
      const auto series = mrbf::load_csv(fit_input, optional_path(fit_mask));
      const auto result = mrbf::fit(series, rbf_config(fit_config));
      mrbf::save_bank(result.cf, fit_out);
      if (!fit_report.empty()) mrbf::write_json_file(mrbf::stage_reports_to_json(result.reports), fit_report);
      std::cout << "stages: " << result.reports.size() << ", bases: " << result.cf.bank.size()
                << ", final MAPE: " << result.reports.back().mape << '\n';
    } else if (*fit_rnn) {
      const auto series = mrbf::load_csv(rnn_input, optional_path(rnn_mask));
      const auto cf = mrbf::load_bank(rnn_bank);
      const auto fitted = mrbf::fit_mirnn(series, cf, mirnn_config(rnn_config));
      mrbf::save_model(fitted.model, rnn_out);
      if (!rnn_curve.empty()) mrbf::write_json_file(nlohmann::json(fitted.loss_curve), rnn_curve);
      if (!fitted.loss_curve.empty())
        std::cout << "epochs: " << fitted.loss_curve.size() << ", final loss: " << fitted.loss_curve.back() << '\n';
    } else if (*impute) {
      const auto series = mrbf::load_csv(imp_input, optional_path(imp_mask));
      const auto cf = mrbf::load_bank(imp_bank);
      if (imp_model.empty()) {
        mrbf::save_csv(cf.impute(series), imp_out);
      } else {
        mrbf::save_csv(mrbf::impute_mirnn(mrbf::load_model(imp_model), series, cf), imp_out);
      }
    } else if (*eval_cmd) {
      const auto pred = mrbf::load_csv(ev_pred);
      const auto truth = mrbf::load_csv(ev_truth);
      const auto mask = mrbf::load_csv(ev_mask);
      const auto report = mrbf::evaluate(pred.filled(mrbf::kMissing), truth.values(), mask.filled(), truth.names());
      const auto doc = mrbf::report_to_json(report);
      if (ev_out.empty()) {
        std::cout << doc.dump(2) << '\n';
      } else {
        mrbf::write_json_file(doc, ev_out);
      }
    } else if (*ablate) {
      const auto pair = mrbf::load_pair(ab_data);
      std::vector<mrbf::Variant> variants;
      for (const auto& key : split_list(ab_variants)) variants.push_back(mrbf::parse_variant(key));
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split_list(ab_seeds)) seeds.push_back(std::stoull(s));
      mrbf::AblationOptions options;
      options.rbf = rbf_config(ab_rbf);
      options.mirnn = mirnn_config(ab_mirnn);
      options.knn_k = ab_k;
      options.out_dir = ab_out;
      const auto results = mrbf::run_ablation(pair, variants, seeds, options);
      std::cout << "variant            mean MAE\n";
      for (const auto v : variants) {
        std::cout << mrbf::variant_tag(v) << std::string(19 - std::min<std::size_t>(18, mrbf::variant_tag(v).size()), ' ')
                  << mrbf::mean_mae(results, v) << '\n';
      }
    } else if (*plot) {
      const auto pair = mrbf::load_pair(pl_data);
      const auto pred = mrbf::load_csv(pl_pred);
      mrbf::emit_plot_data(pair.corrupted, mrbf::load_bank(pl_bank), pred.filled(mrbf::kMissing), pair.truth,
                           pair.eval_mask, pl_out);
    }
  } catch (const mrbf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

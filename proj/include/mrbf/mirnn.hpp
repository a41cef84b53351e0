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

// Bidirectional recurrent imputer fed by a fitted continuous function.
//
// Per time step and direction:
//   x_hat  = W_x h_{t-1} + b_x                       history estimate
//   x_c    = (1 - m) x_hat + m x
//   R_hat  = W_R cf + U_R x_c + b_R                   continuous-concatenate estimate
//   R_c    = (1 - m) R_hat + m x
//   z_hat  = W_z R_c + b_z,  diag(W_z) = 0            feature estimate
//   gamma  = exp(-max(0, W_r delta + b_r))            hidden-state decay, size H
//   beta   = sigmoid(W_beta [gamma; m] + b_beta)
//   x_tld  = beta z_hat + (1 - beta) x_hat
//   x_bar  = m x + (1 - m) x_tld
//   h_t    = GRU([x_bar; m], gamma h_{t-1})
//
// The training loss sums masked mean absolute errors of x_tld, x_hat, z_hat and
// R_hat over both directions plus the mean absolute disagreement between the
// forward and backward x_bar.

#ifndef MRBF_MIRNN_HPP_
#define MRBF_MIRNN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mrbf/grbf.hpp"
#include "mrbf/series.hpp"

namespace mrbf {

struct DirectionParams {
  Eigen::MatrixXd w_x;     // M x H
  Eigen::VectorXd b_x;     // M
  Eigen::MatrixXd w_cf;    // M x M, W_R
  Eigen::MatrixXd u_cf;    // M x M, U_R
  Eigen::VectorXd b_cf;    // M
  Eigen::MatrixXd w_z;     // M x M, zero diagonal
  Eigen::VectorXd b_z;     // M
  Eigen::MatrixXd w_decay; // H x M
  Eigen::VectorXd b_decay; // H
  Eigen::MatrixXd w_beta;  // M x (H + M)
  Eigen::VectorXd b_beta;  // M
  Eigen::MatrixXd w_ih;    // 3H x 2M, GRU gates stacked [reset; update; candidate]
  Eigen::VectorXd b_ih;    // 3H
  Eigen::MatrixXd w_hh;    // 3H x H
  Eigen::VectorXd b_hh;    // 3H

  Eigen::Index vars() const { return w_x.rows(); }
  Eigen::Index hidden() const { return w_x.cols(); }

  static DirectionParams zeros(Eigen::Index vars, Eigen::Index hidden);
  // Weights uniform in +-1/sqrt(fan_in), biases zero, diag(W_z) zero.
  static DirectionParams random(Eigen::Index vars, Eigen::Index hidden, std::uint64_t seed);

  // Calls f(name, tensor) for every parameter tensor in a fixed order.
  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("w_x", self.w_x);
    f("b_x", self.b_x);
    f("w_cf", self.w_cf);
    f("u_cf", self.u_cf);
    f("b_cf", self.b_cf);
    f("w_z", self.w_z);
    f("b_z", self.b_z);
    f("w_decay", self.w_decay);
    f("b_decay", self.b_decay);
    f("w_beta", self.w_beta);
    f("b_beta", self.b_beta);
    f("w_ih", self.w_ih);
    f("b_ih", self.b_ih);
    f("w_hh", self.w_hh);
    f("b_hh", self.b_hh);
  }

  Eigen::Index parameter_count() const;
  void validate() const;
};

struct MirnnParams {
  DirectionParams forward;
  DirectionParams backward;

  static MirnnParams zeros(Eigen::Index vars, Eigen::Index hidden);
  static MirnnParams random(Eigen::Index vars, Eigen::Index hidden, std::uint64_t seed);

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    DirectionParams::visit(self.forward, f);
    DirectionParams::visit(self.backward, f);
  }
};

// Intermediates of one cell step; the GRU fields are kept for backpropagation.
struct CellTrace {
  Eigen::VectorXd x_hat, x_c, r_hat, r_c, z_hat, gamma, beta, x_tilde, x_bar, h;
  Eigen::VectorXd decay_pre;  // W_r delta + b_r
  Eigen::VectorXd h_decayed;  // gamma * h_{t-1}
  Eigen::VectorXd gate_r, gate_z, gate_n, hh_n;  // hh_n = candidate block of W_hh h + b_hh
};

// x is read only where m = 1.
CellTrace cell_forward(const DirectionParams& p, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& m, const Eigen::VectorXd& delta, const Eigen::VectorXd& cf);

enum class Direction { kForward, kBackward };

// The four masked estimation terms; the bidirectional loss adds consistency.
struct EstimationLoss {
  double final_estimate = 0.0;
  double historical = 0.0;
  double feature = 0.0;
  double continuous = 0.0;
};

struct MirnnLoss {
  double final_estimate = 0.0;
  double historical = 0.0;
  double feature = 0.0;
  double continuous = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

struct SequenceResult {
  // In processing order: reversed time for the backward direction.
  std::vector<CellTrace> traces;
  EstimationLoss loss;
};

// cf is the N x M continuous-function matrix at the window's timestamps. The
// backward direction runs on the time-reversed window with gaps recomputed.
SequenceResult sequence_forward(const DirectionParams& p, const MultivariateSeries& window,
                                const Eigen::MatrixXd& cf, Direction direction);

struct BidirectionalResult {
  Eigen::MatrixXd x_bar;  // average of both directions, time order
  MirnnLoss loss;
  SequenceResult forward;
  SequenceResult backward;
};

BidirectionalResult bidirectional_forward(const MirnnParams& params, const MultivariateSeries& window,
                                          const Eigen::MatrixXd& cf);

// Total loss and its exact gradient by backpropagation through time.
MirnnLoss loss_gradient(const MirnnParams& params, const MultivariateSeries& window, const Eigen::MatrixXd& cf,
                        MirnnParams& grad);

struct MirnnConfig {
  Eigen::Index hidden_size = 64;
  Eigen::Index batch_size = 64;
  Eigen::Index window = 36;
  Eigen::Index epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json mirnn_config_to_json(const MirnnConfig& config);
MirnnConfig mirnn_config_from_json(const nlohmann::json& doc);

// Adam on the total loss over shuffled mini-batches of windows. Returns the
// mean total loss per epoch. diag(W_z) is re-zeroed after every update.
std::vector<double> train(MirnnParams& params, const std::vector<MultivariateSeries>& windows,
                          const std::vector<Eigen::MatrixXd>& cfs, const MirnnConfig& config);

struct MirnnModel {
  MirnnParams params;
  Eigen::Index window = 36;
  std::vector<std::string> names;
  // Scale shared with the bank the model was trained against.
  std::optional<NormalizationStats> stats;
};

struct MirnnFit {
  MirnnModel model;
  std::vector<double> loss_curve;
};

// Normalizes with the bank's statistics, cuts non-overlapping windows (the
// whole series when shorter than one window) and trains.
MirnnFit fit_mirnn(const MultivariateSeries& series, const ContinuousFunction& cf, const MirnnConfig& config);

// Runs every window (plus a trailing partial window) through both directions
// and stitches the averaged estimates back together. Observed cells are copied
// from the input.
MultivariateSeries impute_mirnn(const MirnnModel& model, const MultivariateSeries& series,
                                const ContinuousFunction& cf);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const MirnnModel& model);
MirnnModel model_from_json(const nlohmann::json& doc);
void save_model(const MirnnModel& model, const std::string& path);
MirnnModel load_model(const std::string& path);

}  // namespace mrbf

#endif  // MRBF_MIRNN_HPP_

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

#include "mrbf/mirnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mrbf/bank_io.hpp"

namespace mrbf {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
  return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

Eigen::VectorXd sign(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); });
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw Error(std::string("non-finite ") + what);
}

template <typename Tensor>
void fill_uniform(Tensor& t, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
}

struct FlatTensor {
  double* data;
  Eigen::Index size;
};

std::vector<FlatTensor> flatten(MirnnParams& params) {
  std::vector<FlatTensor> out;
  MirnnParams::visit(params, [&](const char*, auto& t) { out.push_back({t.data(), t.size()}); });
  return out;
}

// Direction inputs in processing order.
struct SequenceInputs {
  Eigen::MatrixXd x;  // unobserved cells zeroed
  Eigen::MatrixXd mask;
  Eigen::MatrixXd delta;
  Eigen::MatrixXd cf;
};

SequenceInputs sequence_inputs(const MultivariateSeries& window, const Eigen::MatrixXd& cf, Direction direction) {
  if (cf.rows() != window.rows() || cf.cols() != window.vars())
    throw Error("continuous-function matrix shape does not match the window");
  if (direction == Direction::kForward) return {window.filled(), window.mask(), time_gap(window), cf};
  const MultivariateSeries rev = window.reversed();
  return {rev.filled(), rev.mask(), time_gap(rev), cf.colwise().reverse()};
}

EstimationLoss estimation_loss(const std::vector<CellTrace>& traces, const SequenceInputs& in) {
  EstimationLoss loss;
  const double count = in.mask.sum();
  if (count <= 0.0) return loss;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    const Eigen::VectorXd x = in.x.row(i).transpose();
    const Eigen::VectorXd m = in.mask.row(i).transpose();
    const CellTrace& tr = traces[t];
    loss.final_estimate += m.cwiseProduct((tr.x_tilde - x).cwiseAbs()).sum();
    loss.historical += m.cwiseProduct((tr.x_hat - x).cwiseAbs()).sum();
    loss.feature += m.cwiseProduct((tr.z_hat - x).cwiseAbs()).sum();
    loss.continuous += m.cwiseProduct((tr.r_hat - x).cwiseAbs()).sum();
  }
  loss.final_estimate /= count;
  loss.historical /= count;
  loss.feature /= count;
  loss.continuous /= count;
  return loss;
}

SequenceResult run_sequence(const DirectionParams& p, const SequenceInputs& in) {
  SequenceResult result;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(p.hidden());
  result.traces.reserve(static_cast<std::size_t>(in.x.rows()));
  for (Eigen::Index t = 0; t < in.x.rows(); ++t) {
    result.traces.push_back(cell_forward(p, h, in.x.row(t).transpose(), in.mask.row(t).transpose(),
                                         in.delta.row(t).transpose(), in.cf.row(t).transpose()));
    h = result.traces.back().h;
  }
  result.loss = estimation_loss(result.traces, in);
  return result;
}

// Accumulates the gradient of one direction into g. cons_grad holds dL/dx_bar
// from the consistency term, in processing order.
void direction_backward(const DirectionParams& p, const SequenceInputs& in, const std::vector<CellTrace>& traces,
                        const Eigen::MatrixXd& cons_grad, DirectionParams& g) {
  const Eigen::Index hidden = p.hidden();
  const Eigen::Index vars = p.vars();
  const double count = in.mask.sum();
  const double scale = count > 0.0 ? 1.0 / count : 0.0;
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
  const Eigen::VectorXd zero_h = Eigen::VectorXd::Zero(hidden);

  for (Eigen::Index t = static_cast<Eigen::Index>(traces.size()) - 1; t >= 0; --t) {
    const CellTrace& tr = traces[static_cast<std::size_t>(t)];
    const Eigen::VectorXd& h_prev = t > 0 ? traces[static_cast<std::size_t>(t - 1)].h : zero_h;
    const Eigen::VectorXd x = in.x.row(t).transpose();
    const Eigen::VectorXd m = in.mask.row(t).transpose();
    const Eigen::VectorXd om = Eigen::VectorXd::Ones(vars) - m;
    const Eigen::VectorXd delta = in.delta.row(t).transpose();
    const Eigen::VectorXd cf = in.cf.row(t).transpose();

    Eigen::VectorXd d_xt = scale * m.cwiseProduct(sign(tr.x_tilde - x));
    Eigen::VectorXd d_xh = scale * m.cwiseProduct(sign(tr.x_hat - x));
    Eigen::VectorXd d_zh = scale * m.cwiseProduct(sign(tr.z_hat - x));
    Eigen::VectorXd d_rh = scale * m.cwiseProduct(sign(tr.r_hat - x));
    Eigen::VectorXd d_xb = cons_grad.row(t).transpose();

    // GRU
    const Eigen::ArrayXd r = tr.gate_r.array();
    const Eigen::ArrayXd z = tr.gate_z.array();
    const Eigen::ArrayXd n = tr.gate_n.array();
    const Eigen::ArrayXd dh = dh_next.array();
    const Eigen::ArrayXd d_n_pre = dh * (1.0 - z) * (1.0 - n * n);
    const Eigen::ArrayXd d_z_pre = dh * (tr.h_decayed.array() - n) * z * (1.0 - z);
    const Eigen::ArrayXd d_r_pre = d_n_pre * tr.hh_n.array() * r * (1.0 - r);
    Eigen::VectorXd d_gi(3 * hidden), d_gh(3 * hidden);
    d_gi << d_r_pre.matrix(), d_z_pre.matrix(), d_n_pre.matrix();
    d_gh << d_r_pre.matrix(), d_z_pre.matrix(), (d_n_pre * r).matrix();
    Eigen::VectorXd in_vec(2 * vars);
    in_vec << tr.x_bar, m;
    g.w_ih.noalias() += d_gi * in_vec.transpose();
    g.b_ih += d_gi;
    g.w_hh.noalias() += d_gh * tr.h_decayed.transpose();
    g.b_hh += d_gh;
    d_xb += (p.w_ih.transpose() * d_gi).head(vars);
    Eigen::VectorXd d_hd = (dh * z).matrix() + p.w_hh.transpose() * d_gh;

    // Decay of the previous hidden state.
    Eigen::VectorXd d_gamma = d_hd.cwiseProduct(h_prev);
    Eigen::VectorXd d_h_prev = d_hd.cwiseProduct(tr.gamma);

    // Combination of the two estimates.
    d_xt += om.cwiseProduct(d_xb);
    const Eigen::VectorXd d_beta = d_xt.cwiseProduct(tr.z_hat - tr.x_hat);
    d_zh += d_xt.cwiseProduct(tr.beta);
    d_xh += d_xt.cwiseProduct(Eigen::VectorXd::Ones(vars) - tr.beta);
    const Eigen::VectorXd d_beta_pre =
        (d_beta.array() * tr.beta.array() * (1.0 - tr.beta.array())).matrix();
    Eigen::VectorXd beta_in(hidden + vars);
    beta_in << tr.gamma, m;
    g.w_beta.noalias() += d_beta_pre * beta_in.transpose();
    g.b_beta += d_beta_pre;
    d_gamma += (p.w_beta.transpose() * d_beta_pre).head(hidden);

    const Eigen::VectorXd d_decay_pre =
        (tr.decay_pre.array() > 0.0).select(-(tr.gamma.array() * d_gamma.array()), 0.0).matrix();
    g.w_decay.noalias() += d_decay_pre * delta.transpose();
    g.b_decay += d_decay_pre;

    // Feature estimate.
    g.w_z.noalias() += d_zh * tr.r_c.transpose();
    g.b_z += d_zh;
    d_rh += om.cwiseProduct(p.w_z.transpose() * d_zh);

    // Continuous-concatenate estimate.
    g.w_cf.noalias() += d_rh * cf.transpose();
    g.u_cf.noalias() += d_rh * tr.x_c.transpose();
    g.b_cf += d_rh;
    d_xh += om.cwiseProduct(p.u_cf.transpose() * d_rh);

    // History estimate.
    g.w_x.noalias() += d_xh * h_prev.transpose();
    g.b_x += d_xh;
    d_h_prev += p.w_x.transpose() * d_xh;
    dh_next = d_h_prev;
  }
  g.w_z.diagonal().setZero();
}

}  // namespace

DirectionParams DirectionParams::zeros(Eigen::Index vars, Eigen::Index hidden) {
  if (vars < 1 || hidden < 1) throw Error("MIRNN needs at least one variable and one hidden unit");
  DirectionParams p;
  p.w_x = Eigen::MatrixXd::Zero(vars, hidden);
  p.b_x = Eigen::VectorXd::Zero(vars);
  p.w_cf = Eigen::MatrixXd::Zero(vars, vars);
  p.u_cf = Eigen::MatrixXd::Zero(vars, vars);
  p.b_cf = Eigen::VectorXd::Zero(vars);
  p.w_z = Eigen::MatrixXd::Zero(vars, vars);
  p.b_z = Eigen::VectorXd::Zero(vars);
  p.w_decay = Eigen::MatrixXd::Zero(hidden, vars);
  p.b_decay = Eigen::VectorXd::Zero(hidden);
  p.w_beta = Eigen::MatrixXd::Zero(vars, hidden + vars);
  p.b_beta = Eigen::VectorXd::Zero(vars);
  p.w_ih = Eigen::MatrixXd::Zero(3 * hidden, 2 * vars);
  p.b_ih = Eigen::VectorXd::Zero(3 * hidden);
  p.w_hh = Eigen::MatrixXd::Zero(3 * hidden, hidden);
  p.b_hh = Eigen::VectorXd::Zero(3 * hidden);
  return p;
}

DirectionParams DirectionParams::random(Eigen::Index vars, Eigen::Index hidden, std::uint64_t seed) {
  DirectionParams p = zeros(vars, hidden);
  std::mt19937_64 rng(seed);
  fill_uniform(p.w_x, rng);
  fill_uniform(p.w_cf, rng);
  fill_uniform(p.u_cf, rng);
  fill_uniform(p.w_z, rng);
  fill_uniform(p.w_decay, rng);
  fill_uniform(p.w_beta, rng);
  fill_uniform(p.w_ih, rng);
  fill_uniform(p.w_hh, rng);
  p.w_z.diagonal().setZero();
  return p;
}

Eigen::Index DirectionParams::parameter_count() const {
  Eigen::Index total = 0;
  visit(*this, [&](const char*, const auto& t) { total += t.size(); });
  return total;
}

void DirectionParams::validate() const {
  const Eigen::Index m = vars();
  const Eigen::Index h = hidden();
  auto check = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("MIRNN parameter shape mismatch: ") + what);
  };
  check(b_x.size() == m, "b_x");
  check(w_cf.rows() == m && w_cf.cols() == m, "w_cf");
  check(u_cf.rows() == m && u_cf.cols() == m, "u_cf");
  check(b_cf.size() == m, "b_cf");
  check(w_z.rows() == m && w_z.cols() == m, "w_z");
  check(b_z.size() == m, "b_z");
  check(w_decay.rows() == h && w_decay.cols() == m, "w_decay");
  check(b_decay.size() == h, "b_decay");
  check(w_beta.rows() == m && w_beta.cols() == h + m, "w_beta");
  check(b_beta.size() == m, "b_beta");
  check(w_ih.rows() == 3 * h && w_ih.cols() == 2 * m, "w_ih");
  check(b_ih.size() == 3 * h, "b_ih");
  check(w_hh.rows() == 3 * h && w_hh.cols() == h, "w_hh");
  check(b_hh.size() == 3 * h, "b_hh");
  visit(*this, [](const char* name, const auto& t) {
    if (!t.allFinite()) throw Error(std::string("non-finite MIRNN parameter ") + name);
  });
  if (w_z.diagonal().cwiseAbs().maxCoeff() != 0.0) throw Error("w_z has a nonzero diagonal");
}

MirnnParams MirnnParams::zeros(Eigen::Index vars, Eigen::Index hidden) {
  return {DirectionParams::zeros(vars, hidden), DirectionParams::zeros(vars, hidden)};
}

MirnnParams MirnnParams::random(Eigen::Index vars, Eigen::Index hidden, std::uint64_t seed) {
  return {DirectionParams::random(vars, hidden, seed), DirectionParams::random(vars, hidden, seed ^ 0x5bd1e995ULL)};
}

CellTrace cell_forward(const DirectionParams& p, const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& m, const Eigen::VectorXd& delta, const Eigen::VectorXd& cf) {
  const Eigen::Index hidden = p.hidden();
  const Eigen::Index vars = p.vars();
  if (h_prev.size() != hidden || x.size() != vars || m.size() != vars || delta.size() != vars || cf.size() != vars)
    throw Error("cell input shape mismatch");
  const Eigen::VectorXd xo = (m.array() != 0.0).select(x, 0.0);
  const Eigen::VectorXd om = Eigen::VectorXd::Ones(vars) - m;

  CellTrace t;
  t.x_hat = p.w_x * h_prev + p.b_x;
  require_finite(t.x_hat, "history estimate (x_hat)");
  t.x_c = om.cwiseProduct(t.x_hat) + m.cwiseProduct(xo);
  t.r_hat = p.w_cf * cf + p.u_cf * t.x_c + p.b_cf;
  require_finite(t.r_hat, "continuous-concatenate estimate (R_hat)");
  t.r_c = om.cwiseProduct(t.r_hat) + m.cwiseProduct(xo);
  t.z_hat = p.w_z * t.r_c + p.b_z;
  require_finite(t.z_hat, "feature estimate (z_hat)");
  t.decay_pre = p.w_decay * delta + p.b_decay;
  t.gamma = (-t.decay_pre.array().max(0.0)).exp().matrix();
  Eigen::VectorXd beta_in(hidden + vars);
  beta_in << t.gamma, m;
  t.beta = sigmoid(p.w_beta * beta_in + p.b_beta);
  require_finite(t.beta, "combination weight (beta)");
  t.x_tilde = t.beta.cwiseProduct(t.z_hat) + (Eigen::VectorXd::Ones(vars) - t.beta).cwiseProduct(t.x_hat);
  t.x_bar = m.cwiseProduct(xo) + om.cwiseProduct(t.x_tilde);

  t.h_decayed = t.gamma.cwiseProduct(h_prev);
  Eigen::VectorXd in(2 * vars);
  in << t.x_bar, m;
  const Eigen::VectorXd gi = p.w_ih * in + p.b_ih;
  const Eigen::VectorXd gh = p.w_hh * t.h_decayed + p.b_hh;
  t.gate_r = sigmoid(gi.head(hidden) + gh.head(hidden));
  t.gate_z = sigmoid(gi.segment(hidden, hidden) + gh.segment(hidden, hidden));
  t.hh_n = gh.tail(hidden);
  t.gate_n = (gi.tail(hidden) + t.gate_r.cwiseProduct(t.hh_n)).array().tanh().matrix();
  t.h = (1.0 - t.gate_z.array()) * t.gate_n.array() + t.gate_z.array() * t.h_decayed.array();
  require_finite(t.h, "hidden state");
  return t;
}

SequenceResult sequence_forward(const DirectionParams& p, const MultivariateSeries& window, const Eigen::MatrixXd& cf,
                                Direction direction) {
  return run_sequence(p, sequence_inputs(window, cf, direction));
}

namespace {

double consistency(const SequenceResult& fwd, const SequenceResult& bwd, Eigen::Index vars) {
  const std::size_t n = fwd.traces.size();
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) sum += (fwd.traces[t].x_bar - bwd.traces[n - 1 - t].x_bar).cwiseAbs().sum();
  return sum / static_cast<double>(n * static_cast<std::size_t>(vars));
}

MirnnLoss combine(const EstimationLoss& f, const EstimationLoss& b, double cons) {
  MirnnLoss loss;
  loss.final_estimate = f.final_estimate + b.final_estimate;
  loss.historical = f.historical + b.historical;
  loss.feature = f.feature + b.feature;
  loss.continuous = f.continuous + b.continuous;
  loss.consistency = cons;
  loss.total = loss.final_estimate + loss.historical + loss.feature + loss.continuous + loss.consistency;
  return loss;
}

}  // namespace

BidirectionalResult bidirectional_forward(const MirnnParams& params, const MultivariateSeries& window,
                                          const Eigen::MatrixXd& cf) {
  BidirectionalResult out;
  out.forward = sequence_forward(params.forward, window, cf, Direction::kForward);
  out.backward = sequence_forward(params.backward, window, cf, Direction::kBackward);
  const Eigen::Index n = window.rows();
  out.x_bar.resize(n, window.vars());
  for (Eigen::Index t = 0; t < n; ++t) {
    out.x_bar.row(t) = 0.5 * (out.forward.traces[static_cast<std::size_t>(t)].x_bar +
                              out.backward.traces[static_cast<std::size_t>(n - 1 - t)].x_bar)
                                 .transpose();
  }
  // Both directions reproduce observed values exactly, so their average does too.
  out.x_bar = (window.mask().array() != 0.0).select(window.values(), out.x_bar);
  out.loss = combine(out.forward.loss, out.backward.loss, consistency(out.forward, out.backward, window.vars()));
  return out;
}

MirnnLoss loss_gradient(const MirnnParams& params, const MultivariateSeries& window, const Eigen::MatrixXd& cf,
                        MirnnParams& grad) {
  const SequenceInputs fin = sequence_inputs(window, cf, Direction::kForward);
  const SequenceInputs bin = sequence_inputs(window, cf, Direction::kBackward);
  const SequenceResult fwd = run_sequence(params.forward, fin);
  const SequenceResult bwd = run_sequence(params.backward, bin);
  const Eigen::Index n = window.rows();
  const Eigen::Index vars = window.vars();
  const double cons = consistency(fwd, bwd, vars);

  Eigen::MatrixXd cons_f(n, vars), cons_b(n, vars);
  const double scale = 1.0 / static_cast<double>(n * vars);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::VectorXd s =
        scale * sign(fwd.traces[static_cast<std::size_t>(t)].x_bar - bwd.traces[static_cast<std::size_t>(n - 1 - t)].x_bar);
    cons_f.row(t) = s.transpose();
    cons_b.row(n - 1 - t) = -s.transpose();
  }
  grad = MirnnParams::zeros(vars, params.forward.hidden());
  direction_backward(params.forward, fin, fwd.traces, cons_f, grad.forward);
  direction_backward(params.backward, bin, bwd.traces, cons_b, grad.backward);
  return combine(fwd.loss, bwd.loss, cons);
}

void MirnnConfig::validate() const {
  if (hidden_size < 1) throw Error("hidden_size must be positive");
  if (batch_size < 1) throw Error("batch_size must be positive");
  if (window < 1) throw Error("window must be positive");
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (!(lr > 0.0)) throw Error("lr must be positive");
}

nlohmann::json mirnn_config_to_json(const MirnnConfig& config) {
  return {{"hidden_size", config.hidden_size}, {"batch_size", config.batch_size}, {"window", config.window},
          {"epochs", config.epochs},           {"lr", config.lr},                 {"seed", config.seed}};
}

MirnnConfig mirnn_config_from_json(const nlohmann::json& doc) {
  MirnnConfig config;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "hidden_size") {
        config.hidden_size = value.get<Eigen::Index>();
      } else if (key == "batch_size") {
        config.batch_size = value.get<Eigen::Index>();
      } else if (key == "window") {
        config.window = value.get<Eigen::Index>();
      } else if (key == "epochs") {
        config.epochs = value.get<Eigen::Index>();
      } else if (key == "lr") {
        config.lr = value.get<double>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else {
        throw Error("unknown MIRNN config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed MIRNN config: ") + e.what());
  }
  config.validate();
  return config;
}

std::vector<double> train(MirnnParams& params, const std::vector<MultivariateSeries>& windows,
                          const std::vector<Eigen::MatrixXd>& cfs, const MirnnConfig& config) {
  config.validate();
  if (windows.empty()) throw Error("MIRNN training needs at least one window");
  if (windows.size() != cfs.size()) throw Error("one continuous-function matrix is needed per window");

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  MirnnParams first = MirnnParams::zeros(params.forward.vars(), params.forward.hidden());
  MirnnParams second = first;
  MirnnParams batch_grad = first;
  MirnnParams grad = first;
  auto p_flat = flatten(params);
  auto m_flat = flatten(first);
  auto v_flat = flatten(second);
  auto g_flat = flatten(batch_grad);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> curve;
  long step = 0;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (Eigen::Index epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      for (auto& t : g_flat) Eigen::Map<Eigen::VectorXd>(t.data, t.size).setZero();
      for (std::size_t i = begin; i < end; ++i) {
        const MirnnLoss loss = loss_gradient(params, windows[order[i]], cfs[order[i]], grad);
        if (!std::isfinite(loss.total))
          throw Error("MIRNN training diverged at epoch " + std::to_string(epoch));
        epoch_loss += loss.total;
        auto src = flatten(grad);
        for (std::size_t j = 0; j < g_flat.size(); ++j)
          Eigen::Map<Eigen::VectorXd>(g_flat[j].data, g_flat[j].size) +=
              Eigen::Map<const Eigen::VectorXd>(src[j].data, src[j].size);
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t j = 0; j < p_flat.size(); ++j) {
        auto p = Eigen::Map<Eigen::ArrayXd>(p_flat[j].data, p_flat[j].size);
        auto m = Eigen::Map<Eigen::ArrayXd>(m_flat[j].data, m_flat[j].size);
        auto v = Eigen::Map<Eigen::ArrayXd>(v_flat[j].data, v_flat[j].size);
        const Eigen::ArrayXd g = inv * Eigen::Map<const Eigen::ArrayXd>(g_flat[j].data, g_flat[j].size);
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g.square();
        p -= config.lr * (m / c1) / ((v / c2).sqrt() + kEps);
      }
      params.forward.w_z.diagonal().setZero();
      params.backward.w_z.diagonal().setZero();
    }
    epoch_loss /= static_cast<double>(windows.size());
    if (!std::isfinite(epoch_loss)) throw Error("MIRNN training diverged at epoch " + std::to_string(epoch));
    curve.push_back(epoch_loss);
  }
  return curve;
}

namespace {

MultivariateSeries to_model_scale(const MultivariateSeries& series, const std::optional<NormalizationStats>& stats) {
  return stats ? normalize(series, *stats) : series;
}

}  // namespace

MirnnFit fit_mirnn(const MultivariateSeries& series, const ContinuousFunction& cf, const MirnnConfig& config) {
  config.validate();
  if (cf.bank.vars() != series.vars()) throw Error("variable-count mismatch between bank and series");
  const MultivariateSeries scaled = to_model_scale(series, cf.stats);
  const Eigen::MatrixXd cf_values = cf_eval_series(cf.bank, scaled.timestamps());
  const Eigen::Index length = std::min(config.window, series.rows());
  std::vector<MultivariateSeries> windows = split_windows(scaled, length);
  std::vector<Eigen::MatrixXd> cfs;
  for (std::size_t i = 0; i < windows.size(); ++i)
    cfs.push_back(cf_values.middleRows(static_cast<Eigen::Index>(i) * length, length));

  MirnnFit out;
  out.model.params = MirnnParams::random(series.vars(), config.hidden_size, config.seed);
  out.model.window = length;
  out.model.names = series.names();
  out.model.stats = cf.stats;
  out.loss_curve = train(out.model.params, windows, cfs, config);
  return out;
}

MultivariateSeries impute_mirnn(const MirnnModel& model, const MultivariateSeries& series,
                                const ContinuousFunction& cf) {
  if (cf.bank.vars() != series.vars() || model.params.forward.vars() != series.vars())
    throw Error("variable-count mismatch between model, bank and series");
  const MultivariateSeries scaled = to_model_scale(series, model.stats);
  const Eigen::MatrixXd cf_values = cf_eval_series(cf.bank, scaled.timestamps());
  Eigen::MatrixXd estimate(series.rows(), series.vars());
  for (Eigen::Index begin = 0; begin < series.rows(); begin += model.window) {
    const Eigen::Index length = std::min(model.window, series.rows() - begin);
    const BidirectionalResult r =
        bidirectional_forward(model.params, scaled.slice(begin, length), cf_values.middleRows(begin, length));
    estimate.middleRows(begin, length) = r.x_bar;
  }
  if (model.stats) estimate = denormalize_values(estimate, *model.stats);
  Eigen::MatrixXd out = (series.mask().array() != 0.0).select(series.values(), estimate);
  return complete_series(series.timestamps(), std::move(out), series.names());
}

namespace {

constexpr const char* kModelFormat = "mrbf-mirnn-model";

nlohmann::json direction_to_json(const DirectionParams& p) {
  nlohmann::json out = nlohmann::json::object();
  DirectionParams::visit(p, [&](const char* name, const auto& t) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t(r, c));
    out[name] = {{"rows", t.rows()}, {"cols", t.cols()}, {"data", data}};
  });
  return out;
}

DirectionParams direction_from_json(const nlohmann::json& doc, Eigen::Index vars, Eigen::Index hidden) {
  DirectionParams p = DirectionParams::zeros(vars, hidden);
  DirectionParams::visit(p, [&](const char* name, auto& t) {
    const auto& entry = doc.at(name);
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto data = entry.at("data").get<std::vector<double>>();
    if (rows != t.rows() || cols != t.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw Error(std::string("model tensor '") + name + "' has the wrong shape");
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = data[i++];
  });
  p.validate();
  return p;
}

}  // namespace

nlohmann::json model_to_json(const MirnnModel& model) {
  nlohmann::json doc = {{"format", kModelFormat},
                        {"version", kModelFormatVersion},
                        {"variables", model.params.forward.vars()},
                        {"hidden_size", model.params.forward.hidden()},
                        {"window", model.window},
                        {"variable_names", model.names},
                        {"forward", direction_to_json(model.params.forward)},
                        {"backward", direction_to_json(model.params.backward)}};
  doc["normalization"] = model.stats ? stats_to_json(*model.stats) : nlohmann::json(nullptr);
  return doc;
}

MirnnModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kModelFormat) throw Error("not a MIRNN model file");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("unsupported model version " + std::to_string(version) + " (expected " +
                  std::to_string(kModelFormatVersion) + ")");
    const auto vars = doc.at("variables").get<Eigen::Index>();
    const auto hidden = doc.at("hidden_size").get<Eigen::Index>();
    MirnnModel model;
    model.params.forward = direction_from_json(doc.at("forward"), vars, hidden);
    model.params.backward = direction_from_json(doc.at("backward"), vars, hidden);
    model.window = doc.at("window").get<Eigen::Index>();
    if (model.window < 1) throw Error("model window must be positive");
    model.names = doc.at("variable_names").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(model.names.size()) != vars) throw Error("model variable names length mismatch");
    if (!doc.at("normalization").is_null()) model.stats = stats_from_json(doc.at("normalization"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const MirnnModel& model, const std::string& path) { write_json_file(model_to_json(model), path); }

MirnnModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

}  // namespace mrbf

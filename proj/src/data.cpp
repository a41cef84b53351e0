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

#include "mrbf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace mrbf {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(path + ":" + std::to_string(line) + ": cannot parse number '" + cell + "'");
  return v;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      if (table.header.size() < 2) throw Error(path + ":" + std::to_string(line_no) + ": need a timestamp and at least one variable column");
      if (table.header.front() != "timestamp")
        throw Error(path + ":" + std::to_string(line_no) + ": first column must be 'timestamp'");
      continue;
    }
    if (cells.size() != table.header.size())
      throw Error(path + ":" + std::to_string(line_no) + ": ragged row (" + std::to_string(cells.size()) +
                  " cells, expected " + std::to_string(table.header.size()) + ")");
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (table.header.empty()) throw Error(path + ": empty file");
  if (table.rows.empty()) throw Error(path + ": no data rows");
  return table;
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

MultivariateSeries load_csv(const std::string& path, const std::optional<std::string>& mask_path) {
  const RawTable table = read_table(path);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto vars = static_cast<Eigen::Index>(table.header.size()) - 1;
  Eigen::VectorXd t(n);
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(n, vars, kMissing);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n, vars);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::size_t line = table.lines[static_cast<std::size_t>(i)];
    if (row[0].empty()) throw Error(path + ":" + std::to_string(line) + ": missing timestamp");
    t[i] = parse_number(row[0], path, line);
    if (i > 0 && !(t[i] > t[i - 1])) throw Error(path + ":" + std::to_string(line) + ": non-increasing timestamps");
    for (Eigen::Index m = 0; m < vars; ++m) {
      const auto& cell = row[static_cast<std::size_t>(m + 1)];
      if (cell.empty()) continue;
      values(i, m) = parse_number(cell, path, line);
      mask(i, m) = 1.0;
    }
  }
  if (mask_path) {
    const RawTable side = read_table(*mask_path);
    if (side.rows.size() != table.rows.size() || side.header.size() != table.header.size())
      throw Error(*mask_path + ": mask shape differs from " + path);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t line = side.lines[static_cast<std::size_t>(i)];
      for (Eigen::Index m = 0; m < vars; ++m) {
        const double v = parse_number(side.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(m + 1)],
                                      *mask_path, line);
        if (v != 0.0 && v != 1.0) throw Error(*mask_path + ":" + std::to_string(line) + ": mask not binary");
        if (v == 1.0 && mask(i, m) == 0.0)
          throw Error(*mask_path + ":" + std::to_string(line) + ": mask marks an empty cell as observed");
        mask(i, m) = v;
      }
    }
  }
  std::vector<std::string> names(table.header.begin() + 1, table.header.end());
  return MultivariateSeries(std::move(t), std::move(values), std::move(mask), std::move(names));
}

void save_matrix_csv(const Eigen::VectorXd& timestamps, const Eigen::MatrixXd& values,
                     const std::vector<std::string>& names, const std::string& path) {
  if (values.rows() != timestamps.size() || static_cast<Eigen::Index>(names.size()) != values.cols())
    throw Error("matrix CSV shape mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "timestamp";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (Eigen::Index n = 0; n < values.rows(); ++n) {
    out << format_number(timestamps[n]);
    for (Eigen::Index m = 0; m < values.cols(); ++m) {
      out << ',';
      if (!std::isnan(values(n, m))) out << format_number(values(n, m));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

void save_csv(const MultivariateSeries& series, const std::string& path) {
  save_matrix_csv(series.timestamps(), series.values(), series.names(), path);
}

void CorruptionSpec::validate() const {
  if (!(rate > 0.0 && rate < 1.0)) throw Error("corruption rate must lie in (0, 1)");
  if (mode == CorruptionMode::kLongTerm) {
    if (term_min < 1) throw Error("minimum missing term must be >= 1");
    if (term_min > term_max) throw Error("minimum missing term exceeds maximum");
  }
}

namespace {

GroundTruthPair make_pair(const MultivariateSeries& series, const Eigen::MatrixXd& hidden) {
  Eigen::MatrixXd mask = series.mask() - hidden;
  return {MultivariateSeries(series.timestamps(), series.filled(), std::move(mask), series.names()),
          series.values(), hidden};
}

Eigen::Index budget_for(const MultivariateSeries& series, double rate) {
  return static_cast<Eigen::Index>(std::llround(rate * static_cast<double>(series.observed_count())));
}

void check_budget(const MultivariateSeries& series, Eigen::Index budget) {
  Eigen::Index hideable = 0;
  for (Eigen::Index m = 0; m < series.vars(); ++m) {
    const auto count = static_cast<Eigen::Index>(series.mask().col(m).sum());
    hideable += std::max<Eigen::Index>(0, count - 1);
  }
  if (budget > hideable)
    throw Error("missing rate would leave a variable with zero observations (" + std::to_string(budget) +
                " cells requested, " + std::to_string(hideable) + " hideable)");
}

}  // namespace

GroundTruthPair inject_random(const MultivariateSeries& series, double rate, std::uint64_t seed) {
  CorruptionSpec{CorruptionMode::kRandom, rate}.validate();
  const Eigen::Index budget = budget_for(series, rate);
  check_budget(series, budget);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index m = 0; m < series.vars(); ++m)
    for (Eigen::Index n = 0; n < series.rows(); ++n)
      if (series.observed(n, m)) cells.emplace_back(n, m);
  std::mt19937_64 rng(seed);
  std::shuffle(cells.begin(), cells.end(), rng);

  Eigen::VectorXd remaining = series.mask().colwise().sum().transpose();
  Eigen::MatrixXd hidden = Eigen::MatrixXd::Zero(series.rows(), series.vars());
  Eigen::Index count = 0;
  for (const auto& [n, m] : cells) {
    if (count == budget) break;
    if (remaining[m] <= 1.0) continue;
    hidden(n, m) = 1.0;
    remaining[m] -= 1.0;
    ++count;
  }
  return make_pair(series, hidden);
}

GroundTruthPair inject_long_term(const MultivariateSeries& series, double rate, Eigen::Index term_min,
                                 Eigen::Index term_max, std::uint64_t seed) {
  CorruptionSpec{CorruptionMode::kLongTerm, rate, term_min, term_max}.validate();
  if (term_min > series.rows()) throw Error("minimum missing term exceeds the series length");
  const Eigen::Index budget = budget_for(series, rate);
  check_budget(series, budget);

  const Eigen::Index rows = series.rows();
  const Eigen::Index vars = series.vars();
  Eigen::VectorXd remaining = series.mask().colwise().sum().transpose();
  Eigen::MatrixXd hidden = Eigen::MatrixXd::Zero(rows, vars);
  auto free_cell = [&](Eigen::Index n, Eigen::Index m) { return series.observed(n, m) && hidden(n, m) == 0.0; };
  auto touches_hidden = [&](Eigen::Index n, Eigen::Index m) {
    return (n > 0 && hidden(n - 1, m) != 0.0) || (n + 1 < rows && hidden(n + 1, m) != 0.0);
  };

  std::mt19937_64 rng(seed);
  Eigen::Index count = 0;
  constexpr int kMaxFailures = 2000;
  int failures = 0;
  while (budget - count >= term_min && failures < kMaxFailures) {
    const Eigen::Index longest = std::min({term_max, budget - count, rows});
    const Eigen::Index length = std::uniform_int_distribution<Eigen::Index>(term_min, longest)(rng);
    const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(0, vars - 1)(rng);
    const Eigen::Index start = std::uniform_int_distribution<Eigen::Index>(0, rows - length)(rng);
    bool ok = remaining[m] - static_cast<double>(length) >= 1.0;
    ok = ok && !(start > 0 && hidden(start - 1, m) != 0.0) && !(start + length < rows && hidden(start + length, m) != 0.0);
    for (Eigen::Index n = start; ok && n < start + length; ++n) ok = free_cell(n, m);
    if (!ok) {
      ++failures;
      continue;
    }
    failures = 0;
    hidden.block(start, m, length, 1).setOnes();
    remaining[m] -= static_cast<double>(length);
    count += length;
  }

  // Remainder as isolated single cells, preferring cells not adjacent to a run.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> isolated, adjacent;
  for (Eigen::Index m = 0; m < vars; ++m)
    for (Eigen::Index n = 0; n < rows; ++n)
      if (free_cell(n, m)) (touches_hidden(n, m) ? adjacent : isolated).emplace_back(n, m);
  std::shuffle(isolated.begin(), isolated.end(), rng);
  std::shuffle(adjacent.begin(), adjacent.end(), rng);
  for (const auto* pool : {&isolated, &adjacent}) {
    for (const auto& [n, m] : *pool) {
      if (count == budget) break;
      if (remaining[m] <= 1.0 || hidden(n, m) != 0.0) continue;
      if (pool == &isolated && touches_hidden(n, m)) continue;
      hidden(n, m) = 1.0;
      remaining[m] -= 1.0;
      ++count;
    }
  }
  for (const auto& [n, m] : isolated) {
    if (count == budget) break;
    if (remaining[m] <= 1.0 || hidden(n, m) != 0.0) continue;
    hidden(n, m) = 1.0;
    remaining[m] -= 1.0;
    ++count;
  }
  if (count != budget) throw Error("could not place the requested number of missing cells");
  return make_pair(series, hidden);
}

GroundTruthPair corrupt(const MultivariateSeries& series, const CorruptionSpec& spec) {
  spec.validate();
  if (spec.mode == CorruptionMode::kRandom) return inject_random(series, spec.rate, spec.seed);
  return inject_long_term(series, spec.rate, spec.term_min, spec.term_max, spec.seed);
}

void save_pair(const GroundTruthPair& pair, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  save_csv(pair.corrupted, (root / "corrupted.csv").string());
  save_matrix_csv(pair.corrupted.timestamps(), pair.truth, pair.corrupted.names(), (root / "truth.csv").string());
  save_matrix_csv(pair.corrupted.timestamps(), pair.eval_mask, pair.corrupted.names(),
                  (root / "eval_mask.csv").string());
}

GroundTruthPair load_pair(const std::string& dir) {
  const std::filesystem::path root(dir);
  MultivariateSeries corrupted = load_csv((root / "corrupted.csv").string());
  const MultivariateSeries truth = load_csv((root / "truth.csv").string());
  const MultivariateSeries eval = load_csv((root / "eval_mask.csv").string());
  if (truth.rows() != corrupted.rows() || truth.vars() != corrupted.vars() || eval.rows() != corrupted.rows() ||
      eval.vars() != corrupted.vars())
    throw Error(dir + ": corrupted, truth and eval_mask shapes differ");
  Eigen::MatrixXd eval_mask = eval.filled();
  for (Eigen::Index n = 0; n < eval_mask.rows(); ++n) {
    for (Eigen::Index m = 0; m < eval_mask.cols(); ++m) {
      const double v = eval_mask(n, m);
      if (v != 0.0 && v != 1.0) throw Error(dir + ": eval_mask not binary");
      if (v == 1.0 && corrupted.observed(n, m)) throw Error(dir + ": a cell is both observed and evaluation-hidden");
      if (v == 1.0 && !truth.observed(n, m)) throw Error(dir + ": ground truth missing at an evaluation cell");
    }
  }
  return {std::move(corrupted), truth.values(), std::move(eval_mask)};
}

Eigen::VectorXd lorenz96_derivative(const Eigen::VectorXd& x, double forcing) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd dx(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double next = x[(i + 1) % d];
    const double prev = x[(i + d - 1) % d];
    const double prev2 = x[(i + d - 2) % d];
    dx[i] = (next - prev2) * prev - x[i] + forcing;
  }
  return dx;
}

Eigen::VectorXd lorenz96_rk4_step(const Eigen::VectorXd& x, double forcing, double dt) {
  const Eigen::VectorXd k1 = lorenz96_derivative(x, forcing);
  const Eigen::VectorXd k2 = lorenz96_derivative(x + 0.5 * dt * k1, forcing);
  const Eigen::VectorXd k3 = lorenz96_derivative(x + 0.5 * dt * k2, forcing);
  const Eigen::VectorXd k4 = lorenz96_derivative(x + dt * k3, forcing);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

MultivariateSeries lorenz96(const Lorenz96Config& config) {
  if (config.dims < 4) throw Error("Lorenz-96 needs at least 4 dimensions");
  if (config.steps < 1) throw Error("Lorenz-96 needs at least one step");
  if (!(config.dt > 0.0)) throw Error("Lorenz-96 dt must be positive");
  if (config.burn_in < 0) throw Error("Lorenz-96 burn-in must be non-negative");
  std::mt19937_64 rng(config.seed);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(config.dims, config.forcing);
  x[std::uniform_int_distribution<Eigen::Index>(0, config.dims - 1)(rng)] += config.perturbation;

  auto advance = [&](Eigen::Index step) {
    x = lorenz96_rk4_step(x, config.forcing, config.dt);
    if (!x.allFinite())
      throw Error("Lorenz-96 state blew up at step " + std::to_string(step) + "; use a smaller dt");
  };
  for (Eigen::Index i = 0; i < config.burn_in; ++i) advance(i);

  Eigen::MatrixXd values(config.steps, config.dims);
  Eigen::VectorXd t(config.steps);
  for (Eigen::Index n = 0; n < config.steps; ++n) {
    if (n > 0) advance(config.burn_in + n);
    values.row(n) = x.transpose();
    t[n] = static_cast<double>(n);
  }
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < config.dims; ++i) names.push_back("x" + std::to_string(i));
  return complete_series(std::move(t), std::move(values), std::move(names));
}

}  // namespace mrbf

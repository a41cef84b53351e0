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

#include "mrbf/grbf.hpp"

namespace mrbf {

MultivariateSeries impute_with_cf(const MultivariateSeries& series, const GrbfBank& bank) {
  if (bank.vars() != series.vars())
    throw Error("variable-count mismatch: bank has " + std::to_string(bank.vars()) +
                " variables, series has " + std::to_string(series.vars()));
  const Eigen::MatrixXd cf = cf_eval_series(bank, series.timestamps());
  Eigen::MatrixXd out = (series.mask().array() != 0.0).select(series.values(), cf);
  return complete_series(series.timestamps(), std::move(out), series.names());
}

Eigen::MatrixXd ContinuousFunction::evaluate(const Eigen::VectorXd& timestamps) const {
  Eigen::MatrixXd cf = cf_eval_series(bank, timestamps);
  return stats ? denormalize_values(cf, *stats) : cf;
}

MultivariateSeries ContinuousFunction::impute(const MultivariateSeries& series) const {
  if (bank.vars() != series.vars())
    throw Error("variable-count mismatch: bank has " + std::to_string(bank.vars()) +
                " variables, series has " + std::to_string(series.vars()));
  const Eigen::MatrixXd cf = evaluate(series.timestamps());
  Eigen::MatrixXd out = (series.mask().array() != 0.0).select(series.values(), cf);
  return complete_series(series.timestamps(), std::move(out), series.names());
}

}  // namespace mrbf

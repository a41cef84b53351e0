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

#include "mrbf/bank_io.hpp"

#include <fstream>
#include <sstream>

namespace mrbf {

namespace {

constexpr const char* kBankFormat = "mrbf-grbf-bank";

Eigen::VectorXd vector_from_json(const nlohmann::json& arr, const char* field) {
  if (!arr.is_array()) throw Error(std::string("bank field '") + field + "' is not an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

nlohmann::json stats_to_json(const NormalizationStats& stats) {
  return {{"mean", vector_to_json(stats.mean)}, {"std", vector_to_json(stats.std)}};
}

NormalizationStats stats_from_json(const nlohmann::json& doc) {
  NormalizationStats stats{vector_from_json(doc.at("mean"), "mean"), vector_from_json(doc.at("std"), "std")};
  if (stats.mean.size() != stats.std.size()) throw Error("normalization stats length mismatch");
  return stats;
}

nlohmann::json bank_to_json(const ContinuousFunction& cf) {
  const GrbfBank& bank = cf.bank;
  nlohmann::json weights = nlohmann::json::array();
  for (Eigen::Index k = 0; k < bank.size(); ++k) {
    const Eigen::VectorXd row = bank.weights.row(k).transpose();
    weights.push_back(vector_to_json(row));
  }
  nlohmann::json doc = {
      {"format", kBankFormat},
      {"version", kBankFormatVersion},
      {"variables", bank.vars()},
      {"variable_names", cf.names},
      {"centers", vector_to_json(bank.centers)},
      {"sigmas", vector_to_json(bank.sigmas)},
      {"weights", weights},
      {"stage_boundaries", bank.stage_boundaries},
  };
  doc["normalization"] = cf.stats ? stats_to_json(*cf.stats) : nlohmann::json(nullptr);
  return doc;
}

ContinuousFunction bank_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kBankFormat) throw Error("not a GRBF bank file");
    const int version = doc.at("version").get<int>();
    if (version != kBankFormatVersion)
      throw Error("unsupported bank version " + std::to_string(version) + " (expected " +
                  std::to_string(kBankFormatVersion) + ")");
    ContinuousFunction cf;
    const auto vars = doc.at("variables").get<Eigen::Index>();
    cf.bank = GrbfBank(vars);
    cf.bank.centers = vector_from_json(doc.at("centers"), "centers");
    cf.bank.sigmas = vector_from_json(doc.at("sigmas"), "sigmas");
    const auto& weights = doc.at("weights");
    cf.bank.weights.resize(static_cast<Eigen::Index>(weights.size()), vars);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k].size() != static_cast<std::size_t>(vars)) throw Error("bank weight row has wrong length");
      for (Eigen::Index m = 0; m < vars; ++m)
        cf.bank.weights(static_cast<Eigen::Index>(k), m) = weights[k][static_cast<std::size_t>(m)].get<double>();
    }
    cf.bank.stage_boundaries = doc.at("stage_boundaries").get<std::vector<Eigen::Index>>();
    cf.names = doc.at("variable_names").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(cf.names.size()) != vars) throw Error("bank variable names length mismatch");
    if (!doc.at("normalization").is_null()) {
      cf.stats = stats_from_json(doc.at("normalization"));
      if (cf.stats->mean.size() != vars) throw Error("bank normalization length mismatch");
    }
    cf.bank.validate();
    return cf;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed bank file: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path);
}

void save_bank(const ContinuousFunction& cf, const std::string& path) {
  cf.bank.validate();
  write_json_file(bank_to_json(cf), path);
}

ContinuousFunction load_bank(const std::string& path) { return bank_from_json(read_json_file(path)); }

}  // namespace mrbf

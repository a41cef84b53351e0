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

// Versioned JSON serialization of fitted banks.

#ifndef MRBF_BANK_IO_HPP_
#define MRBF_BANK_IO_HPP_

#include <string>

#include <nlohmann/json.hpp>

#include "mrbf/grbf.hpp"

namespace mrbf {

inline constexpr int kBankFormatVersion = 1;

nlohmann::json bank_to_json(const ContinuousFunction& cf);
ContinuousFunction bank_from_json(const nlohmann::json& doc);

void save_bank(const ContinuousFunction& cf, const std::string& path);
ContinuousFunction load_bank(const std::string& path);

// Shared helpers for the other JSON formats.
nlohmann::json stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& doc);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& doc, const std::string& path);

}  // namespace mrbf

#endif  // MRBF_BANK_IO_HPP_

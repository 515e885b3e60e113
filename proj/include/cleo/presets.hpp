// Copyright 2026 The CLEO Authors. All Rights Reserved.
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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cleo/error.hpp"
#include "cleo/preset_data.hpp"  // generated from presets/*.json at configure time
#include "cleo/sequence_io.hpp"

namespace cleo {

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : detail::kPresetSources) out.emplace_back(p.name);
  return out;
}

inline TaskSequence load_preset(std::string_view name) {
  for (const auto& p : detail::kPresetSources) {
    if (p.name == name) return parse_sequence(p.json);
  }
  std::string valid;
  for (const auto& p : detail::kPresetSources) {
    if (!valid.empty()) valid += ", ";
    valid += p.name;
  }
  throw ConfigError("unknown preset '" + std::string(name) +
                    "'; valid presets: " + valid);
}

/// Training epochs per task: 50 for the street-scene hierarchies, 30
/// otherwise.
inline std::size_t default_epochs(std::string_view preset) {
  return preset.starts_with("cs_") ? 50 : 30;
}

}  // namespace cleo

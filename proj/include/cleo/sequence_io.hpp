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

// Text and JSON persistence for ontologies, task sequences and label grids.
//
// Sequence documents refer to classes by name; ids follow declaration order:
//   {"classes": [{"id": 0, "name": "background", "parent": null}, ...],
//    "tasks": [{"t": 0, "introduced": [...],
//               "splits": [{"parent": ..., "children": [...],
//                           "exhaustive": false}]}, ...]}

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "cleo/error.hpp"
#include "cleo/ontology.hpp"
#include "json.hpp"

namespace cleo {

inline TaskSequence parse_sequence(const nlohmann::json& doc) {
  try {
    std::vector<ClassNode> nodes;
    std::unordered_map<std::string, ClassId> ids;
    const auto& classes = doc.at("classes");
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const std::string name = classes[i].at("name").get<std::string>();
      if (classes[i].contains("id") &&
          classes[i].at("id").get<std::size_t>() != i)
        throw ConfigError("class '" + name + "' declares id " +
                          classes[i].at("id").dump() + " at position " +
                          std::to_string(i));
      ids.emplace(name, static_cast<ClassId>(i));
      nodes.push_back({static_cast<ClassId>(i), name, std::nullopt});
    }
    auto lookup = [&](const nlohmann::json& v) {
      const std::string name = v.get<std::string>();
      auto it = ids.find(name);
      if (it == ids.end()) throw ConfigError("unknown class '" + name + "'");
      return it->second;
    };
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const auto& p = classes[i].value("parent", nlohmann::json());
      if (!p.is_null()) nodes[i].parent = lookup(p);
    }
    TaskSequence seq{Ontology(std::move(nodes)), {}};
    for (const auto& jt : doc.at("tasks")) {
      TaskSpec task;
      task.index = jt.at("t").get<std::size_t>();
      for (const auto& c : jt.at("introduced")) task.introduced.push_back(lookup(c));
      if (jt.contains("splits")) {
        for (const auto& js : jt.at("splits")) {
          SplitSpec s;
          s.parent = lookup(js.at("parent"));
          for (const auto& c : js.at("children")) s.children.push_back(lookup(c));
          s.exhaustive = js.value("exhaustive", false);
          task.splits.push_back(std::move(s));
        }
      } else if (task.index == 0) {
        // The first task implicitly splits everything it introduces from bg.
        task.splits.push_back({kBackground, task.introduced, false});
      }
      seq.tasks.push_back(std::move(task));
    }
    return seq;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed sequence document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid ontology: ") + e.what());
  }
}

inline TaskSequence parse_sequence(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sequence is not valid JSON: ") + e.what());
  }
  return parse_sequence(doc);
}

inline TaskSequence parse_sequence(const std::string& text) {
  return parse_sequence(std::string_view(text));
}

inline TaskSequence parse_sequence(const char* text) {
  return parse_sequence(std::string_view(text));
}

inline nlohmann::json sequence_to_json(const TaskSequence& seq) {
  const Ontology& onto = seq.ontology;
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassNode& n : onto.nodes()) {
    classes.push_back({{"id", n.id},
                       {"name", n.name},
                       {"parent", n.parent ? nlohmann::json(onto.name(*n.parent))
                                           : nlohmann::json()}});
  }
  auto names = [&](const std::vector<ClassId>& ids) {
    nlohmann::json out = nlohmann::json::array();
    for (ClassId c : ids) out.push_back(onto.name(c));
    return out;
  };
  nlohmann::json tasks = nlohmann::json::array();
  for (const TaskSpec& t : seq.tasks) {
    nlohmann::json splits = nlohmann::json::array();
    for (const SplitSpec& s : t.splits) {
      splits.push_back({{"parent", onto.name(s.parent)},
                        {"children", names(s.children)},
                        {"exhaustive", s.exhaustive}});
    }
    tasks.push_back(
        {{"t", t.index}, {"introduced", names(t.introduced)}, {"splits", splits}});
  }
  return {{"classes", classes}, {"tasks", tasks}};
}

inline std::string serialize_sequence(const TaskSequence& seq) {
  return sequence_to_json(seq).dump(1) + "\n";
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline TaskSequence load_sequence_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open sequence file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sequence(ss.str());
}

// LabelGrid text format: "H W" on the first line, then H lines of W
// space-separated integers.

inline void write_label_grid(std::ostream& out, const LabelGrid& grid) {
  out << grid.height << ' ' << grid.width << '\n';
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      if (c) out << ' ';
      out << grid.at(r, c);
    }
    out << '\n';
  }
}

inline std::string label_grid_to_string(const LabelGrid& grid) {
  std::ostringstream ss;
  write_label_grid(ss, grid);
  return ss.str();
}

inline LabelGrid read_label_grid(std::istream& in) {
  long long h = -1, w = -1;
  if (!(in >> h >> w) || h < 0 || w < 0)
    throw DataError("label grid: bad header");
  LabelGrid grid(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
  for (auto& v : grid.labels) {
    long long x = -1;
    if (!(in >> x) || x < 0 || x > static_cast<long long>(UINT32_MAX))
      throw DataError("label grid: expected " + std::to_string(h * w) +
                      " non-negative labels");
    v = static_cast<ClassId>(x);
  }
  return grid;
}

inline LabelGrid parse_label_grid(const std::string& text) {
  std::istringstream ss(text);
  return read_label_grid(ss);
}

}  // namespace cleo

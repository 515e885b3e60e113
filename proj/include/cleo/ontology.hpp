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

// Class hierarchies, evolving task sequences, and the label-space algebra
// that everything else is built on: which classes exist at task t, which
// classes evolve, how fine-grained ground truth projects into a task's
// label space, and how classes fall into the unsplit / split / retained
// evaluation groups after the last task.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cleo/error.hpp"

namespace cleo {

using ClassId = std::uint32_t;
inline constexpr ClassId kBackground = 0;

struct ClassNode {
  ClassId id = 0;
  std::string name;
  std::optional<ClassId> parent;

  bool operator==(const ClassNode&) const = default;
};

/// Rooted class forest. Ids are dense and equal to declaration order; id 0 is
/// the background class and has no parent.
class Ontology {
 public:
  explicit Ontology(std::vector<ClassNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("ontology has no classes");
    if (nodes_[kBackground].parent)
      throw std::invalid_argument("background class must not have a parent");
    children_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const ClassNode& n = nodes_[i];
      if (n.id != i)
        throw std::invalid_argument("class ids must be dense and ordered: '" +
                                    n.name + "'");
      if (n.name.empty()) throw std::invalid_argument("empty class name");
      if (!by_name_.emplace(n.name, n.id).second)
        throw std::invalid_argument("duplicate class name '" + n.name + "'");
      if (n.parent) {
        if (*n.parent >= nodes_.size() || *n.parent == n.id)
          throw std::invalid_argument("invalid parent for '" + n.name + "'");
        children_[*n.parent].push_back(n.id);
      }
    }
    for (const ClassNode& n : nodes_) {
      std::size_t steps = 0;
      for (auto p = n.parent; p; p = nodes_[*p].parent) {
        if (++steps > nodes_.size())
          throw std::invalid_argument("cycle through '" + n.name + "'");
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }
  bool contains(ClassId id) const { return id < nodes_.size(); }
  const std::vector<ClassNode>& nodes() const { return nodes_; }

  const ClassNode& node(ClassId id) const {
    if (!contains(id))
      throw std::out_of_range("unknown class id " + std::to_string(id));
    return nodes_[id];
  }
  const std::string& name(ClassId id) const { return node(id).name; }
  std::optional<ClassId> parent(ClassId id) const { return node(id).parent; }
  std::span<const ClassId> children(ClassId id) const {
    node(id);
    return children_[id];
  }
  bool is_leaf(ClassId id) const { return children(id).empty(); }

  std::optional<ClassId> find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }
  ClassId id_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw std::invalid_argument("unknown class '" + std::string(name) + "'");
  }

  /// True when `ancestor` lies strictly above `id`.
  bool is_descendant(ClassId id, ClassId ancestor) const {
    for (auto p = parent(id); p; p = nodes_[*p].parent) {
      if (*p == ancestor) return true;
    }
    return false;
  }

  /// Classes that may label a pixel at the finest level: background plus
  /// every leaf, in id order.
  std::vector<ClassId> emitting_classes() const {
    std::vector<ClassId> out{kBackground};
    for (ClassId id = 1; id < size(); ++id) {
      if (children_[id].empty()) out.push_back(id);
    }
    return out;
  }

  bool operator==(const Ontology& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<ClassNode> nodes_;
  std::vector<std::vector<ClassId>> children_;
  std::unordered_map<std::string, ClassId> by_name_;
};

struct SplitSpec {
  ClassId parent = kBackground;
  std::vector<ClassId> children;
  bool exhaustive = false;

  bool operator==(const SplitSpec&) const = default;
};

struct TaskSpec {
  std::size_t index = 0;
  std::vector<ClassId> introduced;
  std::vector<SplitSpec> splits;

  bool operator==(const TaskSpec&) const = default;
};

struct TaskSequence {
  Ontology ontology;
  std::vector<TaskSpec> tasks;

  std::size_t last_task() const {
    if (tasks.empty()) throw std::invalid_argument("sequence has no tasks");
    return tasks.size() - 1;
  }
  bool operator==(const TaskSequence&) const = default;
};

/// Per-pixel class labels, row-major.
struct LabelGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<ClassId> labels;

  LabelGrid() = default;
  LabelGrid(std::size_t h, std::size_t w, ClassId fill = kBackground)
      : height(h), width(w), labels(h * w, fill) {}

  std::size_t size() const { return labels.size(); }
  ClassId& at(std::size_t row, std::size_t col) {
    return labels[row * width + col];
  }
  ClassId at(std::size_t row, std::size_t col) const {
    return labels[row * width + col];
  }
  bool operator==(const LabelGrid&) const = default;
};

struct Violation {
  std::size_t task = 0;
  std::string kind;
  std::string detail;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
  }
};

struct ClassGroupAssignment {
  std::vector<ClassId> unsplit;
  std::vector<ClassId> split;
  /// Partially split parent -> the finest classes it still stands for.
  std::map<ClassId, std::vector<ClassId>> retained;
  /// unsplit + split + retained parents, in label-space order.
  std::vector<ClassId> evaluated;
};

struct InferredSplits {
  std::vector<SplitSpec> splits;
  /// Introduced classes with no labelled pixel; their parent defaulted to bg.
  std::vector<ClassId> unobserved;
};

namespace detail {

inline constexpr std::size_t kNever = static_cast<std::size_t>(-1);

/// Task at which each class is first introduced (background: task 0).
inline std::vector<std::size_t> introduction_tasks(const TaskSequence& seq) {
  std::vector<std::size_t> intro(seq.ontology.size(), kNever);
  intro[kBackground] = 0;
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    for (ClassId c : seq.tasks[t].introduced) {
      if (c < intro.size() && intro[c] == kNever && c != kBackground)
        intro[c] = t;
    }
  }
  return intro;
}

/// Nearest ancestor-or-self of `id` introduced at or before task `t`.
inline ClassId nearest_known(const Ontology& onto,
                             const std::vector<std::size_t>& intro, ClassId id,
                             std::size_t t) {
  for (std::optional<ClassId> c = id; c; c = onto.parent(*c)) {
    if (intro[*c] != kNever && intro[*c] <= t) return *c;
  }
  return kBackground;
}

/// Finest classes under `parent` not covered by any class introduced at or
/// before `t` (strictly below `parent`). Background always keeps itself.
inline std::vector<ClassId> remainder(const TaskSequence& seq,
                                      const std::vector<std::size_t>& intro,
                                      ClassId parent, std::size_t t) {
  const Ontology& onto = seq.ontology;
  std::vector<ClassId> out;
  for (ClassId leaf : onto.emitting_classes()) {
    if (leaf == parent) {
      if (leaf == kBackground) out.push_back(leaf);
      continue;
    }
    const bool under = parent == kBackground
                           ? true
                           : onto.is_descendant(leaf, parent);
    if (!under) continue;
    bool covered = false;
    for (std::optional<ClassId> c = leaf; c && *c != parent;
         c = onto.parent(*c)) {
      if (intro[*c] != kNever && intro[*c] <= t) {
        covered = true;
        break;
      }
    }
    if (!covered) out.push_back(leaf);
  }
  return out;
}

inline std::string names(const Ontology& onto, std::span<const ClassId> ids) {
  std::string out;
  for (ClassId c : ids) {
    if (!out.empty()) out += ", ";
    out += onto.contains(c) ? onto.name(c) : "#" + std::to_string(c);
  }
  return out;
}

inline void check_task(const TaskSequence& seq, std::size_t t,
                       std::size_t lo) {
  if (t < lo || t > seq.last_task())
    throw std::out_of_range("task index " + std::to_string(t) +
                            " outside [" + std::to_string(lo) + ", " +
                            std::to_string(seq.last_task()) + "]");
}

}  // namespace detail

inline ValidationResult validate_sequence(const TaskSequence& seq) {
  ValidationResult result;
  const Ontology& onto = seq.ontology;
  auto report = [&](std::size_t t, std::string kind, std::string detail) {
    result.violations.push_back({t, std::move(kind), std::move(detail)});
  };
  auto label = [&](ClassId c) {
    return onto.contains(c) ? "'" + onto.name(c) + "'"
                            : "#" + std::to_string(c);
  };
  if (seq.tasks.empty()) {
    report(0, "empty sequence", "sequence has no tasks");
    return result;
  }

  std::vector<std::size_t> first_seen(onto.size(), detail::kNever);
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    const TaskSpec& task = seq.tasks[t];
    if (task.index != t)
      report(t, "task index",
             "task at position " + std::to_string(t) + " declares index " +
                 std::to_string(task.index));
    for (ClassId c : task.introduced) {
      if (!onto.contains(c)) {
        report(t, "unknown class", label(c));
        continue;
      }
      if (c == kBackground) {
        report(t, "background introduced", "background cannot be introduced");
        continue;
      }
      if (first_seen[c] == t) {
        report(t, "duplicate class", label(c) + " listed twice");
      } else if (first_seen[c] != detail::kNever) {
        report(t, "disjointness",
               label(c) + " already introduced at task " +
                   std::to_string(first_seen[c]));
      } else {
        first_seen[c] = t;
      }
    }
  }

  const auto intro = detail::introduction_tasks(seq);
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    const TaskSpec& task = seq.tasks[t];
    std::map<ClassId, int> parent_count;
    std::vector<ClassId> parents_seen;
    for (const SplitSpec& s : task.splits) {
      if (!onto.contains(s.parent)) {
        report(t, "unknown class", "split parent " + label(s.parent));
        continue;
      }
      if (std::find(parents_seen.begin(), parents_seen.end(), s.parent) !=
          parents_seen.end())
        report(t, "duplicate parent", label(s.parent) + " split twice");
      parents_seen.push_back(s.parent);
      const bool parent_known =
          s.parent == kBackground ||
          (intro[s.parent] != detail::kNever && intro[s.parent] < t);
      if (!parent_known)
        report(t, "parent not yet known",
               label(s.parent) + " is not in the label space before task " +
                   std::to_string(t));
      if (s.children.empty())
        report(t, "empty split", label(s.parent) + " has no children");
      for (std::size_t i = 0; i < s.children.size(); ++i) {
        const ClassId child = s.children[i];
        if (!onto.contains(child)) {
          report(t, "unknown class", "split child " + label(child));
          continue;
        }
        if (child == s.parent || child == kBackground ||
            std::find(s.children.begin(), s.children.begin() + i, child) !=
                s.children.begin() + i) {
          report(t, "invalid child",
                 label(child) + " in split of " + label(s.parent));
          continue;
        }
        ++parent_count[child];
        if (std::find(task.introduced.begin(), task.introduced.end(), child) ==
            task.introduced.end()) {
          report(t, "child not introduced",
                 label(child) + " split from " + label(s.parent) +
                     " is not introduced at this task");
          continue;
        }
        // The split parent must be the nearest ancestor known before t.
        ClassId expected = kBackground;
        if (auto p = onto.parent(child); p && t > 0)
          expected = detail::nearest_known(onto, intro, *p, t - 1);
        if (expected != s.parent)
          report(t, "parent mismatch",
                 label(child) + " descends from " + label(expected) +
                     ", not " + label(s.parent));
      }
      if (parent_known) {
        const auto rest = detail::remainder(seq, intro, s.parent, t);
        if (s.exhaustive && !rest.empty())
          report(t, "exhaustive split leaves remainder",
                 label(s.parent) + " still covers " +
                     detail::names(onto, rest));
        if (!s.exhaustive && rest.empty())
          report(t, "empty retained remainder",
                 label(s.parent) + " keeps no content after the split");
      }
    }
    for (ClassId c : task.introduced) {
      if (!onto.contains(c) || c == kBackground) continue;
      const int n = parent_count[c];
      if (n == 0)
        report(t, "orphan class", label(c) + " is not a child of any split");
      else if (n > 1)
        report(t, "multiple parents", label(c) + " is split from " +
                                          std::to_string(n) + " parents");
      for (auto p = onto.parent(c); p; p = onto.parent(*p)) {
        if (intro[*p] != detail::kNever && intro[*p] > t) {
          report(intro[*p], "ancestor introduced after descendant",
                 label(*p) + " follows its descendant " + label(c));
        }
      }
    }
  }
  return result;
}

/// Background followed by every class introduced up to task t, in
/// introduction order. Position in this list is the logit index.
inline std::vector<ClassId> label_space_at(const TaskSequence& seq,
                                           std::size_t t) {
  detail::check_task(seq, t, 0);
  std::vector<ClassId> out{kBackground};
  for (std::size_t i = 0; i <= t; ++i) {
    const auto& intro = seq.tasks[i].introduced;
    out.insert(out.end(), intro.begin(), intro.end());
  }
  return out;
}

/// Parents evolving at task t (background when entirely new classes appear).
inline std::vector<ClassId> evolving_set(const TaskSequence& seq,
                                         std::size_t t) {
  detail::check_task(seq, t, 1);
  std::vector<ClassId> out;
  for (const SplitSpec& s : seq.tasks[t].splits) out.push_back(s.parent);
  return out;
}

/// Ground truth as annotated at task t: pixels whose finest class falls under
/// a class of C_t carry that class, everything else is background.
inline LabelGrid project_ground_truth(const TaskSequence& seq, std::size_t t,
                                      const LabelGrid& finest) {
  detail::check_task(seq, t, 0);
  const auto intro = detail::introduction_tasks(seq);
  std::vector<ClassId> lut(seq.ontology.size());
  for (ClassId c = 0; c < lut.size(); ++c) {
    const ClassId known = detail::nearest_known(seq.ontology, intro, c, t);
    lut[c] = (known != kBackground && intro[known] == t) ? known : kBackground;
  }
  LabelGrid out(finest.height, finest.width);
  for (std::size_t i = 0; i < finest.size(); ++i) {
    const ClassId c = finest.labels[i];
    if (c >= lut.size())
      throw DataError("finest label " + std::to_string(c) +
                      " is not a class of the ontology");
    out.labels[i] = lut[c];
  }
  return out;
}

/// Class id -> the class it is evaluated as after task t.
inline std::vector<ClassId> eval_map_at(const TaskSequence& seq,
                                        std::size_t t) {
  detail::check_task(seq, t, 0);
  const auto intro = detail::introduction_tasks(seq);
  std::vector<ClassId> out(seq.ontology.size());
  for (ClassId c = 0; c < out.size(); ++c)
    out[c] = detail::nearest_known(seq.ontology, intro, c, t);
  return out;
}

inline std::vector<ClassId> final_eval_map(const TaskSequence& seq) {
  return eval_map_at(seq, seq.last_task());
}

/// Classes that receive evaluation pixels after task t (background excluded),
/// in label-space order. Parents split exhaustively by t are absent.
inline std::vector<ClassId> evaluated_classes_at(const TaskSequence& seq,
                                                 std::size_t t) {
  const auto map = eval_map_at(seq, t);
  std::vector<bool> hit(seq.ontology.size(), false);
  for (ClassId leaf : seq.ontology.emitting_classes()) hit[map[leaf]] = true;
  std::vector<ClassId> out;
  for (ClassId c : label_space_at(seq, t)) {
    if (c != kBackground && hit[c]) out.push_back(c);
  }
  return out;
}

inline ClassGroupAssignment class_groups(const TaskSequence& seq) {
  const std::size_t n = seq.last_task();
  const auto map = final_eval_map(seq);
  const auto intro = detail::introduction_tasks(seq);
  std::vector<bool> ever_parent(seq.ontology.size(), false);
  for (std::size_t t = 1; t <= n; ++t) {
    for (const SplitSpec& s : seq.tasks[t].splits) ever_parent[s.parent] = true;
  }
  ClassGroupAssignment groups;
  groups.evaluated = evaluated_classes_at(seq, n);
  for (ClassId c : groups.evaluated) {
    if (ever_parent[c]) {
      auto& leaves = groups.retained[c];
      for (ClassId leaf : seq.ontology.emitting_classes()) {
        if (leaf != c && map[leaf] == c) leaves.push_back(leaf);
      }
    } else if (intro[c] == 0) {
      groups.unsplit.push_back(c);
    } else {
      groups.split.push_back(c);
    }
  }
  return groups;
}

/// Recovers split maps for task t from the previous model's predictions: each
/// new class is assigned the teacher class predicted most often on its
/// pixels. Ties go to background, then to the lowest class id.
inline InferredSplits infer_splits(const LabelGrid& teacher_predictions,
                                   const LabelGrid& task_gt,
                                   const TaskSequence& seq, std::size_t t) {
  detail::check_task(seq, t, 1);
  if (teacher_predictions.height != task_gt.height ||
      teacher_predictions.width != task_gt.width)
    throw std::invalid_argument("prediction and ground-truth grids differ");
  const auto old_space = label_space_at(seq, t - 1);
  std::vector<bool> in_old(seq.ontology.size(), false);
  for (ClassId c : old_space) in_old[c] = true;

  InferredSplits out;
  std::vector<ClassId> order;
  std::map<ClassId, std::vector<ClassId>> groups;
  for (ClassId c_new : seq.tasks[t].introduced) {
    std::map<ClassId, std::size_t> votes;
    for (std::size_t i = 0; i < task_gt.size(); ++i) {
      if (task_gt.labels[i] != c_new) continue;
      const ClassId p = teacher_predictions.labels[i];
      if (p >= in_old.size() || !in_old[p])
        throw std::invalid_argument("teacher prediction " + std::to_string(p) +
                                    " outside the previous label space");
      ++votes[p];
    }
    ClassId parent = kBackground;
    if (votes.empty()) {
      out.unobserved.push_back(c_new);
    } else {
      std::size_t best = 0;
      for (const auto& [cls, n] : votes) best = std::max(best, n);
      auto bg = votes.find(kBackground);
      if (bg == votes.end() || bg->second != best) {
        // std::map iterates ids in ascending order: first hit is the lowest.
        for (const auto& [cls, n] : votes) {
          if (n == best) {
            parent = cls;
            break;
          }
        }
      }
    }
    if (!groups.contains(parent)) order.push_back(parent);
    groups[parent].push_back(c_new);
  }
  for (ClassId p : order) out.splits.push_back({p, groups[p], false});
  return out;
}

/// Position of each class in `space`, or -1 when absent; indexed by class id.
inline std::vector<int> index_lookup(std::span<const ClassId> space,
                                     std::size_t num_classes) {
  std::vector<int> out(num_classes, -1);
  for (std::size_t i = 0; i < space.size(); ++i)
    out.at(space[i]) = static_cast<int>(i);
  return out;
}

}  // namespace cleo

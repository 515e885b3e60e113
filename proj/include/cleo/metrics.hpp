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

// Confusion matrices, IoU and the class-group / task-wise summaries.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cleo/error.hpp"
#include "cleo/ontology.hpp"

namespace cleo {

/// counts(g, p): pixels with ground truth g predicted as p, both given as
/// positions in the evaluation label space.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(std::vector<ClassId> space, std::size_t num_classes)
      : space_(std::move(space)),
        lookup_(index_lookup(space_, num_classes)),
        counts_(space_.size() * space_.size(), 0) {}

  std::size_t size() const { return space_.size(); }
  const std::vector<ClassId>& space() const { return space_; }

  std::uint64_t count(std::size_t g, std::size_t p) const {
    return counts_[g * size() + p];
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : counts_) s += v;
    return s;
  }

  /// Index of class `c` in the evaluation space; throws DataError if absent.
  std::size_t index_of(ClassId c) const {
    if (c >= lookup_.size() || lookup_[c] < 0)
      throw DataError("label " + std::to_string(c) +
                      " is outside the evaluation space");
    return static_cast<std::size_t>(lookup_[c]);
  }

  void add(ClassId truth, ClassId predicted, std::uint64_t n = 1) {
    counts_[index_of(truth) * size() + index_of(predicted)] += n;
  }

  void accumulate(const LabelGrid& predicted, const LabelGrid& truth) {
    if (predicted.height != truth.height || predicted.width != truth.width ||
        predicted.size() != truth.size())
      throw DataError("dimension mismatch between prediction and truth");
    for (std::size_t i = 0; i < truth.size(); ++i)
      add(truth.labels[i], predicted.labels[i]);
  }

  void merge(const ConfusionMatrix& other) {
    if (other.space_ != space_)
      throw std::invalid_argument("cannot merge matrices over different spaces");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  /// TP / (TP + FP + FN), undefined when the class never occurs in either
  /// the truth or the prediction.
  std::optional<double> iou(ClassId c) const {
    const std::size_t k = index_of(c);
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < size(); ++j) {
      row += count(k, j);
      col += count(j, k);
    }
    const std::uint64_t tp = count(k, k);
    const std::uint64_t denom = row + col - tp;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(denom);
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<ClassId> space_;
  std::vector<int> lookup_;
  std::vector<std::uint64_t> counts_;
};

/// Unweighted mean over the defined values; undefined values count as 0 when
/// `undefined_as_zero` is set, otherwise they are skipped.
inline std::optional<double> mean_iou(std::span<const std::optional<double>> v,
                                      bool undefined_as_zero = false) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    } else if (undefined_as_zero) {
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

enum class ClassGroup { kUnsplit, kSplit, kRetained };

inline const char* to_string(ClassGroup g) {
  switch (g) {
    case ClassGroup::kUnsplit: return "unsplit";
    case ClassGroup::kSplit: return "split";
    case ClassGroup::kRetained: return "retained";
  }
  return "?";
}

struct ClassScore {
  ClassId id = 0;
  ClassGroup group = ClassGroup::kUnsplit;
  std::optional<double> iou;
};

struct GroupReport {
  /// Evaluated classes in label-space order.
  std::vector<ClassScore> classes;
  std::optional<double> unsplit_miou;
  std::optional<double> split_miou;
  std::optional<double> retained_miou;
  /// Pooled mean over split and retained classes.
  std::optional<double> split_retained_miou;
  std::optional<double> all_miou;
};

inline GroupReport group_report(const ConfusionMatrix& cm,
                                const ClassGroupAssignment& groups,
                                bool undefined_as_zero = false) {
  GroupReport r;
  std::vector<std::optional<double>> un, sp, re, all;
  for (ClassId c : groups.evaluated) {
    ClassScore s{c, ClassGroup::kSplit, cm.iou(c)};
    if (groups.retained.count(c)) {
      s.group = ClassGroup::kRetained;
      re.push_back(s.iou);
    } else if (std::find(groups.unsplit.begin(), groups.unsplit.end(), c) !=
               groups.unsplit.end()) {
      s.group = ClassGroup::kUnsplit;
      un.push_back(s.iou);
    } else {
      sp.push_back(s.iou);
    }
    all.push_back(s.iou);
    r.classes.push_back(s);
  }
  r.unsplit_miou = mean_iou(un, undefined_as_zero);
  r.split_miou = mean_iou(sp, undefined_as_zero);
  r.retained_miou = mean_iou(re, undefined_as_zero);
  std::vector<std::optional<double>> sr = sp;
  sr.insert(sr.end(), re.begin(), re.end());
  r.split_retained_miou = mean_iou(sr, undefined_as_zero);
  r.all_miou = mean_iou(all, undefined_as_zero);
  return r;
}

struct TaskwiseReport {
  /// Mean IoU per task column; classes of column t were introduced at t,
  /// and column 0 also holds every retained parent.
  std::vector<std::optional<double>> tasks;
  std::optional<double> all;
};

inline TaskwiseReport taskwise_report(const ConfusionMatrix& cm,
                                      const TaskSequence& seq,
                                      const ClassGroupAssignment& groups,
                                      bool undefined_as_zero = false) {
  const auto intro = detail::introduction_tasks(seq);
  std::vector<std::vector<std::optional<double>>> cols(seq.tasks.size());
  std::vector<std::optional<double>> all;
  for (ClassId c : groups.evaluated) {
    const auto v = cm.iou(c);
    const std::size_t t = groups.retained.count(c) ? 0 : intro[c];
    cols.at(t).push_back(v);
    all.push_back(v);
  }
  TaskwiseReport r;
  for (const auto& col : cols) r.tasks.push_back(mean_iou(col, undefined_as_zero));
  r.all = mean_iou(all, undefined_as_zero);
  return r;
}

namespace csv {

inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// Fixed six-decimal rendering; undefined values become an empty field.
inline std::string number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace csv

inline void write_group_csv(std::ostream& out, const GroupReport& r,
                            const Ontology& onto) {
  out << "class,group,iou\n";
  for (const ClassScore& s : r.classes)
    out << csv::field(onto.name(s.id)) << ',' << to_string(s.group) << ','
        << csv::number(s.iou) << '\n';
  out << "unsplit,mean," << csv::number(r.unsplit_miou) << '\n';
  out << "split,mean," << csv::number(r.split_miou) << '\n';
  out << "retained,mean," << csv::number(r.retained_miou) << '\n';
  out << "all,mean," << csv::number(r.all_miou) << '\n';
}

inline void write_taskwise_header(std::ostream& out, std::size_t tasks) {
  out << "method";
  for (std::size_t t = 0; t < tasks; ++t) out << ",task_" << t;
  out << ",all\n";
}

inline void write_taskwise_row(std::ostream& out, const std::string& method,
                               const TaskwiseReport& r) {
  out << csv::field(method);
  for (const auto& v : r.tasks) out << ',' << csv::number(v);
  out << ',' << csv::number(r.all) << '\n';
}

}  // namespace cleo

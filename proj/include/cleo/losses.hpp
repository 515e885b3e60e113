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

// Softmax cross-entropy and the three distillation objectives for continual
// segmentation. A distillation mode is expressed as a grouping table from
// student logits to teacher classes:
//
//   standard  old classes keep their own mass, new classes are dropped and
//             the remaining old-class mass is renormalized.
//   mib       new classes (and background) pool into the teacher background.
//   moon      each evolving parent pools with the classes split from it, so
//             knowledge about a parent is distilled into parent + children.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cleo/error.hpp"
#include "cleo/ontology.hpp"

namespace cleo {

enum class DistillMode { kStandard, kMib, kMoon };

inline std::string_view to_string(DistillMode mode) {
  switch (mode) {
    case DistillMode::kStandard: return "standard";
    case DistillMode::kMib: return "mib";
    case DistillMode::kMoon: return "moon";
  }
  return "?";
}

/// Floor applied inside every logarithm.
inline constexpr double kLogFloor = 1e-12;
/// Grouping-table entry for a student class that takes no part in
/// distillation.
inline constexpr int kDropped = -1;

struct DistillationSpec {
  DistillMode mode = DistillMode::kMoon;
  std::vector<ClassId> teacher_space;
  std::vector<ClassId> student_space;
  /// Student logit index -> teacher index (or kDropped).
  std::vector<int> group_of;
};

/// Builds the grouping table. `teacher_space` must be a prefix of
/// `student_space`; `splits` name the parent of every new student class.
inline DistillationSpec make_distillation_spec(
    DistillMode mode, std::vector<ClassId> teacher_space,
    std::vector<ClassId> student_space, std::span<const SplitSpec> splits) {
  if (teacher_space.empty() || teacher_space.size() > student_space.size() ||
      !std::equal(teacher_space.begin(), teacher_space.end(),
                  student_space.begin()))
    throw std::invalid_argument(
        "teacher label space must be a non-empty prefix of the student's");
  const auto bg = std::find(teacher_space.begin(), teacher_space.end(),
                            kBackground);
  if (bg == teacher_space.end())
    throw std::invalid_argument("teacher label space lacks background");
  const int bg_index = static_cast<int>(bg - teacher_space.begin());

  DistillationSpec spec{mode, std::move(teacher_space),
                        std::move(student_space), {}};
  const std::size_t n_old = spec.teacher_space.size();
  spec.group_of.assign(spec.student_space.size(), kDropped);
  for (std::size_t i = 0; i < n_old; ++i)
    spec.group_of[i] = static_cast<int>(i);

  switch (mode) {
    case DistillMode::kStandard:
      break;
    case DistillMode::kMib:
      for (std::size_t i = n_old; i < spec.group_of.size(); ++i)
        spec.group_of[i] = bg_index;
      break;
    case DistillMode::kMoon: {
      for (const SplitSpec& s : splits) {
        auto p = std::find(spec.teacher_space.begin(), spec.teacher_space.end(),
                           s.parent);
        if (p == spec.teacher_space.end())
          throw std::invalid_argument("split parent " +
                                      std::to_string(s.parent) +
                                      " is not a teacher class");
        const int parent_index = static_cast<int>(p - spec.teacher_space.begin());
        for (ClassId child : s.children) {
          auto c = std::find(spec.student_space.begin() + n_old,
                             spec.student_space.end(), child);
          if (c == spec.student_space.end())
            throw std::invalid_argument("split child " + std::to_string(child) +
                                        " is not a new student class");
          int& slot = spec.group_of[c - spec.student_space.begin()];
          if (slot != kDropped)
            throw std::invalid_argument("student class " +
                                        std::to_string(child) +
                                        " assigned to two teacher classes");
          slot = parent_index;
        }
      }
      for (std::size_t i = n_old; i < spec.group_of.size(); ++i) {
        if (spec.group_of[i] == kDropped)
          throw std::invalid_argument(
              "new student class " + std::to_string(spec.student_space[i]) +
              " has no parent in the split maps");
      }
      break;
    }
  }
  return spec;
}

/// Grouping table for distilling task t-1 into task t.
inline DistillationSpec make_distillation_spec(const TaskSequence& seq,
                                               std::size_t t,
                                               DistillMode mode) {
  if (t == 0 || t > seq.last_task())
    throw std::out_of_range("distillation needs 1 <= t <= last task");
  return make_distillation_spec(mode, label_space_at(seq, t - 1),
                                label_space_at(seq, t), seq.tasks[t].splits);
}

/// Max-shifted softmax written into `out` (same length as `z`).
inline void softmax_into(std::span<const double> z, std::span<double> out) {
  if (z.empty()) return;
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& v : out.first(z.size())) v /= sum;
}

inline std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  softmax_into(z, p);
  return p;
}

inline double cross_entropy(std::span<const double> p, std::size_t label) {
  if (label >= p.size())
    throw std::out_of_range("label " + std::to_string(label) +
                            " outside probability vector");
  return -std::log(std::max(p[label], kLogFloor));
}

namespace detail {

inline void check_student(std::span<const double> v,
                          const DistillationSpec& spec) {
  if (v.size() != spec.student_space.size())
    throw std::invalid_argument("student vector has " +
                                std::to_string(v.size()) + " entries, spec " +
                                std::to_string(spec.student_space.size()));
}

inline double old_mass(std::span<const double> p, const DistillationSpec& spec) {
  double s = 0.0;
  for (std::size_t k = 0; k < spec.teacher_space.size(); ++k) s += p[k];
  if (s < kLogFloor)
    throw NumericError(
        "degenerate input: old-class probability mass below 1e-12");
  return s;
}

inline void regroup_into(std::span<const double> p, const DistillationSpec& spec,
                         std::span<double> out) {
  const std::size_t n_old = spec.teacher_space.size();
  if (spec.mode == DistillMode::kStandard) {
    const double s = old_mass(p, spec);
    for (std::size_t c = 0; c < n_old; ++c) out[c] = p[c] / s;
    return;
  }
  std::fill(out.begin(), out.begin() + n_old, 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (spec.group_of[k] != kDropped) out[spec.group_of[k]] += p[k];
  }
}

/// Distillation loss given student probabilities `p`. When `grad` is
/// non-empty the gradient with respect to the student logits is added to it,
/// scaled by `scale`.
inline double kd_from_probs(std::span<const double> q, std::span<const double> p,
                            const DistillationSpec& spec, std::span<double> grad,
                            double scale, std::span<double> scratch) {
  const std::size_t n_old = spec.teacher_space.size();
  if (q.size() != n_old)
    throw std::invalid_argument("teacher vector has " +
                                std::to_string(q.size()) + " entries, spec " +
                                std::to_string(n_old));
  std::span<double> p_hat = scratch.first(n_old);
  regroup_into(p, spec, p_hat);
  double loss = 0.0;
  for (std::size_t c = 0; c < n_old; ++c)
    loss -= q[c] * std::log(std::max(p_hat[c], kLogFloor));
  if (grad.empty()) return loss;

  // Only classes whose floored log is live carry gradient.
  double q_live = 0.0;
  for (std::size_t c = 0; c < n_old; ++c)
    if (p_hat[c] >= kLogFloor) q_live += q[c];

  if (spec.mode == DistillMode::kStandard) {
    // dL/dz_j = [j old] (q_live p_hat_j - [j live] q_j); new classes get 0.
    for (std::size_t j = 0; j < n_old; ++j) {
      const double own = p_hat[j] >= kLogFloor ? q[j] : 0.0;
      grad[j] += scale * (q_live * p_hat[j] - own);
    }
    return loss;
  }

  // Grouped modes: dL/dz_j = p_j (q_live - [g live] q_g / p_hat_g), g the
  // group of j.
  for (std::size_t j = 0; j < p.size(); ++j) {
    const int g = spec.group_of[j];
    double own = 0.0;
    if (g != kDropped && p_hat[g] >= kLogFloor) own = q[g] / p_hat[g];
    grad[j] += scale * p[j] * (q_live - own);
  }
  return loss;
}

}  // namespace detail

/// Student probabilities collapsed onto the teacher label space.
inline std::vector<double> regroup(std::span<const double> p_student,
                                   const DistillationSpec& spec) {
  detail::check_student(p_student, spec);
  std::vector<double> out(spec.teacher_space.size());
  detail::regroup_into(p_student, spec, out);
  return out;
}

inline double kd_loss(std::span<const double> q_teacher,
                      std::span<const double> z_student,
                      const DistillationSpec& spec) {
  detail::check_student(z_student, spec);
  const auto p = softmax(z_student);
  std::vector<double> scratch(spec.teacher_space.size());
  return detail::kd_from_probs(q_teacher, p, spec, {}, 1.0, scratch);
}

inline std::vector<double> kd_grad(std::span<const double> q_teacher,
                                   std::span<const double> z_student,
                                   const DistillationSpec& spec) {
  detail::check_student(z_student, spec);
  const auto p = softmax(z_student);
  std::vector<double> grad(z_student.size(), 0.0);
  std::vector<double> scratch(spec.teacher_space.size());
  detail::kd_from_probs(q_teacher, p, spec, grad, 1.0, scratch);
  return grad;
}

/// Pixels of one optimization step. Row i of `logits` (num_classes wide)
/// belongs to target logit index targets[i]; `teacher_probs` holds one row per
/// pixel over the teacher space and may be empty when no distillation runs.
struct PixelBatch {
  std::size_t num_classes = 0;
  std::span<const double> logits;
  std::span<const std::uint32_t> targets;
  std::span<const double> teacher_probs;

  std::size_t num_pixels() const { return targets.size(); }
};

struct LossResult {
  double loss = 0.0;
  /// d loss / d logits, same layout as PixelBatch::logits.
  std::vector<double> grad;
};

namespace detail {

struct PixelScratch {
  std::vector<double> probs;
  std::vector<double> kd;

  PixelScratch(std::size_t classes, std::size_t teacher)
      : probs(classes), kd(teacher) {}
};

/// Supervision + lambda * KD for a single pixel; writes d/dz into `grad`
/// scaled by `scale` (overwriting it). A background-labelled pixel is scored
/// against the pooled mass of the first `bg_span` logits (1: plain
/// cross-entropy).
inline double pixel_objective(std::span<const double> z, std::uint32_t target,
                              std::span<const double> q, double lambda,
                              const DistillationSpec* spec,
                              std::span<double> grad, double scale,
                              PixelScratch& scratch, std::size_t bg_span = 1) {
  std::span<double> p(scratch.probs.data(), z.size());
  softmax_into(z, p);
  double loss = 0.0;
  if (target == 0 && bg_span > 1) {
    double pooled = 0.0;
    for (std::size_t j = 0; j < bg_span; ++j) pooled += p[j];
    loss = -std::log(std::max(pooled, kLogFloor));
    const bool live = pooled >= kLogFloor;
    for (std::size_t j = 0; j < z.size(); ++j)
      grad[j] = live ? scale * (p[j] - (j < bg_span ? p[j] / pooled : 0.0))
                     : 0.0;
  } else {
    loss = cross_entropy(p, target);
    const bool live = p[target] >= kLogFloor;
    for (std::size_t j = 0; j < z.size(); ++j)
      grad[j] = live ? scale * (p[j] - (j == target ? 1.0 : 0.0)) : 0.0;
  }
  if (spec != nullptr && lambda > 0.0)
    loss += lambda * kd_from_probs(q, p, *spec, grad, scale * lambda,
                                   scratch.kd);
  return loss;
}

}  // namespace detail

/// Mean over pixels of cross-entropy + lambda * distillation, with its
/// gradient. Pass `spec == nullptr` when no teacher exists (first task).
inline LossResult total_loss(const PixelBatch& batch, double lambda,
                             const DistillationSpec* spec,
                             std::size_t bg_span = 1) {
  const std::size_t n = batch.num_pixels();
  const std::size_t c = batch.num_classes;
  if (n == 0) throw std::invalid_argument("empty batch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (batch.logits.size() != n * c)
    throw std::invalid_argument("logits do not match pixels x classes");
  if (bg_span == 0 || bg_span > c)
    throw std::invalid_argument("background span outside the label space");
  const bool distill = spec != nullptr && lambda > 0.0;
  std::size_t ct = 0;
  if (distill) {
    if (spec->student_space.size() != c)
      throw std::invalid_argument("spec student space differs from logits");
    ct = spec->teacher_space.size();
    if (batch.teacher_probs.size() != n * ct)
      throw std::invalid_argument("missing teacher outputs for distillation");
  }
  LossResult out;
  out.grad.assign(n * c, 0.0);
  detail::PixelScratch scratch(c, ct);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.targets[i] >= c)
      throw std::out_of_range("target index outside label space");
    std::span<const double> q;
    if (distill) q = batch.teacher_probs.subspan(i * ct, ct);
    out.loss += detail::pixel_objective(
        batch.logits.subspan(i * c, c), batch.targets[i], q, lambda,
        distill ? spec : nullptr, std::span(out.grad).subspan(i * c, c), scale,
        scratch, bg_span);
  }
  out.loss *= scale;
  return out;
}

}  // namespace cleo

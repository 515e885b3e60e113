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

// Per-pixel classifier with one tanh hidden layer and a head that widens as
// classes are introduced, plus SGD training over a task sequence.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cleo/binary_io.hpp"
#include "cleo/error.hpp"
#include "cleo/losses.hpp"
#include "cleo/ontology.hpp"
#include "cleo/parallel.hpp"
#include "cleo/rng.hpp"

namespace cleo {

enum class HeadInit { kCopyParent, kZero, kRandom };

enum class Method { kFinetune, kJoint, kKdStandard, kMib, kMoon };

/// Loss on background-labelled pixels while distilling: plain cross-entropy,
/// or the unbiased form in which background pools every previously known
/// class (a background pixel may well show an old class).
enum class Supervision { kPlain, kUnbiased };

inline std::string_view to_string(HeadInit h) {
  switch (h) {
    case HeadInit::kCopyParent: return "copy_parent";
    case HeadInit::kZero: return "zero";
    case HeadInit::kRandom: return "random";
  }
  return "?";
}

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kFinetune: return "finetune";
    case Method::kJoint: return "joint";
    case Method::kKdStandard: return "kd_standard";
    case Method::kMib: return "mib";
    case Method::kMoon: return "moon";
  }
  return "?";
}

inline std::string_view to_string(Supervision s) {
  return s == Supervision::kPlain ? "plain" : "unbiased";
}

inline Supervision parse_supervision(std::string_view s) {
  for (Supervision v : {Supervision::kPlain, Supervision::kUnbiased})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown supervision '" + std::string(s) +
                    "' (expected plain or unbiased)");
}

inline HeadInit parse_head_init(std::string_view s) {
  for (HeadInit h : {HeadInit::kCopyParent, HeadInit::kZero, HeadInit::kRandom})
    if (to_string(h) == s) return h;
  throw ConfigError("unknown head_init '" + std::string(s) +
                    "' (expected copy_parent, zero or random)");
}

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::kFinetune, Method::kJoint,
                                           Method::kKdStandard, Method::kMib,
                                           Method::kMoon};
  return methods;
}

inline Method parse_method(std::string_view s) {
  for (Method m : all_methods())
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + std::string(s) +
                    "' (expected finetune, joint, kd_standard, mib or moon)");
}

/// Distillation objective used by a method, if any.
inline std::optional<DistillMode> distill_mode(Method m) {
  switch (m) {
    case Method::kKdStandard: return DistillMode::kStandard;
    case Method::kMib: return DistillMode::kMib;
    case Method::kMoon: return DistillMode::kMoon;
    default: return std::nullopt;
  }
}

/// Row-major parameters: w1 is d_in x hidden, w2 is hidden x classes.
struct ModelParams {
  std::size_t d_in = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  static ModelParams zeros(std::size_t d_in, std::size_t hidden,
                           std::size_t classes) {
    return {d_in,
            hidden,
            classes,
            std::vector<double>(d_in * hidden),
            std::vector<double>(hidden),
            std::vector<double>(hidden * classes),
            std::vector<double>(classes)};
  }

  bool all_finite() const {
    for (const auto* v : {&w1, &b1, &w2, &b2})
      for (double x : *v)
        if (!std::isfinite(x)) return false;
    return true;
  }

  /// this += scale * other (shapes must agree).
  void add_scaled(const ModelParams& other, double scale) {
    auto axpy = [scale](std::vector<double>& y, const std::vector<double>& x) {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
    };
    axpy(w1, other.w1);
    axpy(b1, other.b1);
    axpy(w2, other.w2);
    axpy(b2, other.b2);
  }

  bool operator==(const ModelParams&) const = default;
};

inline ModelParams init_model(std::size_t d_in, std::size_t hidden,
                              std::size_t classes, std::uint64_t seed) {
  if (d_in == 0 || hidden == 0 || classes == 0)
    throw std::invalid_argument("degenerate architecture");
  ModelParams m = ModelParams::zeros(d_in, hidden, classes);
  Rng rng(seed);
  const double l1 = std::sqrt(6.0 / static_cast<double>(d_in + hidden));
  for (double& w : m.w1) w = rng.uniform(-l1, l1);
  const double l2 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
  for (double& w : m.w2) w = rng.uniform(-l2, l2);
  return m;
}

/// Appends one head column per class of `new_classes`. `old_space` is the
/// label space the head currently covers; every new class must be a child of
/// some split in `splits`.
inline ModelParams expand_head(const ModelParams& m,
                               std::span<const ClassId> old_space,
                               std::span<const ClassId> new_classes,
                               std::span<const SplitSpec> splits, HeadInit mode,
                               std::uint64_t seed = 0) {
  if (old_space.size() != m.classes)
    throw std::invalid_argument("old label space does not match head width");
  const std::size_t c_old = m.classes;
  const std::size_t c_new = c_old + new_classes.size();
  const std::size_t h = m.hidden;
  ModelParams out = ModelParams::zeros(m.d_in, h, c_new);
  out.w1 = m.w1;
  out.b1 = m.b1;
  for (std::size_t r = 0; r < h; ++r)
    std::copy_n(m.w2.begin() + r * c_old, c_old, out.w2.begin() + r * c_new);
  std::copy(m.b2.begin(), m.b2.end(), out.b2.begin());

  auto column_of = [&](ClassId parent) {
    auto it = std::find(old_space.begin(), old_space.end(), parent);
    if (it == old_space.end())
      throw std::invalid_argument("unknown parent id " +
                                  std::to_string(parent));
    return static_cast<std::size_t>(it - old_space.begin());
  };
  // Resolve parents up front so every mode reports the same errors.
  std::vector<std::pair<std::size_t, std::size_t>> parent_of;  // column, k
  for (ClassId c : new_classes) {
    const SplitSpec* owner = nullptr;
    for (const SplitSpec& s : splits)
      if (std::find(s.children.begin(), s.children.end(), c) != s.children.end())
        owner = &s;
    if (owner == nullptr)
      throw std::invalid_argument("no split names a parent for class " +
                                  std::to_string(c));
    parent_of.emplace_back(column_of(owner->parent), owner->children.size());
  }

  switch (mode) {
    case HeadInit::kZero:
      break;
    case HeadInit::kRandom: {
      Rng rng(seed);
      const double l = std::sqrt(6.0 / static_cast<double>(h + c_new));
      for (std::size_t j = c_old; j < c_new; ++j)
        for (std::size_t r = 0; r < h; ++r)
          out.w2[r * c_new + j] = rng.uniform(-l, l);
      break;
    }
    case HeadInit::kCopyParent: {
      // Parent and children share the parent's old mass equally, so the
      // grouped probability of the parent is unchanged.
      for (std::size_t i = 0; i < new_classes.size(); ++i) {
        const auto [p, k] = parent_of[i];
        const double shift = std::log(static_cast<double>(k + 1));
        const std::size_t j = c_old + i;
        for (std::size_t r = 0; r < h; ++r)
          out.w2[r * c_new + j] = m.w2[r * c_old + p];
        out.b2[j] = m.b2[p] - shift;
        out.b2[p] = m.b2[p] - shift;
      }
      break;
    }
  }
  return out;
}

/// Widens the head from the task t-1 label space to the task t one.
inline ModelParams expand_head(const ModelParams& m, const TaskSequence& seq,
                               std::size_t t, HeadInit mode,
                               std::uint64_t seed = 0) {
  if (t == 0 || t > seq.last_task())
    throw std::out_of_range("head expansion needs 1 <= t <= last task");
  const auto old_space = label_space_at(seq, t - 1);
  return expand_head(m, old_space, seq.tasks[t].introduced,
                     seq.tasks[t].splits, mode, seed);
}

namespace detail {

inline void hidden_activations(const ModelParams& m, const double* x,
                               double* h) {
  for (std::size_t j = 0; j < m.hidden; ++j) h[j] = m.b1[j];
  for (std::size_t i = 0; i < m.d_in; ++i) {
    const double xi = x[i];
    const double* row = &m.w1[i * m.hidden];
    for (std::size_t j = 0; j < m.hidden; ++j) h[j] += xi * row[j];
  }
  for (std::size_t j = 0; j < m.hidden; ++j) h[j] = std::tanh(h[j]);
}

inline void head_logits(const ModelParams& m, const double* h, double* z) {
  for (std::size_t c = 0; c < m.classes; ++c) z[c] = m.b2[c];
  for (std::size_t j = 0; j < m.hidden; ++j) {
    const double hj = h[j];
    const double* row = &m.w2[j * m.classes];
    for (std::size_t c = 0; c < m.classes; ++c) z[c] += hj * row[c];
  }
}

inline std::size_t pixel_count(const ModelParams& m,
                               std::span<const double> features) {
  if (m.d_in == 0 || features.size() % m.d_in != 0)
    throw std::invalid_argument("dimension mismatch: " +
                                std::to_string(features.size()) +
                                " feature values for d_in " +
                                std::to_string(m.d_in));
  return features.size() / m.d_in;
}

}  // namespace detail

/// Logits for each pixel of `features` (pixels x d_in, row-major).
inline std::vector<double> forward(const ModelParams& m,
                                   std::span<const double> features) {
  const std::size_t n = detail::pixel_count(m, features);
  std::vector<double> logits(n * m.classes);
  std::vector<double> h(m.hidden);
  for (std::size_t i = 0; i < n; ++i) {
    detail::hidden_activations(m, &features[i * m.d_in], h.data());
    detail::head_logits(m, h.data(), &logits[i * m.classes]);
  }
  return logits;
}

/// Softmax rows of forward().
inline std::vector<double> predict_proba(const ModelParams& m,
                                         std::span<const double> features) {
  auto z = forward(m, features);
  const std::size_t c = m.classes;
  for (std::size_t i = 0; i < z.size(); i += c) {
    std::span<double> row(&z[i], c);
    softmax_into(row, row);
  }
  return z;
}

/// Arg-max logit index per pixel (lowest index wins ties).
inline std::vector<std::uint32_t> predict(const ModelParams& m,
                                          std::span<const double> features) {
  const auto z = forward(m, features);
  const std::size_t c = m.classes;
  std::vector<std::uint32_t> out(z.size() / c);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = z.begin() + static_cast<std::ptrdiff_t>(i * c);
    out[i] = static_cast<std::uint32_t>(
        std::max_element(row, row + static_cast<std::ptrdiff_t>(c)) - row);
  }
  return out;
}

struct Gradients {
  double loss = 0.0;
  ModelParams grad;
};

/// Pixels per unit of parallel work in backward().
inline constexpr std::size_t kBackwardChunk = 64;

/// Mean objective (cross-entropy + lambda * distillation) over the pixels
/// and its exact gradient with respect to every parameter. Chunk partial sums
/// are combined by a fixed pairwise tree, so the result does not depend on
/// `threads`.
inline Gradients backward(const ModelParams& m,
                          std::span<const double> features,
                          std::span<const std::uint32_t> targets,
                          std::span<const double> teacher_probs,
                          const DistillationSpec* spec, double lambda,
                          std::size_t threads = worker_threads(),
                          std::size_t bg_span = 1) {
  const std::size_t n = detail::pixel_count(m, features);
  if (n == 0) throw std::invalid_argument("empty batch");
  if (targets.size() != n)
    throw std::invalid_argument("targets do not match pixel count");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (bg_span == 0 || bg_span > m.classes)
    throw std::invalid_argument("background span outside the label space");
  const bool distill = lambda > 0.0 && spec != nullptr;
  std::size_t ct = 0;
  if (distill) {
    if (spec->student_space.size() != m.classes)
      throw std::invalid_argument("spec student space differs from head");
    ct = spec->teacher_space.size();
    if (teacher_probs.size() != n * ct)
      throw std::invalid_argument("missing teacher outputs for distillation");
  }

  const std::size_t chunks = (n + kBackwardChunk - 1) / kBackwardChunk;
  std::vector<ModelParams> partial(chunks);
  std::vector<double> partial_loss(chunks, 0.0);
  for_each_chunk(chunks, threads, [&](std::size_t k) {
    ModelParams g = ModelParams::zeros(m.d_in, m.hidden, m.classes);
    std::vector<double> h(m.hidden), z(m.classes), dz(m.classes), dh(m.hidden);
    detail::PixelScratch scratch(m.classes, ct);
    double loss = 0.0;
    const std::size_t end = std::min(n, (k + 1) * kBackwardChunk);
    for (std::size_t i = k * kBackwardChunk; i < end; ++i) {
      if (targets[i] >= m.classes)
        throw std::out_of_range("target index outside label space");
      const double* x = &features[i * m.d_in];
      detail::hidden_activations(m, x, h.data());
      detail::head_logits(m, h.data(), z.data());
      std::span<const double> q;
      if (distill) q = teacher_probs.subspan(i * ct, ct);
      loss += detail::pixel_objective(z, targets[i], q, lambda,
                                      distill ? spec : nullptr, dz, 1.0,
                                      scratch, bg_span);
      for (std::size_t j = 0; j < m.hidden; ++j) {
        double* row = &g.w2[j * m.classes];
        const double* wrow = &m.w2[j * m.classes];
        double acc = 0.0;
        for (std::size_t c = 0; c < m.classes; ++c) {
          row[c] += h[j] * dz[c];
          acc += wrow[c] * dz[c];
        }
        dh[j] = acc * (1.0 - h[j] * h[j]);
      }
      for (std::size_t c = 0; c < m.classes; ++c) g.b2[c] += dz[c];
      for (std::size_t d = 0; d < m.d_in; ++d) {
        double* row = &g.w1[d * m.hidden];
        for (std::size_t j = 0; j < m.hidden; ++j) row[j] += x[d] * dh[j];
      }
      for (std::size_t j = 0; j < m.hidden; ++j) g.b1[j] += dh[j];
    }
    partial[k] = std::move(g);
    partial_loss[k] = loss;
  });

  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t i = 0; i + stride < chunks; i += 2 * stride) {
      partial[i].add_scaled(partial[i + stride], 1.0);
      partial_loss[i] += partial_loss[i + stride];
    }
  }
  const double scale = 1.0 / static_cast<double>(n);
  Gradients out{partial_loss[0] * scale,
                ModelParams::zeros(m.d_in, m.hidden, m.classes)};
  out.grad.add_scaled(partial[0], scale);
  return out;
}

/// Frozen copy of the previous task's model.
class TeacherSnapshot {
 public:
  TeacherSnapshot(ModelParams params, std::vector<ClassId> label_space)
      : params_(std::move(params)), label_space_(std::move(label_space)) {
    if (label_space_.size() != params_.classes)
      throw std::invalid_argument("teacher label space does not match head");
  }

  const ModelParams& params() const { return params_; }
  const std::vector<ClassId>& label_space() const { return label_space_; }

  std::vector<double> probabilities(std::span<const double> features) const {
    return predict_proba(params_, features);
  }

 private:
  ModelParams params_;
  std::vector<ClassId> label_space_;
};

struct TrainConfig {
  double lr_first = 0.01;
  double lr_later = 0.001;
  std::size_t epochs = 30;
  std::size_t batch_pixels = 16;
  double lambda = 1.0;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  HeadInit head_init = HeadInit::kCopyParent;
  std::size_t hidden = 32;
  /// Applies to the distilling methods only.
  Supervision supervision = Supervision::kUnbiased;

  void validate() const {
    if (!(lr_first > 0.0) || !(lr_later > 0.0))
      throw ConfigError("learning rates must be positive");
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (batch_pixels == 0) throw ConfigError("batch_pixels must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw ConfigError("momentum must lie in [0, 1)");
    if (hidden == 0) throw ConfigError("hidden must be >= 1");
  }
};

/// Training pixels of one task. `labels` are the task-projected ground truth,
/// `finest` the underlying leaf classes (used to relabel for joint training).
struct PixelSet {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<ClassId> labels;
  std::vector<ClassId> finest;

  std::size_t size() const { return labels.size(); }
};

struct TaskResult {
  ModelParams params;
  std::vector<double> loss_trace;
  double lr = 0.0;
};

namespace detail {

/// Minibatch SGD on fixed targets (and optional teacher rows).
inline TaskResult fit(ModelParams m, std::span<const double> features,
                      std::span<const std::uint32_t> targets,
                      std::span<const double> teacher_probs,
                      const DistillationSpec* spec, double lambda, double lr,
                      const TrainConfig& cfg, std::uint64_t stream_seed,
                      std::size_t bg_span = 1) {
  const std::size_t n = targets.size();
  if (n == 0) throw std::invalid_argument("empty dataset");
  const std::size_t d = m.d_in;
  const std::size_t ct = spec != nullptr ? spec->teacher_space.size() : 0;
  const std::size_t threads = worker_threads();
  Rng rng(stream_seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  const std::size_t bmax = std::min(cfg.batch_pixels, n);
  std::vector<double> bx(bmax * d), bq(bmax * ct);
  std::vector<std::uint32_t> by(bmax);
  ModelParams velocity = ModelParams::zeros(m.d_in, m.hidden, m.classes);

  TaskResult result;
  result.lr = lr;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += bmax) {
      const std::size_t b = std::min(bmax, n - start);
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(&features[src * d], d, &bx[r * d]);
        by[r] = targets[src];
        if (ct != 0) std::copy_n(&teacher_probs[src * ct], ct, &bq[r * ct]);
      }
      const Gradients g =
          backward(m, std::span(bx).first(b * d), std::span(by).first(b),
                   std::span(bq).first(b * ct), spec, lambda, threads, bg_span);
      if (!std::isfinite(g.loss))
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
      epoch_loss += g.loss * static_cast<double>(b);
      if (cfg.momentum > 0.0) {
        velocity.add_scaled(velocity, cfg.momentum - 1.0);
        velocity.add_scaled(g.grad, 1.0);
        m.add_scaled(velocity, -lr);
      } else {
        m.add_scaled(g.grad, -lr);
      }
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
  }
  if (!m.all_finite()) throw NumericError("non-finite parameters after training");
  result.params = std::move(m);
  return result;
}

inline std::vector<std::uint32_t> to_targets(std::span<const ClassId> labels,
                                             std::span<const ClassId> space,
                                             std::size_t num_classes,
                                             std::size_t t) {
  const auto lut = index_lookup(space, num_classes);
  std::vector<std::uint32_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const ClassId c = labels[i];
    if (c >= lut.size() || lut[c] < 0)
      throw DataError("task " + std::to_string(t) + ": label " +
                      std::to_string(c) + " is outside the label space");
    out[i] = static_cast<std::uint32_t>(lut[c]);
  }
  return out;
}

inline void check_pixels(const PixelSet& data, const ModelParams& m,
                         std::size_t t) {
  if (data.size() == 0)
    throw std::invalid_argument("empty dataset at task " + std::to_string(t));
  if (data.dim != m.d_in || data.features.size() != data.size() * data.dim)
    throw DataError("task " + std::to_string(t) +
                    ": feature dimension does not match the model");
}

}  // namespace detail

/// Trains on task t. `kd` selects the distillation objective; it needs a
/// teacher from task t-1 and is ignored (with the teacher) at t = 0.
inline TaskResult train_task(const ModelParams& m, const TaskSequence& seq,
                             std::size_t t, const PixelSet& data,
                             const TeacherSnapshot* teacher,
                             const TrainConfig& cfg,
                             std::optional<DistillMode> kd = std::nullopt) {
  cfg.validate();
  const auto space = label_space_at(seq, t);
  if (space.size() != m.classes)
    throw std::invalid_argument("head width " + std::to_string(m.classes) +
                                " differs from label space at task " +
                                std::to_string(t));
  detail::check_pixels(data, m, t);
  const auto targets =
      detail::to_targets(data.labels, space, seq.ontology.size(), t);
  const bool distill = t >= 1 && kd.has_value();
  if (distill != (teacher != nullptr))
    throw std::invalid_argument(
        "a teacher is required exactly when distilling at t >= 1");
  const double lr = t == 0 ? cfg.lr_first : cfg.lr_later;
  const std::uint64_t stream = substream_seed(cfg.seed, 1000 + t);
  if (!distill)
    return detail::fit(m, data.features, targets, {}, nullptr, 0.0, lr, cfg,
                       stream);
  if (teacher->label_space() != label_space_at(seq, t - 1))
    throw std::invalid_argument("teacher label space is not that of task t-1");
  const auto spec = make_distillation_spec(seq, t, *kd);
  const auto q = teacher->probabilities(data.features);
  const std::size_t bg_span = cfg.supervision == Supervision::kUnbiased
                                  ? teacher->label_space().size()
                                  : 1;
  return detail::fit(m, data.features, targets, q, &spec, cfg.lambda, lr, cfg,
                     stream, bg_span);
}

struct Checkpoint {
  std::size_t task = 0;
  std::vector<ClassId> label_space;
  ModelParams params;
};

struct RunResult {
  ModelParams final_params;
  std::vector<Checkpoint> checkpoints;
  std::vector<TaskResult> tasks;
};

/// Runs `method` over the whole sequence, one dataset per task.
inline RunResult run_sequence(const TaskSequence& seq,
                              std::span<const PixelSet> datasets,
                              Method method, const TrainConfig& cfg) {
  cfg.validate();
  if (datasets.size() != seq.tasks.size())
    throw DataError("dataset count " + std::to_string(datasets.size()) +
                    " does not match task count " +
                    std::to_string(seq.tasks.size()));
  if (datasets.empty()) throw DataError("no datasets");
  const std::size_t d_in = datasets.front().dim;
  const std::uint64_t init_seed = substream_seed(cfg.seed, 0);
  RunResult run;

  if (method == Method::kJoint) {
    const std::size_t n_task = seq.last_task();
    const auto space = label_space_at(seq, n_task);
    const auto relabel = final_eval_map(seq);
    PixelSet all{d_in, {}, {}, {}};
    for (std::size_t t = 0; t < datasets.size(); ++t) {
      const PixelSet& ds = datasets[t];
      if (ds.dim != d_in || ds.finest.size() != ds.size())
        throw DataError("task " + std::to_string(t) +
                        ": joint training needs finest labels of matching "
                        "dimension");
      all.features.insert(all.features.end(), ds.features.begin(),
                          ds.features.end());
      for (ClassId c : ds.finest) {
        if (c >= relabel.size())
          throw DataError("task " + std::to_string(t) + ": finest label " +
                          std::to_string(c) + " is not an ontology class");
        all.labels.push_back(relabel[c]);
      }
    }
    ModelParams m = init_model(d_in, cfg.hidden, space.size(), init_seed);
    detail::check_pixels(all, m, 0);
    const auto targets =
        detail::to_targets(all.labels, space, seq.ontology.size(), n_task);
    TaskResult r = detail::fit(std::move(m), all.features, targets, {},
                               nullptr, 0.0, cfg.lr_first, cfg,
                               substream_seed(cfg.seed, 1000));
    run.final_params = r.params;
    run.checkpoints.push_back({n_task, space, r.params});
    run.tasks.push_back(std::move(r));
    return run;
  }

  const auto kd = distill_mode(method);
  ModelParams m =
      init_model(d_in, cfg.hidden, label_space_at(seq, 0).size(), init_seed);
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    std::optional<TeacherSnapshot> teacher;
    if (t >= 1) {
      if (kd) teacher.emplace(m, label_space_at(seq, t - 1));
      m = expand_head(m, seq, t, cfg.head_init,
                      substream_seed(cfg.seed, 2000 + t));
    }
    TaskResult r = train_task(m, seq, t, datasets[t],
                              teacher ? &*teacher : nullptr, cfg, kd);
    m = r.params;
    run.checkpoints.push_back({t, label_space_at(seq, t), m});
    run.tasks.push_back(std::move(r));
  }
  run.final_params = std::move(m);
  return run;
}

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& out, const ModelParams& m,
                             std::span<const std::string> class_names) {
  if (class_names.size() != m.classes)
    throw std::invalid_argument("one class name per head column required");
  binary::put_magic(out, "CLEO");
  binary::put_u32(out, kCheckpointVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(m.d_in));
  binary::put_u32(out, static_cast<std::uint32_t>(m.hidden));
  binary::put_u32(out, static_cast<std::uint32_t>(m.classes));
  for (const auto* v : {&m.w1, &m.b1, &m.w2, &m.b2})
    for (double x : *v) binary::put_f64(out, x);
  for (const std::string& name : class_names) {
    binary::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
}

struct LoadedCheckpoint {
  ModelParams params;
  std::vector<std::string> class_names;
};

inline LoadedCheckpoint read_checkpoint(std::istream& in) {
  constexpr const char* what = "checkpoint";
  binary::expect_magic(in, "CLEO", what);
  const std::uint32_t version = binary::get_u32(in, what);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  const std::size_t d = binary::get_u32(in, what);
  const std::size_t h = binary::get_u32(in, what);
  const std::size_t c = binary::get_u32(in, what);
  LoadedCheckpoint out{ModelParams::zeros(d, h, c), {}};
  for (auto* v : {&out.params.w1, &out.params.b1, &out.params.w2,
                  &out.params.b2})
    for (double& x : *v) x = binary::get_f64(in, what);
  for (std::size_t i = 0; i < c; ++i) {
    std::string name(binary::get_u32(in, what), '\0');
    binary::read_exact(in, name.data(), name.size(), what);
    out.class_names.push_back(std::move(name));
  }
  return out;
}

}  // namespace cleo

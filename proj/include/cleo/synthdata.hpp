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

// Synthetic hierarchical segmentation scenes. Every top-level class owns an
// anchor point; its leaves scatter around that anchor, so siblings are close
// and different families are far apart. Scenes tile the grid with rectangles,
// each filled by one finest class with isotropic Gaussian features.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cleo/binary_io.hpp"
#include "cleo/error.hpp"
#include "cleo/ontology.hpp"
#include "cleo/parallel.hpp"
#include "cleo/rng.hpp"

namespace cleo {

/// Draws allowed while placing anchors before giving up.
inline constexpr std::size_t kMaxAnchorDraws = 10000;

struct GaussianClassModel {
  std::size_t dim = 0;
  double sigma = 0.0;
  /// Classes that can label a pixel (background and leaves).
  std::vector<ClassId> leaves;
  /// Per class id: mean for emitting classes, empty otherwise.
  std::vector<std::vector<double>> means;
  /// Per class id: its top-level ancestor (itself for top-level classes).
  std::vector<ClassId> top_of;
  /// Per class id: anchor for top-level classes, empty otherwise.
  std::vector<std::vector<double>> anchors;

  bool operator==(const GaussianClassModel&) const = default;
};

namespace detail {

inline bool is_top_level(const Ontology& onto, ClassId c) {
  const auto p = onto.parent(c);
  return !p || *p == kBackground;
}

inline std::vector<double> unit_direction(Rng& rng, std::size_t dim) {
  for (;;) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 1e-12) {
      for (double& x : v) x /= norm;
      return v;
    }
  }
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace detail

inline GaussianClassModel build_class_model(const Ontology& onto,
                                            std::size_t dim, double anchor_sep,
                                            double child_radius, double sigma,
                                            std::uint64_t seed) {
  if (dim < 2) throw ConfigError("feature dimension must be >= 2");
  if (!(child_radius >= 0.0) || !(anchor_sep > child_radius))
    throw ConfigError("need anchor_sep > child_radius >= 0");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  GaussianClassModel m;
  m.dim = dim;
  m.sigma = sigma;
  m.leaves = onto.emitting_classes();
  m.means.resize(onto.size());
  m.anchors.resize(onto.size());
  m.top_of.resize(onto.size());
  Rng rng(seed);

  std::vector<ClassId> placed;
  std::size_t draws = 0;
  for (ClassId c = 0; c < onto.size(); ++c) {
    if (!detail::is_top_level(onto, c)) continue;
    for (;;) {
      if (++draws > kMaxAnchorDraws)
        throw ConfigError("inseparable configuration: could not place " +
                          std::to_string(c) + " anchors " +
                          std::to_string(anchor_sep) + " apart in dimension " +
                          std::to_string(dim));
      auto a = detail::unit_direction(rng, dim);
      for (double& x : a) x *= anchor_sep;
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](ClassId o) {
        return detail::distance(a, m.anchors[o]) >= anchor_sep;
      });
      if (clear) {
        m.anchors[c] = std::move(a);
        placed.push_back(c);
        break;
      }
    }
  }
  for (ClassId c = 0; c < onto.size(); ++c) {
    ClassId top = c;
    while (!detail::is_top_level(onto, top)) top = *onto.parent(top);
    m.top_of[c] = top;
  }
  for (ClassId c : m.leaves) {
    const ClassId top = m.top_of[c];
    m.means[c] = m.anchors[top];
    if (top == c) continue;
    const auto dir = detail::unit_direction(rng, dim);
    for (std::size_t i = 0; i < dim; ++i) m.means[c][i] += child_radius * dir[i];
  }
  return m;
}

struct SceneSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t regions = 8;
  /// Minimum side length of every region.
  std::size_t min_side = 4;
  /// Largest region area allowed; 0 disables the bound.
  std::size_t max_area = 0;
  std::uint64_t seed = 0;
};

/// Pixel features, row-major, `dim` values per pixel.
struct FeatureGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  std::size_t pixels() const { return height * width; }
  bool operator==(const FeatureGrid&) const = default;
};

struct Scene {
  FeatureGrid features;
  LabelGrid finest;
};

struct Rect {
  std::size_t row = 0, col = 0, height = 0, width = 0;
  std::size_t area() const { return height * width; }
};

/// Recursive rectangle partition: the largest region (first on ties) is cut
/// along its longer side at a uniform position respecting min_side.
inline std::vector<Rect> partition_grid(const SceneSpec& spec, Rng& rng) {
  if (spec.height == 0 || spec.width == 0 || spec.regions == 0)
    throw DataError("region constraints unsatisfiable: empty grid or no regions");
  if (spec.min_side == 0 || spec.min_side > std::min(spec.height, spec.width))
    throw DataError("region constraints unsatisfiable: min_side " +
                    std::to_string(spec.min_side));
  std::vector<Rect> rects{{0, 0, spec.height, spec.width}};
  const std::size_t s = spec.min_side;
  while (rects.size() < spec.regions) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rects.size(); ++i)
      if (rects[i].area() > rects[best].area()) best = i;
    Rect r = rects[best];
    const bool can_rows = r.height >= 2 * s;
    const bool can_cols = r.width >= 2 * s;
    if (!can_rows && !can_cols)
      throw DataError("region constraints unsatisfiable: cannot cut " +
                      std::to_string(spec.regions) + " regions with min_side " +
                      std::to_string(s));
    bool cut_rows = r.height > r.width;
    if (r.height == r.width) cut_rows = rng.below(2) == 0;
    if (cut_rows && !can_rows) cut_rows = false;
    if (!cut_rows && !can_cols) cut_rows = true;
    const std::size_t len = cut_rows ? r.height : r.width;
    const std::size_t at = s + rng.below(len - 2 * s + 1);
    Rect a = r, b = r;
    if (cut_rows) {
      a.height = at;
      b.row += at;
      b.height -= at;
    } else {
      a.width = at;
      b.col += at;
      b.width -= at;
    }
    rects[best] = a;
    rects.push_back(b);
  }
  if (spec.max_area != 0) {
    for (const Rect& r : rects)
      if (r.area() > spec.max_area)
        throw DataError("region constraints unsatisfiable: region of area " +
                        std::to_string(r.area()) + " exceeds max_area");
  }
  return rects;
}

/// Scene whose region classes come from `pick_class(rng)`.
inline Scene generate_scene_with(
    const GaussianClassModel& model, const SceneSpec& spec,
    const std::function<ClassId(Rng&)>& pick_class) {
  Rng rng(spec.seed);
  const auto rects = partition_grid(spec, rng);
  Scene scene;
  scene.finest = LabelGrid(spec.height, spec.width);
  for (const Rect& r : rects) {
    const ClassId c = pick_class(rng);
    for (std::size_t y = r.row; y < r.row + r.height; ++y)
      for (std::size_t x = r.col; x < r.col + r.width; ++x)
        scene.finest.at(y, x) = c;
  }
  FeatureGrid& f = scene.features;
  f.height = spec.height;
  f.width = spec.width;
  f.dim = model.dim;
  f.values.resize(f.pixels() * f.dim);
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    const auto& mean = model.means[scene.finest.labels[i]];
    for (std::size_t k = 0; k < f.dim; ++k)
      f.values[i * f.dim + k] = mean[k] + model.sigma * rng.normal();
  }
  return scene;
}

/// Scene with every region's class drawn uniformly from the model's leaves.
inline Scene generate_scene(const GaussianClassModel& model,
                            const SceneSpec& spec) {
  return generate_scene_with(model, spec, [&](Rng& rng) {
    return model.leaves[rng.below(model.leaves.size())];
  });
}

/// Scene plus the labels a learner sees for it.
struct LabelledScene {
  FeatureGrid features;
  LabelGrid labels;
  LabelGrid finest;
};

struct Benchmark {
  /// One list of scenes per task, labels projected to that task.
  std::vector<std::vector<LabelledScene>> tasks;
  /// Shared held-out scenes labelled as evaluated after the final task.
  std::vector<LabelledScene> eval;
};

struct BenchmarkConfig {
  std::size_t dim = 8;
  double anchor_sep = 8.0;
  double child_radius = 1.0;
  double sigma = 0.25;
  std::size_t scenes_per_task = 8;
  std::size_t eval_scenes = 32;
  /// Probability a region is drawn from the current task's leaves.
  double task_bias = 0.7;
  /// Minimum pixel count of every evaluated class in the eval set.
  std::size_t min_eval_pixels = 200;
  std::size_t eval_attempts = 5;
  SceneSpec scene;  // seed ignored; scenes derive their own
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<LabelledScene> make_scenes(
    const GaussianClassModel& model, const SceneSpec& base, std::size_t count,
    std::uint64_t seed, std::uint64_t first_stream,
    const std::function<ClassId(Rng&)>& pick,
    const std::function<LabelGrid(const LabelGrid&)>& label) {
  std::vector<LabelledScene> out(count);
  for_each_chunk(count, worker_threads(), [&](std::size_t i) {
    SceneSpec spec = base;
    spec.seed = substream_seed(seed, first_stream + i);
    Scene s = generate_scene_with(model, spec, pick);
    out[i].labels = label(s.finest);
    out[i].features = std::move(s.features);
    out[i].finest = std::move(s.finest);
  });
  return out;
}

}  // namespace detail

inline Benchmark generate_benchmark(const TaskSequence& seq,
                                    const GaussianClassModel& model,
                                    const BenchmarkConfig& cfg) {
  Benchmark out;
  const auto& leaves = model.leaves;
  auto uniform_leaf = [&](Rng& rng) { return leaves[rng.below(leaves.size())]; };

  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    const auto now = eval_map_at(seq, t);
    const auto& intro = seq.tasks[t].introduced;
    std::vector<ClassId> favoured;
    for (ClassId c : leaves)
      if (std::find(intro.begin(), intro.end(), now[c]) != intro.end())
        favoured.push_back(c);
    auto pick = [&](Rng& rng) {
      const double u = rng.uniform();
      if (!favoured.empty() && u < cfg.task_bias)
        return favoured[rng.below(favoured.size())];
      return uniform_leaf(rng);
    };
    auto project = [&](const LabelGrid& g) {
      return project_ground_truth(seq, t, g);
    };
    out.tasks.push_back(detail::make_scenes(model, cfg.scene,
                                            cfg.scenes_per_task, cfg.seed,
                                            t * cfg.scenes_per_task, pick,
                                            project));
  }

  const auto final_map = final_eval_map(seq);
  const auto evaluated = evaluated_classes_at(seq, seq.last_task());
  auto relabel = [&](const LabelGrid& g) {
    LabelGrid r(g.height, g.width);
    for (std::size_t i = 0; i < g.size(); ++i) r.labels[i] = final_map[g.labels[i]];
    return r;
  };
  for (std::size_t attempt = 0; attempt < cfg.eval_attempts; ++attempt) {
    const std::uint64_t eval_seed =
        substream_seed(cfg.seed, (std::uint64_t{1} << 40) + attempt);
    auto eval = detail::make_scenes(model, cfg.scene, cfg.eval_scenes,
                                    eval_seed, 0, uniform_leaf, relabel);
    std::vector<std::size_t> count(seq.ontology.size(), 0);
    for (const auto& s : eval)
      for (ClassId c : s.labels.labels) ++count[c];
    const bool enough = std::all_of(evaluated.begin(), evaluated.end(),
                                    [&](ClassId c) {
                                      return count[c] >= cfg.min_eval_pixels;
                                    });
    if (enough) {
      out.eval = std::move(eval);
      return out;
    }
  }
  throw DataError("eval set misses the minimum pixel count for some class after " +
                  std::to_string(cfg.eval_attempts) + " attempts");
}

inline constexpr std::uint32_t kFeatureGridVersion = 1;

inline void write_feature_grid(std::ostream& out, const FeatureGrid& g) {
  binary::put_magic(out, "CLFG");
  binary::put_u32(out, kFeatureGridVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(g.height));
  binary::put_u32(out, static_cast<std::uint32_t>(g.width));
  binary::put_u32(out, static_cast<std::uint32_t>(g.dim));
  for (double v : g.values) binary::put_f64(out, v);
}

inline FeatureGrid read_feature_grid(std::istream& in) {
  constexpr const char* what = "feature grid";
  binary::expect_magic(in, "CLFG", what);
  const std::uint32_t version = binary::get_u32(in, what);
  if (version != kFeatureGridVersion)
    throw DataError("unsupported feature grid version " +
                    std::to_string(version));
  FeatureGrid g;
  g.height = binary::get_u32(in, what);
  g.width = binary::get_u32(in, what);
  g.dim = binary::get_u32(in, what);
  g.values.resize(g.pixels() * g.dim);
  for (double& v : g.values) v = binary::get_f64(in, what);
  return g;
}

}  // namespace cleo

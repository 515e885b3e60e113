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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Set CLEO_ACCEPTANCE_SEEDS to shorten the benchmark runs
// while iterating (the verdict then covers fewer seeds than required).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cleo/experiment.hpp"

namespace {

using namespace cleo;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and budgets.
constexpr int kGradientInstances = 1000;
constexpr double kFdStep = 1e-5;
constexpr double kKdGradTolerance = 1e-5;
constexpr double kBackwardTolerance = 1e-4;
// Relative error is taken normwise. The floor sits well above central
// difference roundoff (about 1e-11 on a unit-scale loss), which is all an
// exactly zero gradient has to compare against.
constexpr double kRelativeFloor = 1e-5;
constexpr double kGradientBudgetSeconds = 60.0;
constexpr int kDegeneracyInstances = 1000;
constexpr int kConservationInstances = 10000;
constexpr double kConservationTolerance = 1e-9;
constexpr int kOracleGrids = 200;
constexpr std::size_t kOracleMaxSide = 64;
constexpr int kBenchmarkSeeds = 10;
constexpr double kBenchmarkBudgetSeconds = 600.0;
constexpr double kForgottenCeiling = 0.05;
constexpr double kLearnedFloor = 0.5;
constexpr int kForgettingQuorum = 9;
constexpr int kOrderingQuorum = 8;
constexpr int kInvarianceVectors = 1000;
constexpr double kInvarianceTolerance = 1e-9;

struct Verdict {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double normwise_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = kRelativeFloor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> q(n);
  double s = 0.0;
  for (double& v : q) s += (v = rng.uniform(0.02, 1.0));
  for (double& v : q) v /= s;
  return q;
}

// Random grouping problem: teacher ids are a shuffled prefix holding
// background, new classes are split from random teacher classes.
DistillationSpec random_spec(Rng& rng, DistillMode mode, std::size_t classes,
                             std::size_t n_old, bool only_background) {
  std::vector<ClassId> teacher(n_old);
  std::iota(teacher.begin(), teacher.end(), ClassId{0});
  for (std::size_t i = n_old; i > 1; --i)
    std::swap(teacher[i - 1], teacher[rng.below(i)]);
  std::vector<ClassId> student = teacher;
  std::map<ClassId, std::vector<ClassId>> children;
  for (std::size_t c = n_old; c < classes; ++c) {
    student.push_back(static_cast<ClassId>(c));
    const ClassId parent =
        only_background ? kBackground : teacher[rng.below(n_old)];
    children[parent].push_back(static_cast<ClassId>(c));
  }
  std::vector<SplitSpec> splits;
  for (auto& [p, kids] : children) splits.push_back({p, kids, false});
  return make_distillation_spec(mode, teacher, student, splits);
}

DistillMode random_mode(Rng& rng) {
  return static_cast<DistillMode>(rng.below(3));
}

// Criterion 1.
Verdict gradient_fidelity() {
  const auto start = Clock::now();
  Rng rng(0x61);
  double worst_kd = 0.0, worst_backward = 0.0;
  for (int inst = 0; inst < kGradientInstances; ++inst) {
    const std::size_t classes = 2 + rng.below(31);
    const std::size_t n_old = 1 + rng.below(classes);
    const auto spec = random_spec(rng, random_mode(rng), classes, n_old, false);

    std::vector<double> z(classes);
    for (double& v : z) v = rng.uniform(-3.0, 3.0);
    const auto q = random_distribution(rng, n_old);
    const auto g = kd_grad(q, z, spec);
    std::vector<double> fd(classes);
    for (std::size_t j = 0; j < classes; ++j) {
      auto hi = z, lo = z;
      hi[j] += kFdStep;
      lo[j] -= kFdStep;
      fd[j] = (kd_loss(q, hi, spec) - kd_loss(q, lo, spec)) / (2 * kFdStep);
    }
    worst_kd = std::max(worst_kd, normwise_error(g, fd));

    const std::size_t d_in = 1 + rng.below(8), hidden = 1 + rng.below(8);
    const std::size_t n = 1 + rng.below(6);
    ModelParams m = init_model(d_in, hidden, classes, rng.next_u64());
    for (double& b : m.b1) b = rng.uniform(-0.5, 0.5);
    for (double& b : m.b2) b = rng.uniform(-0.5, 0.5);
    std::vector<double> x(n * d_in);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    std::vector<std::uint32_t> t(n);
    for (auto& v : t) v = static_cast<std::uint32_t>(rng.below(classes));
    std::vector<double> tq;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = random_distribution(rng, n_old);
      tq.insert(tq.end(), row.begin(), row.end());
    }
    const double lambda = rng.uniform(0.0, 2.0);
    const std::size_t span = rng.below(2) ? n_old : 1;
    auto objective = [&](const ModelParams& p) {
      return backward(p, x, t, tq, &spec, lambda, 1, span).loss;
    };
    const Gradients exact = backward(m, x, t, tq, &spec, lambda, 1, span);
    std::vector<double> analytic, numeric;
    for (auto field : {&ModelParams::w1, &ModelParams::b1, &ModelParams::w2,
                       &ModelParams::b2}) {
      for (std::size_t k = 0; k < (m.*field).size(); ++k) {
        ModelParams hi = m, lo = m;
        (hi.*field)[k] += kFdStep;
        (lo.*field)[k] -= kFdStep;
        analytic.push_back((exact.grad.*field)[k]);
        numeric.push_back((objective(hi) - objective(lo)) / (2 * kFdStep));
      }
    }
    worst_backward = std::max(worst_backward, normwise_error(analytic, numeric));
  }
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = worst_kd <= kKdGradTolerance && worst_backward <= kBackwardTolerance &&
           elapsed < kGradientBudgetSeconds;
  v.detail = format("%d instances, worst kd_grad rel %.2e (<= %.0e), worst "
                    "backward rel %.2e (<= %.0e), %.1fs (< %.0fs)",
                    kGradientInstances, worst_kd, kKdGradTolerance,
                    worst_backward, kBackwardTolerance, elapsed,
                    kGradientBudgetSeconds);
  return v;
}

// Criterion 2.
Verdict moon_mib_degeneracy() {
  Rng rng(0x62);
  int identical = 0;
  for (int inst = 0; inst < kDegeneracyInstances; ++inst) {
    const std::size_t classes = 2 + rng.below(31);
    const std::size_t n_old = 1 + rng.below(classes - 1);
    const std::uint64_t layout = rng.next_u64();
    Rng a(layout), b(layout);
    const auto moon = random_spec(a, DistillMode::kMoon, classes, n_old, true);
    const auto mib = random_spec(b, DistillMode::kMib, classes, n_old, true);
    std::vector<double> z(classes);
    const double spread = rng.uniform(0.1, 30.0);
    for (double& v : z) v = rng.uniform(-spread, spread);
    const auto p = softmax(z);
    const auto rm = regroup(p, moon);
    const auto rb = regroup(p, mib);
    identical += rm.size() == rb.size() &&
                 std::memcmp(rm.data(), rb.data(), rm.size() * sizeof(double)) == 0;
  }
  Verdict v;
  v.pass = identical == kDegeneracyInstances;
  v.detail = format("%d/%d background-only splits bit-identical", identical,
                    kDegeneracyInstances);
  return v;
}

// Criterion 3.
Verdict conservation() {
  Rng rng(0x63);
  double worst = 0.0;
  for (int inst = 0; inst < kConservationInstances; ++inst) {
    const std::size_t classes = 2 + rng.below(63);
    const std::size_t n_old = 1 + rng.below(classes);
    const auto spec = random_spec(rng, DistillMode::kMoon, classes, n_old, false);
    std::vector<double> z(classes);
    const double spread = rng.uniform(0.1, 40.0);
    for (double& v : z) v = rng.uniform(-spread, spread);
    const auto r = regroup(softmax(z), spec);
    worst = std::max(worst, std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0));
  }
  Verdict v;
  v.pass = worst <= kConservationTolerance;
  v.detail = format("%d random inputs, worst |sum - 1| = %.2e (<= %.0e)",
                    kConservationInstances, worst, kConservationTolerance);
  return v;
}

// Criterion 4.
Verdict miou_oracle() {
  Rng rng(0x64);
  int exact = 0;
  for (int inst = 0; inst < kOracleGrids; ++inst) {
    const std::size_t h = 1 + rng.below(kOracleMaxSide);
    const std::size_t w = 1 + rng.below(kOracleMaxSide);
    const std::size_t k = 1 + rng.below(20);
    std::vector<ClassId> space(k);
    for (std::size_t i = 0; i < k; ++i) space[i] = static_cast<ClassId>(3 * i + 1);
    LabelGrid truth(h, w), pred(h, w);
    // Skewed draws so some classes are absent from one or both grids.
    const std::size_t used_t = 1 + rng.below(k), used_p = 1 + rng.below(k);
    for (auto& c : truth.labels) c = space[rng.below(used_t)];
    for (auto& c : pred.labels) c = space[k - 1 - rng.below(used_p)];
    ConfusionMatrix cm(space, 3 * k + 1);
    cm.accumulate(pred, truth);

    bool ok = cm.total() == h * w;
    std::vector<std::optional<double>> from_cm, brute;
    for (ClassId c : space) {
      std::uint64_t inter = 0, uni = 0;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const bool in_t = truth.at(y, x) == c, in_p = pred.at(y, x) == c;
          inter += in_t && in_p;
          uni += in_t || in_p;
        }
      const std::size_t i = cm.index_of(c);
      std::uint64_t row = 0, col = 0;
      for (std::size_t j = 0; j < k; ++j) {
        row += cm.count(i, j);
        col += cm.count(j, i);
      }
      ok = ok && cm.count(i, i) == inter && row + col - cm.count(i, i) == uni;
      brute.push_back(uni == 0 ? std::nullopt
                               : std::optional(static_cast<double>(inter) /
                                               static_cast<double>(uni)));
      from_cm.push_back(cm.iou(c));
    }
    ok = ok && from_cm == brute && mean_iou(from_cm) == mean_iou(brute);
    exact += ok;
  }
  Verdict v;
  v.pass = exact == kOracleGrids;
  v.detail = format("%d/%d grid pairs (up to %zux%zu) match pixel counting exactly",
                    exact, kOracleGrids, kOracleMaxSide, kOracleMaxSide);
  return v;
}

// Criterion 5: reference class-group listings, copied as published.

struct GroupListing {
  const char* preset;
  std::size_t tasks;
  const char* unsplit;
  const char* split;
  const char* retained;
};

const char* kMvUnsplit =
    "bird, ground animal, curb, fence, guard rail,  wall, bike lane, "
    "crosswalk - plain, curb cut, pedestrian area, rail track, service lane, "
    "sidewalk, bridge, building, tunnel, person, bicyclist, motorcyclist, "
    "other rider, mountain, sand, sky, snow, terrain, vegetation, water, "
    "banner, bench, bike rack,  catch basin, cctv camera, fire hydrant, "
    "junction box, mailbox, manhole, phone booth, pothole, street light, pole, "
    "traffic sign frame, utility pole, trash can, bicycle, boat, bus, car, "
    "caravan, motorcycle, on rails, other vehicle, trailer, truck, wheeled "
    "slow, car mount, ego vehicle";
const char* kMvSplit =
    "ambiguous barrier, concrete block, driveway, dynamic, garage, ground, "
    "lane marking (only) - crosswalk, lane marking (only) - dashed line, lane "
    "marking (only) - other, lane marking (only) - test, lane marking - "
    "ambiguous, lane marking - arrow (left), lane marking - arrow (other), "
    "lane marking - arrow (right), lane marking - arrow (split left or "
    "straight), lane marking - arrow (split right or straight), lane marking "
    "- arrow (straight), lane marking - give way (row), lane marking - give "
    "way (single), lane marking - hatched (chevron), lane marking - hatched "
    "(diagonal), lane marking - other, lane marking - stop line, lane marking "
    "- straight line, lane marking - symbol (bicycle), lane marking - symbol "
    "(other), lane marking - text, lane marking - zigzag line, lane "
    "separator, parking aisle, parking meter, person group, pole group, road "
    "median, road shoulder, road side,  signage - ambiguous, signage - back, "
    "signage - information, signage - other, signage - store, static, "
    "temporary barrier, traffic cone, traffic island, traffic light - "
    "cyclists, traffic light - general (horizontal), traffic light - general "
    "(upright), traffic light - other, traffic light - pedestrians, traffic "
    "sign - ambiguous, traffic sign - direction (back), traffic sign - "
    "direction (front), traffic sign - parking, traffic sign - temporary "
    "(back), traffic sign - temporary (front), vehicle group, water valve";
const char* kMvRetained =
    "background, barrier, lane marking - crosswalk, parking, road, traffic "
    "sign (front), traffic sign (back), signage - advertisement, lane marking "
    "- dashed line, traffic light - general (single)";
const char* kCsRetained =
    "flat (sidewalk), construction (fence), object (traffic sign), nature "
    "(terrain), human (rider), vehicle (bicycle)";

const GroupListing kListings[] = {
    {"cs_ex1", 6, "sky",
     "road,  building, pole, vegetation, person, car, wall, traffic light, "
     "truck, bus, train, motorcycle",
     kCsRetained},
    {"cs_ex2", 7, "sky",
     "road,  building, wall, pole, traffic light, vegetation, person, car, "
     "truck, bus, train, motorcycle",
     kCsRetained},
    {"voc_ex1", 3, "person",
     "bird, bottle, aeroplane, cow, horse, sheep, chair, sofa, dining table, "
     "bicycle, motorbike",
     "animals (cat, dog), household (tv/monitor, plant), 4-wheeler (car, bus), "
     "vehicle (boat, train)"},
    {"voc_ex2", 6, "person",
     "bird, plant, train, sheep, tv/monitor, boat, horse, dining table, "
     "aeroplane, cow, sofa, motorbike, dog, chair, bicycle",
     "animals (cat), household (bottle), vehicle (car, bus)"},
    {"voc_ex3", 4, "person",
     "dog, horse, cow, sheep, bird, chair, sofa, table, tv/monitor, plant, "
     "bus, bicycle, motorbike, aeroplane, boat, train ",
     "animals (cat), household (bottle), vehicle (car)"},
    {"mv_ex1", 2, kMvUnsplit, kMvSplit, kMvRetained},
    {"mv_ex2", 11, kMvUnsplit, kMvSplit, kMvRetained},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

// Splits on commas outside parentheses.
std::vector<std::string> top_level_items(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::set<std::string> name_set(const std::string& s) {
  auto v = top_level_items(s);
  return {v.begin(), v.end()};
}

// A retained entry reads "parent (leaf, leaf)" or just "name". Entries are
// normalised before comparison: background is dropped (it is never scored),
// a parent that no task introduces is folded into its nearest introduced
// ancestor, and a bare leaf name stands for the parent whose remainder it is.
struct RetainedEntry {
  std::set<std::string> leaves;
  bool leaves_listed = false;
};

std::map<std::string, RetainedEntry> normalised_listing(const std::string& s,
                                                        const TaskSequence& seq) {
  const Ontology& o = seq.ontology;
  const auto intro = detail::introduction_tasks(seq);
  const auto groups = class_groups(seq);
  std::map<std::string, RetainedEntry> out;
  for (const std::string& item : top_level_items(s)) {
    std::string name = item;
    RetainedEntry e;
    if (const auto open = item.find(" ("); open != std::string::npos &&
                                           item.back() == ')' &&
                                           !o.find(item).has_value()) {
      name = item.substr(0, open);
      for (const auto& leaf :
           top_level_items(item.substr(open + 2, item.size() - open - 3)))
        e.leaves.insert(leaf);
      e.leaves_listed = true;
    }
    if (name == o.name(kBackground)) continue;
    auto id = o.find(name);
    if (!id) {
      out["<unknown " + name + ">"] = e;
      continue;
    }
    ClassId c = *id;
    if (!e.leaves_listed) {
      for (const auto& [parent, leaves] : groups.retained)
        if (std::find(leaves.begin(), leaves.end(), c) != leaves.end()) c = parent;
    }
    while (intro[c] == detail::kNever && o.parent(c)) c = *o.parent(c);
    RetainedEntry& slot = out[o.name(c)];
    slot.leaves.insert(e.leaves.begin(), e.leaves.end());
    slot.leaves_listed = slot.leaves_listed || e.leaves_listed;
  }
  return out;
}

std::string joined(const std::set<std::string>& s) {
  std::string out;
  for (const auto& x : s) out += (out.empty() ? "" : ", ") + x;
  return out;
}

Verdict preset_fidelity() {
  Verdict v;
  int matched = 0;
  for (const GroupListing& ref : kListings) {
    std::vector<std::string> problems;
    const TaskSequence seq = load_preset(ref.preset);
    const auto check = validate_sequence(seq);
    if (!check.ok()) problems.push_back("does not validate");
    if (seq.tasks.size() != ref.tasks)
      problems.push_back(format("%zu tasks, expected %zu", seq.tasks.size(), ref.tasks));
    const auto groups = class_groups(seq);
    auto names = [&](const std::vector<ClassId>& ids) {
      std::set<std::string> out;
      for (ClassId c : ids) out.insert(seq.ontology.name(c));
      return out;
    };
    if (names(groups.unsplit) != name_set(ref.unsplit))
      problems.push_back("unsplit {" + joined(names(groups.unsplit)) + "}");
    if (names(groups.split) != name_set(ref.split))
      problems.push_back("split {" + joined(names(groups.split)) + "}");
    const auto expected = normalised_listing(ref.retained, seq);
    std::map<std::string, std::set<std::string>> actual;
    for (const auto& [parent, leaves] : groups.retained) {
      auto& slot = actual[seq.ontology.name(parent)];
      for (ClassId l : leaves) slot.insert(seq.ontology.name(l));
    }
    bool retained_ok = expected.size() == actual.size();
    for (const auto& [parent, entry] : expected) {
      auto it = actual.find(parent);
      retained_ok = retained_ok && it != actual.end() &&
                    (!entry.leaves_listed || it->second == entry.leaves);
    }
    if (!retained_ok) {
      std::string got;
      for (const auto& [p, l] : actual) got += " " + p + " (" + joined(l) + ")";
      problems.push_back("retained" + got);
    }
    if (problems.empty()) {
      ++matched;
    } else {
      std::string msg = std::string(ref.preset) + ":";
      for (const auto& p : problems) msg += " " + p + ";";
      v.notes.push_back(msg);
    }
  }
  v.pass = matched == static_cast<int>(std::size(kListings));
  v.detail = format("%d/%zu presets validate with matching task counts and "
                    "class groups",
                    matched, std::size(kListings));
  return v;
}

// Criteria 6 and 7 share one benchmark sweep.
struct SeedScores {
  std::map<Method, GroupReport> groups;
  std::map<Method, TaskwiseReport> taskwise;
};

struct Sweep {
  std::vector<SeedScores> seeds;
  double seconds = 0.0;
};

int benchmark_seeds() {
  if (const char* env = std::getenv("CLEO_ACCEPTANCE_SEEDS")) {
    const int n = std::atoi(env);
    if (n > 0) return std::min(n, kBenchmarkSeeds);
  }
  return kBenchmarkSeeds;
}

Sweep run_sweep() {
  const auto start = Clock::now();
  Sweep sweep;
  ExperimentConfig cfg;
  cfg.preset = "cs_ex2";
  const TaskSequence seq = load_experiment_sequence(cfg);
  for (int s = 0; s < benchmark_seeds(); ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const Benchmark bench = build_benchmark(seq, cfg);
    const TrainConfig train = resolved_train(cfg);
    SeedScores scores;
    for (Method m : all_methods()) {
      const RunOutcome out = run_benchmark(seq, bench, m, train);
      scores.groups[m] = out.eval.groups;
      scores.taskwise[m] = out.eval.taskwise;
    }
    sweep.seeds.push_back(std::move(scores));
  }
  sweep.seconds = seconds_since(start);
  return sweep;
}

double value(const std::optional<double>& v) { return v.value_or(0.0); }

Verdict forgetting(const Sweep& sweep) {
  Verdict v;
  int hits = 0;
  const int n = static_cast<int>(sweep.seeds.size());
  for (int s = 0; s < n; ++s) {
    const auto& tw = sweep.seeds[s].taskwise.at(Method::kFinetune);
    const double first = value(tw.tasks.front()), last = value(tw.tasks.back());
    const bool ok = first < kForgottenCeiling && last > kLearnedFloor;
    hits += ok;
    v.notes.push_back(format("seed %d finetune task-0 %.3f final-task %.3f %s", s,
                             first, last, ok ? "" : "(miss)"));
  }
  v.pass = n == kBenchmarkSeeds && hits >= kForgettingQuorum &&
           sweep.seconds < kBenchmarkBudgetSeconds;
  v.detail = format("finetune task-0 < %.2f and final-task > %.1f in %d/%d seeds "
                    "(need %d/%d); all methods %.0fs (< %.0fs)",
                    kForgottenCeiling, kLearnedFloor, hits, n, kForgettingQuorum,
                    kBenchmarkSeeds, sweep.seconds, kBenchmarkBudgetSeconds);
  return v;
}

Verdict method_ordering(const Sweep& sweep) {
  Verdict v;
  int moon_wins = 0, joint_wins = 0;
  const int n = static_cast<int>(sweep.seeds.size());
  for (int s = 0; s < n; ++s) {
    const auto& g = sweep.seeds[s].groups;
    const double moon = value(g.at(Method::kMoon).split_retained_miou);
    const double kd = value(g.at(Method::kKdStandard).split_retained_miou);
    const double joint = value(g.at(Method::kJoint).all_miou);
    bool joint_best = true;
    for (Method m : all_methods())
      if (m != Method::kJoint) joint_best = joint_best && joint >= value(g.at(m).all_miou);
    moon_wins += moon > kd;
    joint_wins += joint_best;
    std::string all;
    for (Method m : all_methods())
      all += format(" %s=%.3f", std::string(to_string(m)).c_str(),
                    value(g.at(m).all_miou));
    v.notes.push_back(format("seed %d split+retained moon %.3f kd_standard %.3f; "
                             "all:%s",
                             s, moon, kd, all.c_str()));
  }
  v.pass = n == kBenchmarkSeeds && moon_wins >= kOrderingQuorum &&
           joint_wins >= kOrderingQuorum;
  v.detail = format("moon > kd_standard on split+retained in %d/%d seeds, joint "
                    ">= every continual method on all in %d/%d (need %d/%d each)",
                    moon_wins, n, joint_wins, n, kOrderingQuorum, kBenchmarkSeeds);
  return v;
}

// Criterion 8.
std::map<std::string, std::string> directory_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = s.str();
  }
  return out;
}

Verdict determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("cleo_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::size_t files = 0, identical = 0;
  for (Method m : all_methods()) {
    std::map<std::string, std::string> outputs[2];
    const char* threads[2] = {"1", "4"};
    for (int i = 0; i < 2; ++i) {
      ::setenv("CLEO_THREADS", threads[i], 1);
      ExperimentConfig cfg;
      cfg.preset = "cs_ex2";
      cfg.method = m;
      cfg.seed = 8;
      cfg.epochs = 3;
      cfg.out = (root / (std::string(to_string(m)) + "_" + threads[i])).string();
      cmd_run(cfg);
      outputs[i] = directory_bytes(cfg.out);
    }
    for (const auto& [rel, bytes] : outputs[0]) {
      ++files;
      auto it = outputs[1].find(rel);
      identical += it != outputs[1].end() && it->second == bytes;
    }
    files += outputs[1].size() > outputs[0].size()
                 ? outputs[1].size() - outputs[0].size()
                 : 0;
  }
  ::unsetenv("CLEO_THREADS");
  fs::remove_all(root);
  Verdict v;
  v.pass = files > 0 && identical == files;
  v.detail = format("%zu/%zu output files byte-identical across CLEO_THREADS=1/4 "
                    "for all methods",
                    identical, files);
  return v;
}

// Criterion 9.
Verdict copy_parent_invariance() {
  Rng rng(0x69);
  const auto names = preset_names();
  double worst = 0.0;
  for (int i = 0; i < kInvarianceVectors; ++i) {
    const TaskSequence seq = load_preset(names[rng.below(names.size())]);
    const std::size_t t = 1 + rng.below(seq.last_task());
    const std::size_t d = 2 + rng.below(7), h = 1 + rng.below(16);
    ModelParams before =
        init_model(d, h, label_space_at(seq, t - 1).size(), rng.next_u64());
    for (double& b : before.b2) b = rng.uniform(-2.0, 2.0);
    const ModelParams after = expand_head(before, seq, t, HeadInit::kCopyParent);
    const auto spec = make_distillation_spec(seq, t, DistillMode::kMoon);
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    const auto p0 = predict_proba(before, x);
    const auto grouped = regroup(predict_proba(after, x), spec);
    for (std::size_t c = 0; c < p0.size(); ++c)
      worst = std::max(worst, std::abs(grouped[c] - p0[c]));
  }
  Verdict v;
  v.pass = worst <= kInvarianceTolerance;
  v.detail = format("%d feature vectors, worst |grouped - before| = %.2e (<= %.0e)",
                    kInvarianceVectors, worst, kInvarianceTolerance);
  return v;
}

bool report(int id, const char* name, const std::function<Verdict()>& run) {
  const auto start = Clock::now();
  Verdict v;
  try {
    v = run();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("threw: ") + e.what();
  }
  std::printf("[%s] %d %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, name,
              v.detail.c_str(), seconds_since(start));
  for (const auto& note : v.notes) std::printf("       %s\n", note.c_str());
  std::fflush(stdout);
  return v.pass;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report(1, "gradient fidelity", gradient_fidelity);
  ok &= report(2, "moon/mib degeneracy", moon_mib_degeneracy);
  ok &= report(3, "grouped mass conservation", conservation);
  ok &= report(4, "mIoU oracle", miou_oracle);
  ok &= report(5, "preset fidelity", preset_fidelity);
  Sweep sweep;
  const auto sweep_start = Clock::now();
  std::string sweep_error;
  try {
    sweep = run_sweep();
  } catch (const std::exception& e) {
    sweep_error = e.what();
  }
  auto from_sweep = [&](Verdict (*fn)(const Sweep&)) {
    return [&, fn] {
      if (!sweep_error.empty()) throw std::runtime_error(sweep_error);
      return fn(sweep);
    };
  };
  std::printf("       benchmark sweep: %zu seeds x %zu methods in %.1fs\n",
              sweep.seeds.size(), all_methods().size(), seconds_since(sweep_start));
  ok &= report(6, "forgetting reproduction", from_sweep(forgetting));
  ok &= report(7, "method ordering", from_sweep(method_ordering));
  ok &= report(8, "determinism", determinism);
  ok &= report(9, "copy_parent invariance", copy_parent_invariance);
  std::printf("%s\n", ok ? "all criteria passed" : "some criteria failed");
  return ok ? 0 : 1;
}

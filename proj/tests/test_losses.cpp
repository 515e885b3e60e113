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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cleo/error.hpp"
#include "cleo/losses.hpp"
#include "cleo/rng.hpp"
#include "test_util.hpp"

namespace cleo {
namespace {

// Teacher {bg, a, b}; student adds c (from a) and d (from bg).
DistillationSpec small_spec(DistillMode mode) {
  const std::vector<SplitSpec> splits{{1, {3}, false}, {0, {4}, false}};
  return make_distillation_spec(mode, {0, 1, 2}, {0, 1, 2, 3, 4}, splits);
}

const std::vector<double> kZ{0.3, -0.2, 0.5, 1.1, -0.7};
const std::vector<double> kQ{0.5, 0.3, 0.2};

struct Reference {
  DistillMode mode;
  double loss;
  std::vector<double> grad;
};

// Values from a 40-digit evaluation of the loss and its numerical derivative.
const Reference kReferences[] = {
    {DistillMode::kStandard, 1.1495462038649450433,
     {-0.14638488527349808676, -0.085521591180576239954,
      0.23190647645407432672, 0.0, 0.0}},
    {DistillMode::kMib, 1.1607933114945672713,
     {0.045312574893168047736, -0.1881219187157639409,
      0.025294789092732410971, 0.10084499000012569303,
      0.016669564729737789157}},
    {DistillMode::kMoon, 1.1814121806519261269,
     {-0.18107351697656453956, 0.047628576197003642882,
      0.025294789092732410971, 0.17476337592311472275,
      -0.066613224236286237044}},
};

TEST(Softmax, StableAndNormalized) {
  const std::vector<double> z{1000.0, 1000.0, -1000.0};
  const auto p = softmax(z);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_EQ(p[2], 0.0);
}

TEST(CrossEntropy, Reference) {
  const std::vector<double> p{0.2, 0.8};
  EXPECT_NEAR(cross_entropy(p, 1), 0.22314355131420976, 1e-15);
  const std::vector<double> zero{1.0, 0.0};
  EXPECT_NEAR(cross_entropy(zero, 1), -std::log(1e-12), 1e-9);
  EXPECT_THROW(cross_entropy(p, 2), std::out_of_range);
}

TEST(DistillationSpec, GroupingTables) {
  EXPECT_EQ(small_spec(DistillMode::kStandard).group_of,
            (std::vector<int>{0, 1, 2, kDropped, kDropped}));
  EXPECT_EQ(small_spec(DistillMode::kMib).group_of,
            (std::vector<int>{0, 1, 2, 0, 0}));
  EXPECT_EQ(small_spec(DistillMode::kMoon).group_of,
            (std::vector<int>{0, 1, 2, 1, 0}));
}

TEST(DistillationSpec, RejectsInconsistentInputs) {
  const std::vector<SplitSpec> none;
  EXPECT_THROW(make_distillation_spec(DistillMode::kMoon, {0, 2}, {0, 1, 2},
                                      none),
               std::invalid_argument);
  EXPECT_THROW(make_distillation_spec(DistillMode::kMoon, {1}, {1, 2}, none),
               std::invalid_argument);
  const std::vector<SplitSpec> bad_parent{{7, {2}, false}};
  EXPECT_THROW(make_distillation_spec(DistillMode::kMoon, {0, 1}, {0, 1, 2},
                                      bad_parent),
               std::invalid_argument);
  const std::vector<SplitSpec> old_child{{0, {1}, false}};
  EXPECT_THROW(make_distillation_spec(DistillMode::kMoon, {0, 1}, {0, 1, 2},
                                      old_child),
               std::invalid_argument);
  const std::vector<SplitSpec> twice{{0, {2}, false}, {1, {2}, false}};
  EXPECT_THROW(make_distillation_spec(DistillMode::kMoon, {0, 1}, {0, 1, 2},
                                      twice),
               std::invalid_argument);
  EXPECT_THROW(make_distillation_spec(DistillMode::kMoon, {0, 1}, {0, 1, 2},
                                      none),
               std::invalid_argument);
}

TEST(DistillationSpec, FromSequence) {
  const auto seq = testing::toy_sequence();
  const auto spec = make_distillation_spec(seq, 1, DistillMode::kMoon);
  // student: bg animal vehicle sky bird car cone
  EXPECT_EQ(spec.group_of, (std::vector<int>{0, 1, 2, 3, 1, 2, 0}));
  EXPECT_THROW(make_distillation_spec(seq, 0, DistillMode::kMoon),
               std::out_of_range);
}

TEST(KdLoss, MatchesReferenceValues) {
  for (const Reference& r : kReferences) {
    SCOPED_TRACE(std::string(to_string(r.mode)));
    const auto spec = small_spec(r.mode);
    EXPECT_NEAR(kd_loss(kQ, kZ, spec), r.loss, 1e-14);
    const auto g = kd_grad(kQ, kZ, spec);
    for (std::size_t j = 0; j < g.size(); ++j)
      EXPECT_NEAR(g[j], r.grad[j], 1e-14) << "j=" << j;
  }
}

TEST(KdLoss, StandardModeIgnoresNewClasses) {
  const auto spec = small_spec(DistillMode::kStandard);
  auto z = kZ;
  z[3] += 5.0;
  z[4] -= 3.0;
  EXPECT_NEAR(kd_loss(kQ, z, spec), kd_loss(kQ, kZ, spec), 1e-12);
}

TEST(KdLoss, StandardModeDegenerateOldMassThrows) {
  const auto spec = small_spec(DistillMode::kStandard);
  const std::vector<double> z{-800, -800, -800, 0, 0};
  EXPECT_THROW(kd_loss(kQ, z, spec), NumericError);
}

TEST(KdLoss, ShapeMismatchThrows) {
  const auto spec = small_spec(DistillMode::kMoon);
  const std::vector<double> short_z{0.0, 1.0};
  const std::vector<double> short_q{1.0};
  EXPECT_THROW(kd_loss(kQ, short_z, spec), std::invalid_argument);
  EXPECT_THROW(kd_loss(short_q, kZ, spec), std::invalid_argument);
}

TEST(KdLoss, FlooredClassesCarryNoGradient) {
  // Student puts no mass on teacher class b: its log is floored, the loss is
  // finite and the gradient stays bounded.
  const auto spec = small_spec(DistillMode::kMoon);
  const std::vector<double> z{0.0, 0.0, -900.0, 0.0, 0.0};
  const double loss = kd_loss(kQ, z, spec);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GT(loss, 0.2 * -std::log(1e-12) - 1e-9);
  for (double g : kd_grad(kQ, z, spec)) EXPECT_TRUE(std::isfinite(g));
}

class KdProperties : public ::testing::TestWithParam<DistillMode> {};

TEST_P(KdProperties, ShiftInvariantAndGradientSumsToZero) {
  const auto spec = small_spec(GetParam());
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(5), q(3);
    for (double& v : z) v = rng.uniform(-4.0, 4.0);
    double s = 0.0;
    for (double& v : q) s += (v = rng.uniform(0.01, 1.0));
    for (double& v : q) v /= s;
    auto shifted = z;
    for (double& v : shifted) v += 3.25;
    EXPECT_NEAR(kd_loss(q, z, spec), kd_loss(q, shifted, spec), 1e-12);
    const auto g = kd_grad(q, z, spec);
    EXPECT_NEAR(std::accumulate(g.begin(), g.end(), 0.0), 0.0, 1e-12);
  }
}

TEST_P(KdProperties, GradientMatchesCentralDifferences) {
  const auto spec = small_spec(GetParam());
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(5), q(3);
    for (double& v : z) v = rng.uniform(-3.0, 3.0);
    double s = 0.0;
    for (double& v : q) s += (v = rng.uniform(0.01, 1.0));
    for (double& v : q) v /= s;
    const auto g = kd_grad(q, z, spec);
    for (std::size_t j = 0; j < z.size(); ++j) {
      auto hi = z, lo = z;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      const double fd = (kd_loss(q, hi, spec) - kd_loss(q, lo, spec)) / 2e-5;
      EXPECT_NEAR(g[j], fd, 1e-8);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, KdProperties,
                         ::testing::Values(DistillMode::kStandard,
                                           DistillMode::kMib,
                                           DistillMode::kMoon),
                         [](const auto& info) {
                           return std::string(to_string(info.param));
                         });

TEST(Regroup, MoonEqualsMibWhenOnlyBackgroundSplits) {
  const std::vector<SplitSpec> splits{{0, {3, 4}, false}};
  const auto moon = make_distillation_spec(DistillMode::kMoon, {0, 1, 2},
                                           {0, 1, 2, 3, 4}, splits);
  const auto mib = make_distillation_spec(DistillMode::kMib, {0, 1, 2},
                                          {0, 1, 2, 3, 4}, splits);
  const auto p = softmax(kZ);
  EXPECT_EQ(regroup(p, moon), regroup(p, mib));
}

TEST(Regroup, GroupedModesConserveMass) {
  const auto p = softmax(kZ);
  for (DistillMode m : {DistillMode::kMib, DistillMode::kMoon,
                        DistillMode::kStandard}) {
    const auto r = regroup(p, small_spec(m));
    EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1.0, 1e-15);
  }
}

TEST(TotalLoss, PlainAndUnbiasedSupervision) {
  const std::vector<std::uint32_t> targets{0, 3};
  std::vector<double> logits = kZ;
  logits.insert(logits.end(), kZ.begin(), kZ.end());
  const PixelBatch batch{5, logits, targets, {}};
  const auto p = softmax(kZ);

  const auto plain = total_loss(batch, 0.0, nullptr);
  EXPECT_NEAR(plain.loss, 0.5 * (-std::log(p[0]) - std::log(p[3])), 1e-14);

  const auto unbiased = total_loss(batch, 0.0, nullptr, 3);
  EXPECT_NEAR(unbiased.loss, 0.5 * (0.6507993566959901622 - std::log(p[3])),
              1e-14);
  for (std::size_t j = 0; j < 5; ++j) {
    const double pooled = p[0] + p[1] + p[2];
    const double expect = 0.5 * (p[j] - (j < 3 ? p[j] / pooled : 0.0));
    EXPECT_NEAR(unbiased.grad[j], expect, 1e-15);
  }
}

TEST(TotalLoss, AddsWeightedDistillation) {
  const auto spec = small_spec(DistillMode::kMoon);
  const std::vector<std::uint32_t> targets{4};
  const PixelBatch batch{5, kZ, targets, kQ};
  const auto r = total_loss(batch, 2.5, &spec);
  EXPECT_NEAR(r.loss, -std::log(softmax(kZ)[4]) + 2.5 * kReferences[2].loss,
              1e-13);
}

TEST(TotalLoss, FiniteDifferences) {
  const auto spec = small_spec(DistillMode::kMoon);
  Rng rng(5);
  const std::size_t n = 6;
  std::vector<double> z(n * 5), q(n * 3);
  std::vector<std::uint32_t> t(n);
  for (double& v : z) v = rng.uniform(-2.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<std::uint32_t>(rng.below(5));
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += (q[i * 3 + c] = rng.uniform(0.1, 1));
    for (std::size_t c = 0; c < 3; ++c) q[i * 3 + c] /= s;
  }
  for (std::size_t span : {std::size_t{1}, std::size_t{3}}) {
    const auto r = total_loss({5, z, t, q}, 0.7, &spec, span);
    for (std::size_t k = 0; k < z.size(); ++k) {
      auto hi = z, lo = z;
      hi[k] += 1e-5;
      lo[k] -= 1e-5;
      const double fd = (total_loss({5, hi, t, q}, 0.7, &spec, span).loss -
                         total_loss({5, lo, t, q}, 0.7, &spec, span).loss) /
                        2e-5;
      EXPECT_NEAR(r.grad[k], fd, 1e-8);
    }
  }
}

TEST(TotalLoss, InputErrors) {
  const auto spec = small_spec(DistillMode::kMoon);
  const std::vector<std::uint32_t> targets{1};
  const std::vector<std::uint32_t> none;
  const std::vector<std::uint32_t> bad_target{5};
  EXPECT_THROW(total_loss({5, {}, none, {}}, 0.0, nullptr),
               std::invalid_argument);
  EXPECT_THROW(total_loss({5, kZ, targets, {}}, -1.0, nullptr),
               std::invalid_argument);
  EXPECT_THROW(total_loss({4, kZ, targets, {}}, 0.0, nullptr),
               std::invalid_argument);
  EXPECT_THROW(total_loss({5, kZ, targets, {}}, 1.0, &spec),
               std::invalid_argument);
  EXPECT_THROW(total_loss({5, kZ, targets, {}}, 0.0, nullptr, 6),
               std::invalid_argument);
  EXPECT_THROW(total_loss({5, kZ, bad_target, {}}, 0.0, nullptr),
               std::out_of_range);
  // lambda = 0 never reads the teacher.
  EXPECT_NO_THROW(total_loss({5, kZ, targets, {}}, 0.0, &spec));
}

}  // namespace
}  // namespace cleo

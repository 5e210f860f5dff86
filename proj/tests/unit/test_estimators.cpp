// Copyright 2026 The Sandwich QPE Authors
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
#include <complex>
#include <vector>

#include "sandwich/errors.hpp"
#include "sandwich/estimators.hpp"
#include "sandwich/sumtree.hpp"

namespace sandwich {
namespace {

double phase(const SpectralModel& m, std::uint64_t k) {
    std::complex<double> z = 0.0;
    for (std::size_t j = 0; j < m.levels(); ++j) {
        z += m.weights()[j] * std::exp(std::complex<double>(0.0, k * m.eigenphases()[j]));
    }
    return std::arg(z);
}

MagnitudeTriple exact_triple(const SpectralModel& m, std::uint64_t a, std::uint64_t b) {
    return {exact_amplitude(m, a).modulus, exact_amplitude(m, b).modulus, exact_amplitude(m, a + b).modulus};
}

const RngStream kExact(1, ShotNoise::kExact);

TEST(SinOmega, InvertsClosedForm) {
    const SpectralModel m = generate_model(ModelKind::kUniformRandom, 9, 5);
    for (double phi : {0.3, kPi / 4, 1.2}) {
        const MagnitudeTriple t = exact_triple(m, 3, 5);
        const double s = exact_sandwich_magnitude(m, 3, 5, PhaseAngle(phi));
        const double omega = phase(m, 3) + phase(m, 5) - phase(m, 8) + phi;
        EXPECT_NEAR(sin_omega_from_magnitudes(t, s, phi), std::sin(omega), 1e-10);
    }
}

TEST(EstimateOmega, ExactIdentity) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SpectralModel m = generate_model(ModelKind::kGroundDominated, 12, seed);
        const std::uint64_t a = 1 + seed % 7, b = 2 + seed % 5;
        BudgetPolicy policy;
        UsageLedger ledger;
        const NodeEstimate est = estimate_omega(m, a, b, policy, exact_triple(m, a, b), 1000, kExact, ledger);
        const double rebuilt = phase(m, a) + phase(m, b) - est.omega + policy.phi1;
        EXPECT_LT(angular_distance(rebuilt, phase(m, a + b)), 1e-9);
        EXPECT_FALSE(est.clamped);
    }
}

TEST(EstimateOmega, SingleEigenstate) {
    const SpectralModel m({0.9}, {1.0});
    BudgetPolicy policy;
    UsageLedger ledger;
    const NodeEstimate est = estimate_omega(m, 2, 3, policy, exact_triple(m, 2, 3), 1000, kExact, ledger);
    EXPECT_LT(angular_distance(est.omega, policy.phi1), 1e-7);
}

TEST(EstimateOmega, NoisyTwoLevel) {
    // Gap pi/2 with unequal weights, so that r_2 stays away from zero.
    GeneratorParams params;
    params.gap = kPi / 2;
    params.ground_weight = 0.7;
    const SpectralModel m = generate_model(ModelKind::kTwoLevel, 2, 1, params);
    BudgetPolicy policy;
    const double omega = canonical_angle(2 * phase(m, 1) - phase(m, 2) + policy.phi1);
    const std::uint64_t shots = 1000000;
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const RngStream rng(seed);
        UsageLedger ledger;
        MagnitudeTriple t;
        t.r_a = estimate_magnitude(m, MeasuredOperator::power(1), shots, rng.child(0), ledger);
        t.r_b = estimate_magnitude(m, MeasuredOperator::power(1), shots, rng.child(1), ledger);
        t.r_ab = estimate_magnitude(m, MeasuredOperator::power(2), shots, rng.child(2), ledger);
        const NodeEstimate est = estimate_omega(m, 1, 1, policy, t, 2 * shots, rng.child(3), ledger);
        inside += angular_distance(est.omega, omega) <= 0.02 ? 1 : 0;
    }
    EXPECT_GE(inside, 190);
}

TEST(EstimateOmega, ClampRateFallsWithShots) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 4);
    BudgetPolicy policy;
    auto clamp_rate = [&](std::uint64_t shots) {
        int clamped = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const RngStream rng(seed);
            UsageLedger ledger;
            MagnitudeTriple t;
            t.r_a = estimate_magnitude(m, MeasuredOperator::power(3), shots, rng.child(0), ledger);
            t.r_b = estimate_magnitude(m, MeasuredOperator::power(4), shots, rng.child(1), ledger);
            t.r_ab = estimate_magnitude(m, MeasuredOperator::power(7), shots, rng.child(2), ledger);
            clamped += estimate_omega(m, 3, 4, policy, t, 2 * shots, rng.child(3), ledger).clamped ? 1 : 0;
        }
        return clamped / 200.0;
    };
    ASSERT_GE(exact_triple(m, 3, 4).min(), 0.3);
    const double coarse = clamp_rate(200);
    const double fine = clamp_rate(1000000);
    EXPECT_LT(fine, 0.01);
    EXPECT_LE(fine, coarse);
}

TEST(EstimateOmega, RejectsFloorViolation) {
    const SpectralModel m({0.0, kPi / 2}, {0.5, 0.5});
    BudgetPolicy policy;
    UsageLedger ledger;
    EXPECT_THROW(estimate_omega(m, 1, 1, policy, exact_triple(m, 1, 1), 1000, kExact, ledger), DegenerateNodeError);
}

TEST(AllocateShots, RootOnlyGetsUnitBudget) {
    BudgetPolicy policy;
    policy.epsilon = 1.0;
    policy.min_shots = 1;
    const SumTree tree = build_tree(2, SplitPolicy{}, RngStream(1));
    const ShotPlan plan = allocate_shots(tree, policy, 2, {{1.0, 1.0, 1.0}});
    ASSERT_EQ(plan.nodes.size(), 1u);
    EXPECT_EQ(plan.nodes[0].shots, 1u);
    EXPECT_DOUBLE_EQ(plan.relative_variance, 1.0);
    policy.min_shots = 100;
    EXPECT_EQ(allocate_shots(tree, policy, 2, {{1.0, 1.0, 1.0}}).nodes[0].shots, 100u);
}

TEST(AllocateShots, InverseSixthPower) {
    BudgetPolicy policy;
    policy.epsilon = 1.0;
    policy.min_shots = 1;
    const SumTree tree = build_tree(2, SplitPolicy{}, RngStream(1));
    const auto full = allocate_shots(tree, policy, 2, {{1.0, 1.0, 1.0}}).nodes[0].shots;
    const auto half = allocate_shots(tree, policy, 2, {{0.5, 1.0, 1.0}}).nodes[0].shots;
    EXPECT_EQ(half, 64 * full);
}

TEST(AllocateShots, LeafBudget) {
    BudgetPolicy policy;
    const SumTree tree = build_tree(40, SplitPolicy{}, RngStream(2));
    const std::vector<MagnitudeTriple> ones(nontrivial_nodes(tree).size(), {1.0, 1.0, 1.0});
    const ShotPlan plan = allocate_shots(tree, policy, 40, ones);
    ASSERT_EQ(plan.leaves.size(), 1u);
    EXPECT_EQ(plan.leaves[0].count, 40u);
    EXPECT_EQ(plan.leaves[0].shots, static_cast<std::uint64_t>(std::ceil(16.0 * (40 / 0.05) * (40 / 0.05))));
}

// Slope of log(predicted U applications) against log k with exact magnitudes.
double predicted_slope(double q) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    BudgetPolicy policy;
    policy.q = q;
    std::vector<double> xs, ys;
    for (std::uint64_t k = 16; k <= 1024; k *= 2) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const SumTree tree = build_tree(k, SplitPolicy{}, RngStream(seed));
            std::vector<MagnitudeTriple> mags;
            for (const auto& node : nontrivial_nodes(tree)) {
                const auto [l, r] = *node.children;
                mags.push_back(exact_triple(m, tree.node(l).value, tree.node(r).value));
            }
            total += static_cast<double>(allocate_shots(tree, policy, k, mags).predicted_u_applications);
        }
        xs.push_back(std::log(static_cast<double>(k)));
        ys.push_back(std::log(total / 100));
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TEST(AllocateShots, PredictedCostScaling) {
    const double linear = predicted_slope(1.0);
    EXPECT_NEAR(linear, 2.0, 0.3);
    // Larger q pushes budget toward the many small nodes near the leaves.
    EXPECT_GT(predicted_slope(2.0), linear);
}

TEST(SandwichTest, ExactModeRecoversPhase) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SpectralModel m = generate_model(ModelKind::kUniformRandom, 8, seed);
        const SumTree tree = build_tree(64, SplitPolicy{}, RngStream(seed));
        if (tree_smin(tree, m) < 1e-6) {
            continue;
        }
        BudgetPolicy policy;
        policy.s_floor = 1e-7;
        policy.budget_scale = 1e-30;
        UsageLedger ledger;
        const EstimateReport report = sandwich_test(m, tree, policy, RngStream(seed, ShotNoise::kExact), ledger);
        EXPECT_LT(angular_distance(report.theta_k, phase(m, 64)), 1e-9);
    }
}

TEST(SandwichTest, UnitPowerIsHadamardOnly) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    UsageLedger ledger;
    const EstimateReport report =
        sandwich_test(m, build_tree(1, SplitPolicy{}, RngStream(1)), BudgetPolicy{}, RngStream(1), ledger);
    EXPECT_TRUE(report.nodes.empty());
    ASSERT_EQ(report.leaves.size(), 1u);
    EXPECT_EQ(report.leaves[0].value, 1u);
    EXPECT_EQ(report.theta_k, report.theta1);
    EXPECT_EQ(report.usage.sprotis_applications, 0u);
}

TEST(SandwichTest, ReportIsSelfConsistent) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    UsageLedger ledger;
    const EstimateReport report =
        sandwich_test(m, build_tree(200, SplitPolicy{}, RngStream(4)), BudgetPolicy{}, RngStream(4), ledger);
    EXPECT_EQ(report.recomputed_theta(), report.theta_k);
    EXPECT_EQ(report.usage, ledger.totals());
    EXPECT_EQ(report.ones_count, 200u);
    EXPECT_EQ(report.theta_k_exact, exact_amplitude(m, 200).argument);
}

TEST(SandwichTest, WorkerCountDoesNotMatter) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    const SumTree tree = build_tree(300, SplitPolicy{}, RngStream(2));
    UsageLedger a, b;
    const auto serial = sandwich_test(m, tree, BudgetPolicy{}, RngStream(8), a, {1});
    const auto threaded = sandwich_test(m, tree, BudgetPolicy{}, RngStream(8), b, {4});
    EXPECT_EQ(serial.theta_k, threaded.theta_k);
    EXPECT_EQ(serial.usage, threaded.usage);
}

TEST(SandwichTest, MagnitudeReuseSavesApplications) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    const SumTree tree = build_tree(256, SplitPolicy{}, RngStream(2));
    BudgetPolicy reuse;
    reuse.reuse_magnitudes = true;
    UsageLedger a, b;
    const auto fresh = sandwich_test(m, tree, BudgetPolicy{}, RngStream(3), a);
    const auto shared = sandwich_test(m, tree, reuse, RngStream(3), b);
    EXPECT_LT(shared.usage.u_applications, fresh.usage.u_applications);
    EXPECT_LT(angular_distance(shared.theta_k, phase(m, 256)), 0.3);
}

TEST(SandwichTest, LeafCutoffExact) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    SplitPolicy split;
    split.leaf_cutoff = 4;
    const SumTree tree = build_tree(100, split, RngStream(6));
    UsageLedger ledger;
    const auto report = sandwich_test(m, tree, BudgetPolicy{}, RngStream(6, ShotNoise::kExact), ledger);
    EXPECT_LT(angular_distance(report.theta_k, phase(m, 100)), 1e-9);
    for (const auto& leaf : report.leaves) {
        EXPECT_LE(leaf.value, 4u);
    }
}

TEST(SequentialBaseline, ChainNodes) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    UsageLedger ledger;
    const auto report = sequential_baseline(m, 3, BudgetPolicy{}, RngStream(1), ledger);
    ASSERT_EQ(report.nodes.size(), 2u);
    std::vector<std::uint64_t> values{report.nodes[0].value, report.nodes[1].value};
    EXPECT_EQ(values, (std::vector<std::uint64_t>{3, 2}));
}

TEST(SequentialBaseline, StopsAtVanishingMagnitude) {
    const SpectralModel m({0.0, kPi / 2}, {0.5, 0.5});
    ASSERT_LT(exact_amplitude(m, 2).modulus, 1e-15);
    UsageLedger ledger;
    try {
        sequential_baseline(m, 5, BudgetPolicy{}, RngStream(1), ledger);
        FAIL() << "expected a degenerate node";
    } catch (const DegenerateNodeError& e) {
        EXPECT_EQ(e.power(), 2u);
    }
}

TEST(HadamardBaseline, BudgetAndAccuracy) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 16, 1);
    UsageLedger ledger;
    const auto report = hadamard_baseline(m, 50, BudgetPolicy{}, RngStream(2), ledger);
    EXPECT_EQ(report.usage.shots, 6400u);
    EXPECT_EQ(report.usage.u_applications, 6400u * 50u);
    EXPECT_LT(report.error(), 0.2);
}

TEST(TwoLayer, RecoversPhaseExactly) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 8, 3);
    TwoLayerKnown known{phase(m, 3), phase(m, 4), phase(m, 5), phase(m, 7), phase(m, 9)};
    UsageLedger ledger;
    const auto result = two_layer_estimate(m, 3, 4, 5, default_two_layer_grid(6), known, {}, kExact, ledger);
    EXPECT_LT(angular_distance(result.theta_abc, phase(m, 12)), 1e-6);
    EXPECT_FALSE(result.shunted_ab);
    EXPECT_FALSE(result.shunted_bc);
}

TEST(TwoLayer, FitsOneMissingPhase) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 8, 3);
    TwoLayerKnown known{phase(m, 3), phase(m, 4), phase(m, 5), phase(m, 7), std::nullopt};
    UsageLedger ledger;
    const auto result = two_layer_estimate(m, 3, 4, 5, default_two_layer_grid(8), known, {}, kExact, ledger);
    EXPECT_LT(angular_distance(result.theta_abc, phase(m, 12)), 1e-6);
    ASSERT_TRUE(result.theta_bc.has_value());
    EXPECT_LT(angular_distance(*result.theta_bc, phase(m, 9)), 1e-6);
}

TEST(TwoLayer, ZeroAnglesAreAmbiguous) {
    const SpectralModel m = generate_model(ModelKind::kGroundDominated, 8, 3);
    TwoLayerKnown known{phase(m, 1), phase(m, 2), phase(m, 3), phase(m, 3), phase(m, 5)};
    const std::vector<std::pair<double, double>> zeros(6, {0.0, 0.0});
    UsageLedger ledger;
    EXPECT_THROW(two_layer_estimate(m, 1, 2, 3, zeros, known, {}, kExact, ledger), AmbiguityError);
    EXPECT_THROW(two_layer_estimate(m, 1, 2, 3, default_two_layer_grid(3), known, {}, kExact, ledger),
                 ParameterError);
}

TEST(BudgetPolicy, Validation) {
    BudgetPolicy p;
    EXPECT_NO_THROW(p.validate());
    p.phi1 = 0.0;
    EXPECT_THROW(p.validate(), ParameterError);
    p = {};
    p.epsilon = 0.0;
    EXPECT_THROW(p.validate(), ParameterError);
    p = {};
    p.q = 0.5;
    EXPECT_THROW(p.validate(), ParameterError);
    p = {};
    p.s_floor = 0.0;
    EXPECT_THROW(p.validate(), ParameterError);
}

}  // namespace
}  // namespace sandwich

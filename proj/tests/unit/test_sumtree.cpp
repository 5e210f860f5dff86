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

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "sandwich/errors.hpp"
#include "sandwich/sumtree.hpp"

namespace sandwich {
namespace {

std::vector<std::uint64_t> values_at(const SumTree& tree, std::uint32_t height) {
    std::vector<std::uint64_t> out;
    for (const auto& node : tree.nodes()) {
        if (node.height == height) {
            out.push_back(node.value);
        }
    }
    return out;
}

std::vector<std::uint64_t> nontrivial_values(const SumTree& tree) {
    std::vector<std::uint64_t> out;
    for (const auto& node : nontrivial_nodes(tree)) {
        out.push_back(node.value);
    }
    return out;
}

SplitPolicy half_split() {
    SplitPolicy policy;
    policy.forced_x = 0.5;
    return policy;
}

TEST(BuildTree, SingleUnit) {
    const SumTree tree = build_tree(1, SplitPolicy{}, RngStream(1));
    EXPECT_EQ(tree.nodes().size(), 1u);
    EXPECT_EQ(tree.h_max(), 1u);
    EXPECT_TRUE(nontrivial_nodes(tree).empty());
    EXPECT_EQ(count_ones_leaves(tree), 1u);

    const SumTree padded = pad_to_uniform_depth(tree);
    ASSERT_TRUE(padded.root().children.has_value());
    EXPECT_EQ(values_at(padded, 1), (std::vector<std::uint64_t>{1, 0}));
}

TEST(BuildTree, ForcedHalvesOfFive) {
    const SumTree tree = build_tree(5, half_split(), RngStream(1));
    EXPECT_EQ(values_at(tree, 1), (std::vector<std::uint64_t>{3, 2}));
    EXPECT_EQ(values_at(tree, 2), (std::vector<std::uint64_t>{2, 1, 1, 1}));
    EXPECT_EQ(values_at(tree, 3), (std::vector<std::uint64_t>{1, 1}));
    EXPECT_EQ(tree.h_max(), 3u);
    EXPECT_EQ(nontrivial_values(tree), (std::vector<std::uint64_t>{5, 3, 2, 2}));

    const SumTree padded = pad_to_uniform_depth(tree);
    EXPECT_EQ(values_at(padded, 3), (std::vector<std::uint64_t>{1, 1, 1, 0, 1, 0, 1, 0}));
    EXPECT_EQ(nontrivial_values(padded), nontrivial_values(tree));
    EXPECT_EQ(count_ones_leaves(padded), 5u);
}

TEST(BuildTree, HeightBoundAtOneMillion) {
    const double y_max = 2.0 / 3.0;
    const auto bound = static_cast<std::uint32_t>(std::ceil(std::log(1e6) / std::log(1.0 / y_max))) + 1;
    EXPECT_EQ(height_bound(1000000, y_max), bound);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SumTree tree = build_tree(1000000, SplitPolicy{}, RngStream(seed));
        EXPECT_LE(tree.h_max(), bound);
    }
}

TEST(BuildTree, StructuralInvariants) {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 300; ++i) {
        const std::uint64_t k = 1 + gen() % 5000;
        SplitPolicy policy;
        policy.x_min = 0.05 + 0.45 * std::uniform_real_distribution<double>()(gen);
        const SumTree tree = build_tree(k, policy, RngStream(i));
        std::map<std::uint32_t, std::uint64_t> per_height_sum, per_height_nontrivial;
        for (const auto& node : tree.nodes()) {
            per_height_sum[node.height] += node.value;
            if (node.is_leaf()) {
                EXPECT_LE(node.value, 1u);
                EXPECT_TRUE(node.trivial);
            } else {
                const auto [l, r] = *node.children;
                EXPECT_EQ(tree.node(l).value + tree.node(r).value, node.value);
                EXPECT_EQ(node.trivial, tree.node(l).value == 0 || tree.node(r).value == 0);
                EXPECT_EQ(tree.node(l).position, 2 * node.position - 1);
                EXPECT_EQ(tree.node(r).position, 2 * node.position);
            }
        }
        for (const auto& node : nontrivial_nodes(tree)) {
            EXPECT_GE(node.value, 2u);
            ++per_height_nontrivial[node.height];
        }
        for (const auto& [h, sum] : per_height_sum) {
            EXPECT_LE(sum, k);
        }
        for (const auto& [h, count] : per_height_nontrivial) {
            EXPECT_LE(count, k / 2);
        }
        EXPECT_EQ(count_ones_leaves(tree), k);
    }
}

TEST(BuildTree, OnesCountConserved) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        EXPECT_EQ(count_ones_leaves(build_tree(997, SplitPolicy{}, RngStream(seed))), 997u);
    }
}

TEST(BuildTree, DeterministicPerSeed) {
    EXPECT_EQ(build_tree(300, SplitPolicy{}, RngStream(5)), build_tree(300, SplitPolicy{}, RngStream(5)));
    EXPECT_NE(build_tree(300, SplitPolicy{}, RngStream(5)), build_tree(300, SplitPolicy{}, RngStream(6)));
}

TEST(BuildTree, LeafCutoff) {
    SplitPolicy policy;
    policy.leaf_cutoff = 4;
    const SumTree tree = build_tree(100, policy, RngStream(2));
    std::uint64_t total = 0;
    for (const auto& [value, count] : leaf_histogram(tree)) {
        EXPECT_GE(value, 1u);
        EXPECT_LE(value, 4u);
        total += value * count;
    }
    EXPECT_EQ(total, 100u);
    for (const auto& node : nontrivial_nodes(tree)) {
        EXPECT_GT(node.value, 4u);
    }
}

TEST(BuildTree, RejectsBadInput) {
    EXPECT_THROW(build_tree(0, SplitPolicy{}, RngStream(1)), ParameterError);
    SplitPolicy policy;
    policy.x_min = 0.6;
    EXPECT_THROW(build_tree(10, policy, RngStream(1)), ParameterError);
    policy.x_min = 0.0;
    EXPECT_THROW(build_tree(10, policy, RngStream(1)), ParameterError);
}

TEST(SumTree, RejectsBrokenStructure) {
    std::vector<TreeNode> nodes(3);
    nodes[0] = {0, 1, 3, std::array<std::size_t, 2>{1, 2}, false};
    nodes[1] = {1, 1, 1, std::nullopt, true};
    nodes[2] = {1, 2, 1, std::nullopt, true};
    EXPECT_THROW(SumTree{nodes}, ParameterError);
    nodes[2].value = 2;
    EXPECT_NO_THROW(SumTree{nodes});
    nodes[0].trivial = true;
    EXPECT_THROW(SumTree{nodes}, ParameterError);
}

TEST(ChainTree, Shape) {
    const SumTree three = degenerate_chain_tree(3);
    EXPECT_EQ(nontrivial_values(three), (std::vector<std::uint64_t>{3, 2}));
    EXPECT_TRUE(nontrivial_nodes(degenerate_chain_tree(1)).empty());
    for (std::uint64_t k : {2u, 3u, 10u, 64u}) {
        const SumTree chain = degenerate_chain_tree(k);
        EXPECT_EQ(chain.h_max(), k - 1);
        EXPECT_EQ(nontrivial_nodes(chain).size(), k - 1);
        EXPECT_EQ(count_ones_leaves(chain), k);
    }
}

TEST(TreeSmin, SingleEigenstateIsOne) {
    const SpectralModel m({0.7}, {1.0});
    EXPECT_NEAR(tree_smin(build_tree(77, SplitPolicy{}, RngStream(1)), m), 1.0, 1e-14);
}

TEST(TreeSmin, VanishingMagnitude) {
    const SpectralModel m({0.0, kPi / 2}, {0.5, 0.5});
    EXPECT_NEAR(exact_amplitude(m, 2).modulus, 0.0, 1e-15);
    const SumTree tree = build_tree(5, half_split(), RngStream(1));
    EXPECT_LT(tree_smin(tree, m), 1e-15);
}

TEST(TreeSmin, BoundedByExhaustiveScan) {
    const SpectralModel m = generate_model(ModelKind::kUniformRandom, 12, 4);
    double r_min = 1.0;
    for (std::uint64_t k = 1; k <= 500; ++k) {
        r_min = std::min(r_min, std::abs(exact_amplitude(m, k).value()));
    }
    const auto table = magnitude_table(m, 500);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const SumTree tree = build_tree(500, SplitPolicy{}, RngStream(seed));
        const double with_root = tree_smin(tree, table);
        EXPECT_GE(with_root, r_min);
        EXPECT_GE(tree_smin(tree, table, true), with_root);
    }
}

TEST(ResampleTree, FindsTreeAvoidingBadValue) {
    const SpectralModel m({0.0, kPi / 9}, {0.5, 0.5});
    SplitPolicy policy;
    policy.x_min = 0.2;
    const auto tree = resample_tree(16, policy, RngStream(3), m, 0.3, 1000);
    ASSERT_TRUE(tree.has_value());
    EXPECT_GE(tree_smin(*tree, m, true), 0.3);
    for (const auto& node : tree->nodes()) {
        EXPECT_NE(node.value, 9u);
    }
    EXPECT_FALSE(resample_tree(16, policy, RngStream(3), m, 0.99, 20).has_value());
}

TEST(TreeJson, RoundTrip) {
    const SumTree tree = build_tree(123, SplitPolicy{}, RngStream(8));
    EXPECT_EQ(tree_from_json(tree_to_json(tree)), tree);
    const SumTree padded = pad_to_uniform_depth(tree);
    EXPECT_EQ(tree_from_json(tree_to_json(padded)), padded);
}

}  // namespace
}  // namespace sandwich

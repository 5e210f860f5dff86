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

#include "sandwich/sumtree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <tuple>

#include "sandwich/errors.hpp"

namespace sandwich {

void SplitPolicy::validate() const {
    if (!(x_min > 0.0 && x_min <= 0.5)) {
        throw ParameterError("x_min must be in (0, 1/2]");
    }
    if (forced_x && !(*forced_x >= x_min && *forced_x <= 0.5)) {
        throw ParameterError("forced x must be in [x_min, 1/2]");
    }
    if (leaf_cutoff < 1) {
        throw ParameterError("leaf cutoff must be at least 1");
    }
}

SumTree::SumTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
        throw ParameterError("sum tree has no nodes");
    }
    const TreeNode& first = nodes_.front();
    if (first.height != 0 || first.position != 1) {
        throw ParameterError("sum tree root must sit at height 0, position 1");
    }
    std::uint32_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TreeNode& n = nodes_[i];
        if (i > 0 && std::tie(nodes_[i - 1].height, nodes_[i - 1].position) >= std::tie(n.height, n.position)) {
            throw ParameterError("sum tree nodes are not in (height, position) order");
        }
        if (n.height < 64 && (n.position < 1 || n.position > (std::uint64_t{1} << n.height))) {
            throw ParameterError("sum tree node position out of range");
        }
        deepest = std::max(deepest, n.height);
        if (n.is_leaf()) {
            if (!n.trivial) {
                throw ParameterError("sum tree leaf must be marked trivial");
            }
            continue;
        }
        const auto [li, ri] = *n.children;
        if (li >= nodes_.size() || ri >= nodes_.size() || li <= i || ri <= i) {
            throw ParameterError("sum tree child index out of range");
        }
        const TreeNode& left = nodes_[li];
        const TreeNode& right = nodes_[ri];
        if (left.value + right.value != n.value) {
            throw ParameterError("sum tree child values do not sum to parent value " + std::to_string(n.value));
        }
        if (left.height != n.height + 1 || right.height != n.height + 1 || left.position != 2 * n.position - 1 ||
            right.position != 2 * n.position) {
            throw ParameterError("sum tree child coordinates inconsistent with parent");
        }
        const bool expect_trivial = left.value == 0 || right.value == 0;
        if (n.trivial != expect_trivial) {
            throw ParameterError("sum tree trivial flag inconsistent with children");
        }
    }
    h_max_ = std::max<std::uint32_t>(1, deepest);
}

namespace {

struct PendingNode {
    std::uint32_t height;
    std::uint64_t position;
    std::uint64_t value;
    std::size_t parent;  // max() for the root
    int side;
};

// Breadth-first assembly keeps the (height, position) order. `split` returns the
// (left, right) values of a node, or nullopt to make it a leaf.
template <typename Split>
SumTree assemble(std::uint64_t k, Split split) {
    std::vector<TreeNode> nodes;
    // An unpadded tree has at most 2k - 1 nodes.
    nodes.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(2 * k, std::uint64_t{1} << 24)));
    std::deque<PendingNode> queue{{0, 1, k, std::numeric_limits<std::size_t>::max(), 0}};
    while (!queue.empty()) {
        PendingNode pending = queue.front();
        queue.pop_front();
        const std::size_t index = nodes.size();
        TreeNode node;
        node.height = pending.height;
        node.position = pending.position;
        node.value = pending.value;
        nodes.push_back(node);
        if (pending.parent != std::numeric_limits<std::size_t>::max()) {
            auto& parent = nodes[pending.parent];
            if (!parent.children) {
                parent.children = std::array<std::size_t, 2>{0, 0};
            }
            (*parent.children)[pending.side] = index;
        }
        if (auto values = split(node)) {
            nodes[index].trivial = values->first == 0 || values->second == 0;
            queue.push_back({node.height + 1, 2 * node.position - 1, values->first, index, 0});
            queue.push_back({node.height + 1, 2 * node.position, values->second, index, 1});
        }
    }
    return SumTree(std::move(nodes));
}

}  // namespace

SumTree build_tree(std::uint64_t k, const SplitPolicy& policy, const RngStream& rng) {
    if (k == 0) {
        throw ParameterError("sum tree root value k must be at least 1");
    }
    policy.validate();
    return assemble(k, [&](const TreeNode& node) -> std::optional<std::pair<std::uint64_t, std::uint64_t>> {
        if (node.value <= policy.leaf_cutoff) {
            return std::nullopt;
        }
        double x;
        if (policy.forced_x) {
            x = *policy.forced_x;
        } else {
            const double u = rng.child({node.height, node.position}).uniform();
            x = policy.x_min + (0.5 - policy.x_min) * u;
        }
        const double v = static_cast<double>(node.value);
        auto left = static_cast<std::uint64_t>(std::ceil(x * v));
        // floor((1 - x) v) = v - ceil(x v); taking the difference keeps the
        // child sum exact under rounding.
        left = std::clamp<std::uint64_t>(left, 1, node.value - 1);
        return std::pair{left, node.value - left};
    });
}

SumTree degenerate_chain_tree(std::uint64_t k) {
    if (k == 0) {
        throw ParameterError("sum tree root value k must be at least 1");
    }
    return assemble(k, [](const TreeNode& node) -> std::optional<std::pair<std::uint64_t, std::uint64_t>> {
        if (node.value <= 1) {
            return std::nullopt;
        }
        return std::pair{node.value - 1, std::uint64_t{1}};
    });
}

SumTree pad_to_uniform_depth(const SumTree& tree) {
    const std::uint32_t depth = tree.h_max();
    // Rebuild, replaying the original splits and padding value-1 leaves.
    std::map<std::pair<std::uint32_t, std::uint64_t>, std::pair<std::uint64_t, std::uint64_t>> splits;
    for (const auto& node : tree.nodes()) {
        if (!node.is_leaf()) {
            const auto [li, ri] = *node.children;
            splits[{node.height, node.position}] = {tree.node(li).value, tree.node(ri).value};
        }
    }
    return assemble(tree.k(), [&](const TreeNode& node) -> std::optional<std::pair<std::uint64_t, std::uint64_t>> {
        if (auto it = splits.find({node.height, node.position}); it != splits.end()) {
            return it->second;
        }
        if (node.value == 1 && node.height < depth) {
            return std::pair{std::uint64_t{1}, std::uint64_t{0}};
        }
        return std::nullopt;
    });
}

std::vector<TreeNode> nontrivial_nodes(const SumTree& tree) {
    std::vector<TreeNode> out;
    for (const auto& node : tree.nodes()) {
        if (!node.is_leaf() && !node.trivial) {
            out.push_back(node);
        }
    }
    return out;
}

std::uint64_t count_ones_leaves(const SumTree& tree) {
    std::uint64_t count = 0;
    for (const auto& node : tree.nodes()) {
        if (node.is_leaf() && node.value == 1) {
            ++count;
        }
    }
    return count;
}

std::map<std::uint64_t, std::uint64_t> leaf_histogram(const SumTree& tree) {
    std::map<std::uint64_t, std::uint64_t> histogram;
    for (const auto& node : tree.nodes()) {
        if (node.is_leaf() && node.value > 0) {
            ++histogram[node.value];
        }
    }
    return histogram;
}

std::uint32_t height_bound(std::uint64_t k, double y_max) {
    if (k <= 1) {
        return 1;
    }
    return static_cast<std::uint32_t>(std::ceil(std::log(static_cast<double>(k)) / std::log(1.0 / y_max))) + 1;
}

double tree_smin(const SumTree& tree, const std::vector<double>& magnitudes, bool exclude_root) {
    double smin = 1.0;
    for (std::size_t i = exclude_root ? 1 : 0; i < tree.nodes().size(); ++i) {
        const std::uint64_t v = tree.node(i).value;
        if (v >= 1) {
            smin = std::min(smin, magnitudes.at(v));
        }
    }
    return smin;
}

double tree_smin(const SumTree& tree, const SpectralModel& model, bool exclude_root) {
    double smin = 1.0;
    for (std::size_t i = exclude_root ? 1 : 0; i < tree.nodes().size(); ++i) {
        const std::uint64_t v = tree.node(i).value;
        if (v >= 1) {
            smin = std::min(smin, exact_amplitude(model, v).modulus);
        }
    }
    return smin;
}

std::optional<SumTree> resample_tree(std::uint64_t k, const SplitPolicy& policy, const RngStream& rng,
                                     const SpectralModel& model, double min_smin, unsigned attempts) {
    const auto magnitudes = magnitude_table(model, k);
    for (unsigned attempt = 0; attempt < attempts; ++attempt) {
        SumTree tree = build_tree(k, policy, rng.child(attempt));
        if (tree_smin(tree, magnitudes, true) >= min_smin) {
            return tree;
        }
    }
    return std::nullopt;
}

nlohmann::json tree_to_json(const SumTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes()) {
        nodes.push_back({{"h", node.height}, {"p", node.position}, {"value", node.value}, {"trivial", node.trivial}});
    }
    return {{"k", tree.k()}, {"h_max", tree.h_max()}, {"nodes", std::move(nodes)}};
}

SumTree tree_from_json(const nlohmann::json& j) {
    try {
        std::vector<TreeNode> nodes;
        std::map<std::pair<std::uint32_t, std::uint64_t>, std::size_t> index;
        for (const auto& entry : j.at("nodes")) {
            TreeNode node;
            node.height = entry.at("h").get<std::uint32_t>();
            node.position = entry.at("p").get<std::uint64_t>();
            node.value = entry.at("value").get<std::uint64_t>();
            node.trivial = entry.at("trivial").get<bool>();
            index[{node.height, node.position}] = nodes.size();
            nodes.push_back(node);
        }
        for (auto& node : nodes) {
            auto left = index.find({node.height + 1, 2 * node.position - 1});
            auto right = index.find({node.height + 1, 2 * node.position});
            if (left != index.end() && right != index.end()) {
                node.children = std::array<std::size_t, 2>{left->second, right->second};
            } else if (left != index.end() || right != index.end()) {
                throw FileFormatError("tree node has exactly one child");
            }
        }
        SumTree tree(std::move(nodes));
        if (j.contains("k") && j.at("k").get<std::uint64_t>() != tree.k()) {
            throw FileFormatError("tree k does not match root value");
        }
        return tree;
    } catch (const nlohmann::json::exception& e) {
        throw FileFormatError(std::string("malformed tree: ") + e.what());
    } catch (const ParameterError& e) {
        throw FileFormatError(std::string("invalid tree: ") + e.what());
    }
}

}  // namespace sandwich

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

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "sandwich/measurement.hpp"
#include "sandwich/spectral.hpp"

namespace sandwich {

struct TreeNode {
    std::uint32_t height = 0;
    std::uint64_t position = 1;  // 1-based, in [1, 2^height]
    std::uint64_t value = 0;
    std::optional<std::array<std::size_t, 2>> children;  // indices into SumTree::nodes()
    bool trivial = true;  // leaf, or an internal node with a zero-valued child

    bool is_leaf() const { return !children.has_value(); }
    bool operator==(const TreeNode&) const = default;
};

/// How a node of value v is split into (ceil(x v), floor((1 - x) v)).
struct SplitPolicy {
    double x_min = 1.0 / 3.0;
    // Fixes x for every node instead of drawing it uniformly from [x_min, 1/2].
    std::optional<double> forced_x;
    // Nodes with value <= leaf_cutoff are not split further. 1 gives the plain
    // tree with value-1 leaves; larger values make Hadamard-tested leaves.
    std::uint64_t leaf_cutoff = 1;

    double y_max() const { return 1.0 - x_min; }
    void validate() const;
};

/// Random binary sum tree. Nodes are stored in (height, position) order with the
/// root at index 0; every internal node's children sum to its value.
class SumTree {
  public:
    /// Validates structure: child-sum conservation, positions, ordering, trivial flags.
    explicit SumTree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& root() const { return nodes_.front(); }
    const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
    std::uint64_t k() const { return root().value; }

    /// Smallest h such that every node at depth h is a leaf of value <= cutoff;
    /// at least 1, matching the padded view in which a value-1 root gets (1, 0).
    std::uint32_t h_max() const { return h_max_; }

    bool operator==(const SumTree&) const = default;

  private:
    std::vector<TreeNode> nodes_;
    std::uint32_t h_max_ = 1;
};

/// Throws ParameterError for k = 0 or an invalid policy. Each node draws its
/// split from rng.child({height, position}).
SumTree build_tree(std::uint64_t k, const SplitPolicy& policy, const RngStream& rng);

/// Always splits v into (v - 1, 1): the fully sequential recursion.
SumTree degenerate_chain_tree(std::uint64_t k);

/// Uniform-depth view: value-1 leaves above h_max get (1, 0) children down to
/// h_max. The non-trivial node set is unchanged.
SumTree pad_to_uniform_depth(const SumTree& tree);

/// Internal nodes whose children are both >= 1, in (height, position) order.
std::vector<TreeNode> nontrivial_nodes(const SumTree& tree);

/// Number of value-1 leaves; equals k when the leaf cutoff is 1.
std::uint64_t count_ones_leaves(const SumTree& tree);

/// leaf value -> number of leaves with that value (zeros excluded).
std::map<std::uint64_t, std::uint64_t> leaf_histogram(const SumTree& tree);

/// ceil(ln k / ln(1 / y_max)) + 1.
std::uint32_t height_bound(std::uint64_t k, double y_max);

/// min over node values v >= 1 of r_v; optionally skipping the root.
double tree_smin(const SumTree& tree, const SpectralModel& model, bool exclude_root = false);

/// Same, reading magnitudes from a precomputed table r_0..r_k.
double tree_smin(const SumTree& tree, const std::vector<double>& magnitudes, bool exclude_root = false);

/// Draws trees from rng.child(attempt) until tree_smin (root excluded) reaches
/// `min_smin`. Returns std::nullopt if none of `attempts` trees qualifies.
std::optional<SumTree> resample_tree(std::uint64_t k, const SplitPolicy& policy, const RngStream& rng,
                                     const SpectralModel& model, double min_smin, unsigned attempts);

/// {"k", "h_max", "nodes": [{"h", "p", "value", "trivial"}]} in node order.
nlohmann::json tree_to_json(const SumTree& tree);
SumTree tree_from_json(const nlohmann::json& j);

}  // namespace sandwich

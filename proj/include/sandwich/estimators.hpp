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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sandwich/measurement.hpp"
#include "sandwich/phase.hpp"
#include "sandwich/spectral.hpp"
#include "sandwich/sumtree.hpp"

namespace sandwich {

/// Shot-budget knobs for the sandwich recursion.
struct BudgetPolicy {
    double q = 2.0;
    double epsilon = 0.05;
    double phi1 = kPi / 4;
    double s_floor = 1e-3;
    std::uint64_t min_shots = 100;
    // C in shots = C (k / k_hat)^q s^-6 V / eps^2.
    double budget_scale = 1.0;
    // C_1 in the leaf Hadamard budget ceil(C_1 (n_v / eps)^2).
    double theta1_scale = 16.0;
    // Shares magnitude estimates between nodes with equal (a, b). This breaks the
    // independence of the omega estimates and exists only for cost studies.
    bool reuse_magnitudes = false;
    // Allocations above this are rejected instead of silently run.
    double max_node_shots = 1e13;

    double phi2() const { return phi1 + kPi / 2; }
    /// q = 1 is admitted; the height-summed variance bound needs q > 1.
    bool q_is_marginal() const { return q == 1.0; }
    void validate() const;
};

struct MagnitudeTriple {
    double r_a = 0.0;
    double r_b = 0.0;
    double r_ab = 0.0;

    double min() const;
};

struct NodeEstimate {
    std::uint32_t height = 0;
    std::uint64_t position = 1;
    std::uint64_t value = 0;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    double omega = 0.0;  // omega_hat at phi1, canonical
    double phi = 0.0;    // phi1 used for this node
    std::uint64_t shots_magnitude = 0;  // per magnitude channel
    std::uint64_t shots_sandwich = 0;   // total over both phi settings
    MagnitudeTriple magnitudes;
    double s_phi1 = 0.0;
    double s_phi2 = 0.0;
    bool clamped = false;

    /// phi - omega: the amount this node adds to the child phases.
    double correction() const { return phi - omega; }
};

/// Phase estimate for all leaves of one value.
struct LeafEstimate {
    std::uint64_t value = 0;
    std::uint64_t count = 0;
    std::uint64_t shots = 0;
    double theta = 0.0;
    double modulus = 0.0;
};

struct EstimateReport {
    std::uint64_t k = 0;
    double theta_k = 0.0;  // canonical estimate
    double theta1 = 0.0;   // phase of the value-1 leaf estimate (0 if none)
    double phi1 = 0.0;
    std::uint64_t ones_count = 0;
    std::uint32_t h_max = 0;
    std::vector<LeafEstimate> leaves;
    std::vector<NodeEstimate> nodes;
    UsageTotals usage;
    std::uint64_t predicted_u_applications = 0;
    double theta_k_exact = 0.0;
    double r_k_exact = 0.0;
    double smin_with_root = 1.0;
    double smin_without_root = 1.0;

    /// Unwrapped sum of leaf and node terms, before reduction mod 2 pi.
    double unwrapped_theta() const;
    /// canonical(unwrapped_theta()); equals theta_k bit for bit.
    double recomputed_theta() const;
    double error() const { return angular_distance(theta_k, theta_k_exact); }
};

struct NodeAllocation {
    std::uint64_t value = 0;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    double s_node = 1.0;
    std::uint64_t shots = 0;            // node budget
    std::uint64_t shots_magnitude = 0;  // per r channel
    std::uint64_t shots_sandwich = 0;   // both phi settings together
    std::uint64_t predicted_u_applications = 0;
};

struct ShotPlan {
    std::vector<NodeAllocation> nodes;  // aligned with nontrivial_nodes(tree)
    std::vector<LeafEstimate> leaves;   // value, count, shots filled in
    double relative_variance = 0.0;     // V = sum over nodes (k_hat / k)^q
    std::uint64_t predicted_u_applications = 0;
};

/// sin(omega) from the four magnitudes at angle phi:
///   (4 r_a^2 r_b^2 sin^2 phi + r_ab^2 - s^2) / (4 r_ab r_a r_b sin phi).
double sin_omega_from_magnitudes(const MagnitudeTriple& m, double s, double phi);

/// Measures s at phi1 and phi2 = phi1 + pi/2 (half of shots_s each) and returns
/// omega_hat(phi1) = atan2(sin omega(phi1), sin omega(phi2)). Raw sines outside
/// [-1, 1] are clamped and flagged. Throws DegenerateNodeError when a magnitude
/// is below policy.s_floor.
NodeEstimate estimate_omega(const SpectralModel& model, std::uint64_t a, std::uint64_t b,
                            const BudgetPolicy& policy, const MagnitudeTriple& magnitudes, std::uint64_t shots_s,
                            const RngStream& rng, UsageLedger& ledger);

/// Per non-trivial node:
///   shots = max(min_shots, ceil(C (k / k_hat)^q s_node^-6 V / eps^2)),
///   s_node = max(s_floor, min(r_a, r_b, r_ab)),
/// with V = sum (k_hat / k)^q normalizing the summed node variance to eps^2.
/// The budget is split in equal quarters between r_a, r_b, r_ab and the s pair.
/// Leaves of value v (n_v of them) get ceil(C_1 (n_v / eps)^2) Hadamard shots.
/// `magnitudes` is aligned with nontrivial_nodes(tree).
ShotPlan allocate_shots(const SumTree& tree, const BudgetPolicy& policy, std::uint64_t k,
                        const std::vector<MagnitudeTriple>& magnitudes);

struct RunOptions {
    unsigned workers = 1;
};

/// Full sandwich recursion over `tree`: pilot magnitudes, allocation, leaf
/// Hadamard tests, per-node omega estimates, then the fold
///   theta_k = sum_v n_v theta_v + sum_nodes (phi1 - omega_hat).
/// Node measurements run on `options.workers` threads; results do not depend on
/// the worker count.
EstimateReport sandwich_test(const SpectralModel& model, const SumTree& tree, const BudgetPolicy& policy,
                             const RngStream& rng, UsageLedger& ledger, const RunOptions& options = {});

/// sandwich_test on degenerate_chain_tree(k): a stand-in for the sequential
/// Hadamard test.
EstimateReport sequential_baseline(const SpectralModel& model, std::uint64_t k, const BudgetPolicy& policy,
                                   const RngStream& rng, UsageLedger& ledger, const RunOptions& options = {});

/// Direct Hadamard test on U^k with ceil(C_1 / eps^2) shots; needs controlled U^k.
EstimateReport hadamard_baseline(const SpectralModel& model, std::uint64_t k, const BudgetPolicy& policy,
                                 const RngStream& rng, UsageLedger& ledger);

struct TwoLayerKnown {
    double theta_a = 0.0;
    double theta_b = 0.0;
    double theta_c = 0.0;
    std::optional<double> theta_ab;
    std::optional<double> theta_bc;
};

struct TwoLayerOptions {
    std::uint64_t shots_per_point = 10000;
    // Terms whose magnitude product falls below this are dropped from the model.
    double shunt_threshold = 1e-3;
    // Magnitudes of retained terms must reach this.
    double s_floor = 1e-3;
};

struct TwoLayerResult {
    double theta_abc = 0.0;
    std::optional<double> theta_ab;  // set when it was fitted rather than known
    std::optional<double> theta_bc;
    bool shunted_ab = false;
    bool shunted_bc = false;
    double residual = 0.0;  // sum of squared residuals in s^2
};

/// (phi1, phi2) pairs spread over (0, pi/2].
std::vector<std::pair<double, double>> default_two_layer_grid(std::size_t points);

/// Fits theta_{a+b+c} (and at most one other unknown phase) by least squares
/// on s^2 over the grid. Throws AmbiguityError when the residual landscape is flat
/// or has separated global minima, and ParameterError for fewer than 4 points.
TwoLayerResult two_layer_estimate(const SpectralModel& model, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                  const std::vector<std::pair<double, double>>& phi_grid, const TwoLayerKnown& known,
                                  const TwoLayerOptions& options, const RngStream& rng, UsageLedger& ledger);

}  // namespace sandwich

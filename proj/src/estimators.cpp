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

#include "sandwich/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "sandwich/errors.hpp"

namespace sandwich {

namespace {

// Stream purposes under the run's master stream.
enum StreamPurpose : std::uint64_t {
    kPilotStream = 1,
    kLeafStream = 2,
    kNodeStream = 3,
    kSharedStream = 4,
    kTwoLayerStream = 5,
};

constexpr double kSinEpsilon = 1e-12;

std::uint64_t ceil_to_shots(double x, double cap) {
    if (!std::isfinite(x) || x > cap) {
        throw ParameterError("shot allocation of " + std::to_string(x) + " exceeds max_node_shots");
    }
    return static_cast<std::uint64_t>(std::ceil(x));
}

void require_above_floor(double magnitude, double floor, std::uint64_t node_value, std::uint64_t power) {
    if (!(magnitude >= floor)) {
        throw DegenerateNodeError(node_value, power, magnitude);
    }
}

std::pair<std::uint64_t, std::uint64_t> children_values(const SumTree& tree, const TreeNode& node) {
    const auto [li, ri] = *node.children;
    return {tree.node(li).value, tree.node(ri).value};
}

}  // namespace

void BudgetPolicy::validate() const {
    if (!(q >= 1.0) || !std::isfinite(q)) {
        throw ParameterError("q must be >= 1");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ParameterError("epsilon must be positive");
    }
    if (!std::isfinite(phi1) || std::abs(std::sin(phi1)) < kSinEpsilon || std::abs(std::cos(phi1)) < kSinEpsilon) {
        throw ParameterError("phi1 needs sin(phi1) != 0 and sin(phi1 + pi/2) != 0");
    }
    if (!(s_floor > 0.0 && s_floor <= 1.0)) {
        throw ParameterError("s_floor must be in (0, 1]");
    }
    if (min_shots < 1) {
        throw ParameterError("min_shots must be at least 1");
    }
    if (!(budget_scale > 0.0) || !(theta1_scale > 0.0)) {
        throw ParameterError("budget scales must be positive");
    }
    if (!(max_node_shots >= 1.0)) {
        throw ParameterError("max_node_shots must be at least 1");
    }
}

double MagnitudeTriple::min() const {
    return std::min({r_a, r_b, r_ab});
}

double EstimateReport::unwrapped_theta() const {
    double total = 0.0;
    for (const auto& leaf : leaves) {
        total += static_cast<double>(leaf.count) * leaf.theta;
    }
    for (const auto& node : nodes) {
        total += node.correction();
    }
    return total;
}

double EstimateReport::recomputed_theta() const {
    return canonical_angle(unwrapped_theta());
}

double sin_omega_from_magnitudes(const MagnitudeTriple& m, double s, double phi) {
    const double sin_phi = std::sin(phi);
    const double cross = 2.0 * m.r_a * m.r_b * sin_phi;
    const double numerator = cross * cross + (m.r_ab - s) * (m.r_ab + s);
    return numerator / (2.0 * m.r_ab * cross);
}

namespace {

// sin(omega) from a measured success fraction f = s^2, avoiding the sqrt round trip.
double sin_omega_from_fraction(const MagnitudeTriple& m, double fraction, double phi) {
    const double sin_phi = std::sin(phi);
    const double cross = 2.0 * m.r_a * m.r_b * sin_phi;
    const double numerator = cross * cross + m.r_ab * m.r_ab - fraction;
    return numerator / (2.0 * m.r_ab * cross);
}

}  // namespace

NodeEstimate estimate_omega(const SpectralModel& model, std::uint64_t a, std::uint64_t b,
                            const BudgetPolicy& policy, const MagnitudeTriple& magnitudes, std::uint64_t shots_s,
                            const RngStream& rng, UsageLedger& ledger) {
    if (a < 1 || b < 1) {
        throw ParameterError("estimate_omega needs a, b >= 1");
    }
    if (shots_s < 2 * policy.min_shots) {
        throw ParameterError("estimate_omega needs at least 2 * min_shots sandwich shots");
    }
    require_above_floor(magnitudes.r_a, policy.s_floor, a + b, a);
    require_above_floor(magnitudes.r_b, policy.s_floor, a + b, b);
    require_above_floor(magnitudes.r_ab, policy.s_floor, a + b, a + b);

    const double phi1 = policy.phi1;
    const double phi2 = policy.phi2();
    const std::uint64_t shots1 = shots_s - shots_s / 2;
    const std::uint64_t shots2 = shots_s / 2;
    const double f1 =
        sample_overlap_probability(model, MeasuredOperator::sandwich(a, b, phi1), shots1, rng.child(0), ledger);
    const double f2 =
        sample_overlap_probability(model, MeasuredOperator::sandwich(a, b, phi2), shots2, rng.child(1), ledger);

    NodeEstimate est;
    est.value = a + b;
    est.a = a;
    est.b = b;
    est.phi = phi1;
    est.shots_sandwich = shots_s;
    est.magnitudes = magnitudes;
    est.s_phi1 = std::sqrt(f1);
    est.s_phi2 = std::sqrt(f2);

    double v1 = sin_omega_from_fraction(magnitudes, f1, phi1);
    double v2 = sin_omega_from_fraction(magnitudes, f2, phi2);
    if (std::abs(v1) > 1.0 || std::abs(v2) > 1.0) {
        est.clamped = true;
        v1 = std::clamp(v1, -1.0, 1.0);
        v2 = std::clamp(v2, -1.0, 1.0);
    }
    // omega(phi) = Delta + phi, so the phi2 = phi1 + pi/2 reading is cos(omega(phi1)).
    est.omega = canonical_angle(std::atan2(v1, v2));
    return est;
}

ShotPlan allocate_shots(const SumTree& tree, const BudgetPolicy& policy, std::uint64_t k,
                        const std::vector<MagnitudeTriple>& magnitudes) {
    policy.validate();
    const auto nodes = nontrivial_nodes(tree);
    if (magnitudes.size() != nodes.size()) {
        throw ParameterError("allocate_shots needs one magnitude triple per non-trivial node");
    }
    const double kd = static_cast<double>(k);

    ShotPlan plan;
    for (const auto& node : nodes) {
        plan.relative_variance += std::pow(static_cast<double>(node.value) / kd, policy.q);
    }
    const double eps2 = policy.epsilon * policy.epsilon;

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto [a, b] = children_values(tree, nodes[i]);
        NodeAllocation alloc;
        alloc.value = nodes[i].value;
        alloc.a = a;
        alloc.b = b;
        alloc.s_node = std::max(policy.s_floor, magnitudes[i].min());
        const double raw = policy.budget_scale * std::pow(kd / static_cast<double>(alloc.value), policy.q) *
                           std::pow(alloc.s_node, -6.0) * plan.relative_variance / eps2;
        alloc.shots = std::max(policy.min_shots, ceil_to_shots(raw, policy.max_node_shots));
        alloc.shots_magnitude = std::max(policy.min_shots, alloc.shots / 4);
        alloc.shots_sandwich = std::max(2 * policy.min_shots, alloc.shots / 4);
        alloc.predicted_u_applications =
            alloc.shots_magnitude * (a + b + alloc.value) + alloc.shots_sandwich * alloc.value;
        plan.predicted_u_applications += alloc.predicted_u_applications;
        plan.nodes.push_back(alloc);
    }

    for (const auto& [value, count] : leaf_histogram(tree)) {
        LeafEstimate leaf;
        leaf.value = value;
        leaf.count = count;
        const double n_over_eps = static_cast<double>(count) / policy.epsilon;
        leaf.shots = std::max<std::uint64_t>(
            std::max<std::uint64_t>(2, policy.min_shots),
            ceil_to_shots(policy.theta1_scale * n_over_eps * n_over_eps, policy.max_node_shots));
        plan.predicted_u_applications += leaf.shots * value;
        plan.leaves.push_back(leaf);
    }
    return plan;
}

namespace {

// Runs fn(i) for i in [0, count) on `workers` threads and rethrows the
// exception of the lowest failing index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn fn) {
    std::vector<std::exception_ptr> errors(count);
    auto run_range = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < count; i += stride) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(run_range, t, threads);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

UsageTotals difference(const UsageTotals& after, const UsageTotals& before) {
    return UsageTotals{after.u_applications - before.u_applications,
                       after.sprotis_applications - before.sprotis_applications,
                       after.w_applications - before.w_applications, after.shots - before.shots};
}

void fill_exact_fields(EstimateReport& report, const SpectralModel& model, const SumTree* tree) {
    const Amplitude exact = exact_amplitude(model, report.k);
    report.theta_k_exact = exact.argument;
    report.r_k_exact = exact.modulus;
    if (tree != nullptr) {
        report.smin_with_root = tree_smin(*tree, model, false);
        report.smin_without_root = tree_smin(*tree, model, true);
    } else {
        report.smin_with_root = exact.modulus;
        report.smin_without_root = 1.0;
    }
}

}  // namespace

EstimateReport sandwich_test(const SpectralModel& model, const SumTree& tree, const BudgetPolicy& policy,
                             const RngStream& rng, UsageLedger& ledger, const RunOptions& options) {
    policy.validate();
    const UsageTotals before = ledger.totals();
    const std::uint64_t k = tree.k();
    const auto nodes = nontrivial_nodes(tree);

    // Pilot magnitudes drive the allocation only; the estimate uses fresh ones.
    std::vector<MagnitudeTriple> pilot(nodes.size());
    {
        std::map<std::uint64_t, double> shared;
        auto pilot_magnitude = [&](const TreeNode& node, std::uint64_t power, std::uint64_t channel) {
            if (policy.reuse_magnitudes) {
                if (auto it = shared.find(power); it != shared.end()) {
                    return it->second;
                }
            }
            const RngStream stream = policy.reuse_magnitudes
                                         ? rng.child({kPilotStream, 0, power})
                                         : rng.child({kPilotStream, node.height, node.position, channel});
            const double r = estimate_magnitude(model, MeasuredOperator::power(power), policy.min_shots, stream, ledger);
            require_above_floor(r, policy.s_floor, node.value, power);
            if (policy.reuse_magnitudes) {
                shared.emplace(power, r);
            }
            return r;
        };
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto [a, b] = children_values(tree, nodes[i]);
            pilot[i].r_a = pilot_magnitude(nodes[i], a, 0);
            pilot[i].r_b = pilot_magnitude(nodes[i], b, 1);
            pilot[i].r_ab = pilot_magnitude(nodes[i], a + b, 2);
        }
    }

    const ShotPlan plan = allocate_shots(tree, policy, k, pilot);

    EstimateReport report;
    report.k = k;
    report.phi1 = policy.phi1;
    report.ones_count = count_ones_leaves(tree);
    report.h_max = tree.h_max();
    report.predicted_u_applications = plan.predicted_u_applications;

    for (LeafEstimate leaf : plan.leaves) {
        const Amplitude est =
            hadamard_test_estimate(model, leaf.value, leaf.shots, rng.child({kLeafStream, leaf.value}), ledger);
        leaf.theta = est.argument;
        leaf.modulus = est.modulus;
        if (leaf.value == 1) {
            report.theta1 = leaf.theta;
        }
        report.leaves.push_back(leaf);
    }

    // With reuse on, each distinct power is measured once at the largest channel
    // budget any node asks for.
    std::map<std::uint64_t, double> shared_magnitudes;
    if (policy.reuse_magnitudes) {
        std::map<std::uint64_t, std::uint64_t> shots_for_power;
        for (const auto& alloc : plan.nodes) {
            for (std::uint64_t power : {alloc.a, alloc.b, alloc.value}) {
                auto& s = shots_for_power[power];
                s = std::max(s, alloc.shots_magnitude);
            }
        }
        for (const auto& [power, shots] : shots_for_power) {
            shared_magnitudes[power] = estimate_magnitude(model, MeasuredOperator::power(power), shots,
                                                          rng.child({kSharedStream, power}), ledger);
        }
    }

    report.nodes.resize(nodes.size());
    parallel_for(nodes.size(), options.workers, [&](std::size_t i) {
        const TreeNode& node = nodes[i];
        const NodeAllocation& alloc = plan.nodes[i];
        const RngStream stream = rng.child({kNodeStream, node.height, node.position});
        auto magnitude = [&](std::uint64_t power, std::uint64_t channel) {
            if (policy.reuse_magnitudes) {
                return shared_magnitudes.at(power);
            }
            return estimate_magnitude(model, MeasuredOperator::power(power), alloc.shots_magnitude,
                                      stream.child(channel), ledger);
        };
        MagnitudeTriple m;
        m.r_a = magnitude(alloc.a, 0);
        m.r_b = magnitude(alloc.b, 1);
        m.r_ab = magnitude(alloc.value, 2);
        NodeEstimate est =
            estimate_omega(model, alloc.a, alloc.b, policy, m, alloc.shots_sandwich, stream.child(3), ledger);
        est.height = node.height;
        est.position = node.position;
        est.shots_magnitude = alloc.shots_magnitude;
        report.nodes[i] = est;
    });

    report.theta_k = canonical_angle(report.unwrapped_theta());
    report.usage = difference(ledger.totals(), before);
    fill_exact_fields(report, model, &tree);
    return report;
}

EstimateReport sequential_baseline(const SpectralModel& model, std::uint64_t k, const BudgetPolicy& policy,
                                   const RngStream& rng, UsageLedger& ledger, const RunOptions& options) {
    return sandwich_test(model, degenerate_chain_tree(k), policy, rng, ledger, options);
}

EstimateReport hadamard_baseline(const SpectralModel& model, std::uint64_t k, const BudgetPolicy& policy,
                                 const RngStream& rng, UsageLedger& ledger) {
    policy.validate();
    if (k < 1) {
        throw ParameterError("k must be at least 1");
    }
    const UsageTotals before = ledger.totals();
    LeafEstimate leaf;
    leaf.value = k;
    leaf.count = 1;
    leaf.shots = std::max<std::uint64_t>(
        std::max<std::uint64_t>(2, policy.min_shots),
        ceil_to_shots(policy.theta1_scale / (policy.epsilon * policy.epsilon), policy.max_node_shots));
    const Amplitude est = hadamard_test_estimate(model, k, leaf.shots, rng.child({kLeafStream, k}), ledger);
    leaf.theta = est.argument;
    leaf.modulus = est.modulus;

    EstimateReport report;
    report.k = k;
    report.phi1 = policy.phi1;
    report.h_max = 0;
    report.leaves.push_back(leaf);
    report.predicted_u_applications = leaf.shots * k;
    if (k == 1) {
        report.theta1 = leaf.theta;
        report.ones_count = 1;
    }
    report.theta_k = canonical_angle(report.unwrapped_theta());
    report.usage = difference(ledger.totals(), before);
    fill_exact_fields(report, model, nullptr);
    return report;
}

// ---------------------------------------------------------------------------
// Two-layer sandwich.

std::vector<std::pair<double, double>> default_two_layer_grid(std::size_t points) {
    std::vector<std::pair<double, double>> grid;
    grid.reserve(points);
    const double n = static_cast<double>(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = (static_cast<double>(i) + 1.0) / (n + 1.0);
        // phi1 sweeps up while phi2 sweeps down, so Phi1 and Phi2 rotate
        // against each other across the grid.
        grid.emplace_back(kPi / 2 * t, kPi / 2 * (1.0 - t) + kPi / 8);
    }
    return grid;
}

namespace {

struct TwoLayerModel {
    // Fixed parts of each term, excluding the unknown phase factors.
    struct Point {
        std::complex<double> t0;  // r_abc
        std::complex<double> t1;  // Phi1 r_a r_bc e^{i theta_a}   (times e^{i theta_bc})
        std::complex<double> t2;  // Phi2 r_ab r_c e^{i theta_c}   (times e^{i theta_ab})
        std::complex<double> t3;  // fully known
        double target;            // measured s^2
    };
    std::vector<Point> points;
    bool keep_t1 = true;
    bool keep_t2 = true;
    // Which phase each parameter slot drives.
    enum class Slot { kAbc, kBc, kAb };
    std::vector<Slot> slots;
    double known_bc = 0.0;
    double known_ab = 0.0;

    struct Eval {
        std::vector<double> residuals;
        std::vector<std::vector<double>> jacobian;  // [point][param]
        double cost = 0.0;
    };

    Eval evaluate(const std::vector<double>& params, bool with_jacobian) const {
        double theta_abc = 0.0;
        double theta_bc = known_bc;
        double theta_ab = known_ab;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            switch (slots[s]) {
                case Slot::kAbc:
                    theta_abc = params[s];
                    break;
                case Slot::kBc:
                    theta_bc = params[s];
                    break;
                case Slot::kAb:
                    theta_ab = params[s];
                    break;
            }
        }
        const auto e_abc = std::polar(1.0, theta_abc);
        const auto e_bc = std::polar(1.0, theta_bc);
        const auto e_ab = std::polar(1.0, theta_ab);
        Eval out;
        out.residuals.reserve(points.size());
        for (const auto& p : points) {
            const auto term0 = p.t0 * e_abc;
            const auto term1 = keep_t1 ? p.t1 * e_bc : std::complex<double>{};
            const auto term2 = keep_t2 ? p.t2 * e_ab : std::complex<double>{};
            const auto total = term0 + term1 + term2 + p.t3;
            const double r = std::norm(total) - p.target;
            out.residuals.push_back(r);
            out.cost += r * r;
            if (with_jacobian) {
                std::vector<double> row(slots.size());
                for (std::size_t s = 0; s < slots.size(); ++s) {
                    const auto& term = slots[s] == Slot::kAbc ? term0 : slots[s] == Slot::kBc ? term1 : term2;
                    // d|m|^2/dtheta = 2 Re(conj(m) * i term)
                    row[s] = 2.0 * std::real(std::conj(total) * std::complex<double>(0.0, 1.0) * term);
                }
                out.jacobian.push_back(std::move(row));
            }
        }
        return out;
    }
};

struct Refined {
    std::vector<double> params;
    double cost;
    double min_curvature;  // smallest eigenvalue of J^T J at the optimum
    double max_curvature;
};

// Symmetric eigenvalues of J^T J (1x1 or 2x2).
std::pair<double, double> normal_eigenvalues(const std::vector<std::vector<double>>& jac, std::size_t dim) {
    double a = 0.0, b = 0.0, d = 0.0;
    for (const auto& row : jac) {
        a += row[0] * row[0];
        if (dim == 2) {
            b += row[0] * row[1];
            d += row[1] * row[1];
        }
    }
    if (dim == 1) {
        return {a, a};
    }
    const double mean = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return {mean - disc, mean + disc};
}

Refined levenberg_marquardt(const TwoLayerModel& model, std::vector<double> params) {
    const std::size_t dim = params.size();
    double lambda = 1e-3;
    auto current = model.evaluate(params, true);
    for (int iter = 0; iter < 200; ++iter) {
        double jtj[2][2] = {{0, 0}, {0, 0}};
        double jtr[2] = {0, 0};
        for (std::size_t j = 0; j < current.residuals.size(); ++j) {
            for (std::size_t u = 0; u < dim; ++u) {
                jtr[u] += current.jacobian[j][u] * current.residuals[j];
                for (std::size_t v = 0; v < dim; ++v) {
                    jtj[u][v] += current.jacobian[j][u] * current.jacobian[j][v];
                }
            }
        }
        bool improved = false;
        double step_norm = 0.0;
        for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
            double m00 = jtj[0][0] * (1.0 + lambda);
            std::vector<double> step(dim);
            if (dim == 1) {
                if (m00 == 0.0) {
                    break;
                }
                step[0] = -jtr[0] / m00;
            } else {
                const double m11 = jtj[1][1] * (1.0 + lambda);
                const double m01 = jtj[0][1];
                const double det = m00 * m11 - m01 * m01;
                if (det == 0.0) {
                    break;
                }
                step[0] = -(m11 * jtr[0] - m01 * jtr[1]) / det;
                step[1] = -(m00 * jtr[1] - m01 * jtr[0]) / det;
            }
            std::vector<double> trial = params;
            step_norm = 0.0;
            for (std::size_t u = 0; u < dim; ++u) {
                trial[u] += step[u];
                step_norm = std::max(step_norm, std::abs(step[u]));
            }
            auto next = model.evaluate(trial, true);
            if (next.cost <= current.cost) {
                params = std::move(trial);
                current = std::move(next);
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved || step_norm < 1e-15) {
            break;
        }
    }
    const auto [lo, hi] = normal_eigenvalues(current.jacobian, dim);
    for (double& p : params) {
        p = canonical_angle(p);
    }
    return Refined{params, current.cost, lo, hi};
}

}  // namespace

TwoLayerResult two_layer_estimate(const SpectralModel& model, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                  const std::vector<std::pair<double, double>>& phi_grid, const TwoLayerKnown& known,
                                  const TwoLayerOptions& options, const RngStream& rng, UsageLedger& ledger) {
    if (a < 1 || b < 1 || c < 1) {
        throw ParameterError("two-layer estimate needs a, b, c >= 1");
    }
    if (phi_grid.size() < 4) {
        throw ParameterError("two-layer estimate needs at least 4 (phi1, phi2) grid points");
    }
    if (options.shots_per_point < 1) {
        throw ParameterError("two-layer estimate needs at least one shot per point");
    }
    const RngStream base = rng.child(kTwoLayerStream);
    auto magnitude = [&](std::uint64_t power, std::uint64_t channel) {
        return estimate_magnitude(model, MeasuredOperator::power(power), options.shots_per_point, base.child(channel),
                                  ledger);
    };
    const std::uint64_t abc = a + b + c;
    const double r_a = magnitude(a, 0);
    const double r_b = magnitude(b, 1);
    const double r_c = magnitude(c, 2);
    const double r_ab = magnitude(a + b, 3);
    const double r_bc = magnitude(b + c, 4);
    const double r_abc = magnitude(abc, 5);

    TwoLayerResult result;
    result.shunted_bc = r_a * r_bc < options.shunt_threshold;
    result.shunted_ab = r_ab * r_c < options.shunt_threshold;

    require_above_floor(r_a, options.s_floor, abc, a);
    require_above_floor(r_b, options.s_floor, abc, b);
    require_above_floor(r_c, options.s_floor, abc, c);
    require_above_floor(r_abc, options.s_floor, abc, abc);
    if (!result.shunted_bc) {
        require_above_floor(r_bc, options.s_floor, abc, b + c);
    }
    if (!result.shunted_ab) {
        require_above_floor(r_ab, options.s_floor, abc, a + b);
    }

    TwoLayerModel fit;
    fit.keep_t1 = !result.shunted_bc;
    fit.keep_t2 = !result.shunted_ab;
    fit.slots.push_back(TwoLayerModel::Slot::kAbc);
    if (fit.keep_t1) {
        if (known.theta_bc) {
            fit.known_bc = *known.theta_bc;
        } else {
            fit.slots.push_back(TwoLayerModel::Slot::kBc);
        }
    }
    if (fit.keep_t2) {
        if (known.theta_ab) {
            fit.known_ab = *known.theta_ab;
        } else {
            fit.slots.push_back(TwoLayerModel::Slot::kAb);
        }
    }
    if (fit.slots.size() > 2) {
        throw ParameterError("two-layer estimate can fit at most two unknown phases; supply theta_ab or theta_bc");
    }

    for (std::size_t j = 0; j < phi_grid.size(); ++j) {
        const auto [phi1, phi2] = phi_grid[j];
        const double f = sample_overlap_probability(model, MeasuredOperator::two_layer(a, b, c, phi1, phi2),
                                                    options.shots_per_point, base.child({6, j}), ledger);
        const auto big1 = sprotis_factor(phi1);
        const auto big2 = sprotis_factor(phi2);
        TwoLayerModel::Point p;
        p.t0 = r_abc;
        p.t1 = big1 * r_a * r_bc * std::polar(1.0, known.theta_a);
        p.t2 = big2 * r_ab * r_c * std::polar(1.0, known.theta_c);
        p.t3 = big1 * big2 * r_a * r_b * r_c * std::polar(1.0, known.theta_a + known.theta_b + known.theta_c);
        p.target = f;
        fit.points.push_back(p);
    }

    // Coarse scan over the torus of unknowns, then local refinement of the best
    // few basins.
    const std::size_t dim = fit.slots.size();
    const std::size_t steps = dim == 1 ? 720 : 120;
    std::vector<double> costs;
    const std::size_t total = dim == 1 ? steps : steps * steps;
    costs.reserve(total);
    auto grid_param = [&](std::size_t index) { return -kPi + kTwoPi * (static_cast<double>(index) + 0.5) / steps; };
    auto params_of = [&](std::size_t flat) {
        std::vector<double> p(dim);
        p[0] = grid_param(flat % steps);
        if (dim == 2) {
            p[1] = grid_param(flat / steps);
        }
        return p;
    };
    for (std::size_t flat = 0; flat < total; ++flat) {
        costs.push_back(fit.evaluate(params_of(flat), false).cost);
    }
    const auto [min_it, max_it] = std::minmax_element(costs.begin(), costs.end());
    const double scale = std::max(*max_it, 1e-300);
    if (*max_it - *min_it <= 1e-12 * (1.0 + scale)) {
        throw AmbiguityError("two-layer residual is flat in the unknown phases",
                             {-kPi, -kPi / 2, 0.0, kPi / 2});
    }

    std::vector<std::size_t> minima;
    for (std::size_t flat = 0; flat < total; ++flat) {
        const std::size_t i = flat % steps;
        const std::size_t jdx = flat / steps;
        bool is_min = true;
        for (int di = -1; di <= 1 && is_min; ++di) {
            for (int dj = (dim == 2 ? -1 : 0); dj <= (dim == 2 ? 1 : 0) && is_min; ++dj) {
                if (di == 0 && dj == 0) {
                    continue;
                }
                const std::size_t ni = (i + steps + di) % steps;
                const std::size_t nj = (jdx + steps + dj) % steps;
                const std::size_t nf = dim == 1 ? ni : nj * steps + ni;
                // Ties broken by index so a plateau yields a single candidate.
                if (costs[nf] < costs[flat] || (costs[nf] == costs[flat] && nf < flat)) {
                    is_min = false;
                }
            }
        }
        if (is_min) {
            minima.push_back(flat);
        }
    }
    std::sort(minima.begin(), minima.end(), [&](std::size_t x, std::size_t y) { return costs[x] < costs[y]; });
    if (minima.size() > 6) {
        minima.resize(6);
    }

    std::vector<Refined> refined;
    for (std::size_t flat : minima) {
        refined.push_back(levenberg_marquardt(fit, params_of(flat)));
    }
    std::sort(refined.begin(), refined.end(), [](const Refined& x, const Refined& y) { return x.cost < y.cost; });
    const Refined& best = refined.front();

    double data_scale = 0.0;
    for (const auto& p : fit.points) {
        data_scale += p.target * p.target;
    }
    const double tolerance = 1e-10 * data_scale + 0.05 * best.cost;
    std::vector<double> candidates{best.params[0]};
    for (std::size_t i = 1; i < refined.size(); ++i) {
        if (refined[i].cost <= best.cost + tolerance &&
            angular_distance(refined[i].params[0], best.params[0]) > 1e-3) {
            candidates.push_back(refined[i].params[0]);
        }
    }
    if (candidates.size() > 1) {
        throw AmbiguityError("two-layer fit has separated minima of equal residual", candidates);
    }
    if (best.min_curvature <= 1e-10 * std::max(best.max_curvature, 1e-300)) {
        throw AmbiguityError("two-layer fit is not locally identifiable", candidates);
    }

    result.theta_abc = best.params[0];
    for (std::size_t s = 1; s < dim; ++s) {
        if (fit.slots[s] == TwoLayerModel::Slot::kBc) {
            result.theta_bc = best.params[s];
        } else if (fit.slots[s] == TwoLayerModel::Slot::kAb) {
            result.theta_ab = best.params[s];
        }
    }
    result.residual = best.cost;
    return result;
}

}  // namespace sandwich

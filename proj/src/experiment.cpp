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

#include "sandwich/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "sandwich/costmodel.hpp"
#include "sandwich/errors.hpp"
#include "sandwich/sumtree.hpp"

namespace sandwich {

namespace {

using nlohmann::json;

constexpr std::pair<RunMode, std::string_view> kModeNames[] = {
    {RunMode::kSandwich, "sandwich"},
    {RunMode::kSequential, "sequential"},
    {RunMode::kHadamardExact, "hadamard-exact"},
    {RunMode::kTwoLayer, "two-layer"},
};

enum : std::uint64_t { kTreeStream = 11, kEstimateStream = 12, kSubEstimateStream = 13, kTwoLayerRunStream = 14 };

json params_to_json(const GeneratorParams& p) {
    return {{"gap", p.gap}, {"ground_weight", p.ground_weight}, {"center", p.center}, {"width", p.width},
            {"eta", p.eta}};
}

GeneratorParams params_from_json(const json& j) {
    GeneratorParams p;
    p.gap = j.value("gap", p.gap);
    p.ground_weight = j.value("ground_weight", p.ground_weight);
    p.center = j.value("center", p.center);
    p.width = j.value("width", p.width);
    p.eta = j.value("eta", p.eta);
    return p;
}

json usage_to_json(const UsageTotals& u) {
    return {{"u_applications", u.u_applications},
            {"sprotis_applications", u.sprotis_applications},
            {"w_applications", u.w_applications},
            {"shots", u.shots}};
}

template <typename T>
json optional_json(const std::optional<T>& value) {
    return value ? json(*value) : json(nullptr);
}

}  // namespace

RunMode parse_run_mode(std::string_view name) {
    for (const auto& [mode, text] : kModeNames) {
        if (text == name) {
            return mode;
        }
    }
    throw ParameterError("unknown run mode '" + std::string(name) + "'");
}

std::string_view run_mode_name(RunMode mode) {
    for (const auto& [m, text] : kModeNames) {
        if (m == mode) {
            return text;
        }
    }
    return "unknown";
}

BudgetPolicy RunConfig::budget() const {
    BudgetPolicy policy;
    policy.q = q;
    policy.epsilon = epsilon;
    policy.phi1 = phi1;
    policy.s_floor = s_floor;
    policy.min_shots = min_shots;
    policy.budget_scale = budget_scale;
    policy.theta1_scale = theta1_scale;
    policy.reuse_magnitudes = reuse_magnitudes;
    return policy;
}

SplitPolicy RunConfig::split() const {
    SplitPolicy policy;
    policy.x_min = x_min;
    policy.leaf_cutoff = leaf_cutoff;
    return policy;
}

void RunConfig::validate() const {
    if (k < 1) {
        throw ParameterError("k must be at least 1");
    }
    budget().validate();
    split().validate();
    if (mode == RunMode::kTwoLayer) {
        if (k < 3) {
            throw ParameterError("two-layer mode needs k >= 3");
        }
        if (two_layer_points < 4) {
            throw ParameterError("two-layer mode needs at least 4 grid points");
        }
        if (two_layer_shots < 1) {
            throw ParameterError("two-layer mode needs at least one shot per point");
        }
    }
    if (workers < 1) {
        throw ParameterError("workers must be at least 1");
    }
    if (tree_attempts < 1) {
        throw ParameterError("tree_attempts must be at least 1");
    }
    if (tree_min_smin && !(*tree_min_smin >= 0.0 && *tree_min_smin <= 1.0)) {
        throw ParameterError("tree_min_smin must be in [0, 1]");
    }
}

json config_to_json(const RunConfig& c) {
    json model{{"path", optional_json(c.model.path)},
               {"kind", std::string(model_kind_name(c.model.kind))},
               {"size", c.model.size},
               {"seed", c.model.seed},
               {"params", params_to_json(c.model.params)},
               {"inline", c.model.inline_model ? model_to_json(*c.model.inline_model) : json(nullptr)}};
    return json{
        {"model", std::move(model)},
        {"k", c.k},
        {"epsilon", c.epsilon},
        {"q", c.q},
        {"phi1", c.phi1},
        {"x_min", c.x_min},
        {"seed", c.seed},
        {"mode", std::string(run_mode_name(c.mode))},
        {"leaf_cutoff", c.leaf_cutoff},
        {"budget_scale", c.budget_scale},
        {"theta1_scale", c.theta1_scale},
        {"min_shots", c.min_shots},
        {"s_floor", c.s_floor},
        {"exact", c.exact},
        {"reuse_magnitudes", c.reuse_magnitudes},
        {"workers", c.workers},
        {"tree_min_smin", optional_json(c.tree_min_smin)},
        {"tree_attempts", c.tree_attempts},
        {"two_layer_points", c.two_layer_points},
        {"two_layer_shots", c.two_layer_shots},
    };
}

RunConfig config_from_json(const json& j) {
    try {
        RunConfig c;
        const json& m = j.at("model");
        if (m.contains("path") && !m.at("path").is_null()) {
            c.model.path = m.at("path").get<std::string>();
        }
        c.model.kind = parse_model_kind(m.value("kind", std::string(model_kind_name(c.model.kind))));
        c.model.size = m.value("size", c.model.size);
        c.model.seed = m.value("seed", c.model.seed);
        if (m.contains("params")) {
            c.model.params = params_from_json(m.at("params"));
        }
        if (m.contains("inline") && !m.at("inline").is_null()) {
            c.model.inline_model = model_from_json(m.at("inline"));
        }
        c.k = j.value("k", c.k);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.q = j.value("q", c.q);
        c.phi1 = j.value("phi1", c.phi1);
        c.x_min = j.value("x_min", c.x_min);
        c.seed = j.value("seed", c.seed);
        c.mode = parse_run_mode(j.value("mode", std::string(run_mode_name(c.mode))));
        c.leaf_cutoff = j.value("leaf_cutoff", c.leaf_cutoff);
        c.budget_scale = j.value("budget_scale", c.budget_scale);
        c.theta1_scale = j.value("theta1_scale", c.theta1_scale);
        c.min_shots = j.value("min_shots", c.min_shots);
        c.s_floor = j.value("s_floor", c.s_floor);
        c.exact = j.value("exact", c.exact);
        c.reuse_magnitudes = j.value("reuse_magnitudes", c.reuse_magnitudes);
        c.workers = j.value("workers", c.workers);
        if (j.contains("tree_min_smin") && !j.at("tree_min_smin").is_null()) {
            c.tree_min_smin = j.at("tree_min_smin").get<double>();
        }
        c.tree_attempts = j.value("tree_attempts", c.tree_attempts);
        c.two_layer_points = j.value("two_layer_points", c.two_layer_points);
        c.two_layer_shots = j.value("two_layer_shots", c.two_layer_shots);
        return c;
    } catch (const json::exception& e) {
        throw FileFormatError(std::string("malformed run config: ") + e.what());
    }
}

RunConfig resolve_config(const RunConfig& config) {
    RunConfig resolved = config;
    if (!resolved.model.inline_model) {
        if (resolved.model.path) {
            resolved.model.inline_model = load_model(*resolved.model.path);
        } else {
            resolved.model.inline_model =
                generate_model(resolved.model.kind, resolved.model.size, resolved.model.seed, resolved.model.params);
        }
    }
    return resolved;
}

SpectralModel config_model(const RunConfig& resolved) {
    if (!resolved.model.inline_model) {
        throw ParameterError("config is not resolved");
    }
    return *resolved.model.inline_model;
}

namespace {

EstimateReport run_two_layer(const SpectralModel& model, const RunConfig& cfg, const RngStream& master,
                             UsageLedger& ledger, TwoLayerDetails& details) {
    const BudgetPolicy budget = cfg.budget();
    const SplitPolicy split = cfg.split();
    const UsageTotals before = ledger.totals();
    details.a = cfg.k / 3;
    details.b = cfg.k / 3;
    details.c = cfg.k - details.a - details.b;

    std::map<std::uint64_t, double> phases;
    for (std::uint64_t v : {details.a, details.b, details.c, details.a + details.b, details.b + details.c}) {
        if (phases.count(v) != 0) {
            continue;
        }
        const SumTree tree = build_tree(v, split, master.child({kSubEstimateStream, v, 0}));
        const EstimateReport sub =
            sandwich_test(model, tree, budget, master.child({kSubEstimateStream, v, 1}), ledger, {cfg.workers});
        phases[v] = sub.theta_k;
    }
    details.known.theta_a = phases.at(details.a);
    details.known.theta_b = phases.at(details.b);
    details.known.theta_c = phases.at(details.c);
    details.known.theta_ab = phases.at(details.a + details.b);
    details.known.theta_bc = phases.at(details.b + details.c);

    TwoLayerOptions options;
    options.shots_per_point = cfg.two_layer_shots;
    options.s_floor = cfg.s_floor;
    details.result = two_layer_estimate(model, details.a, details.b, details.c,
                                        default_two_layer_grid(cfg.two_layer_points), details.known, options,
                                        master.child(kTwoLayerRunStream), ledger);

    EstimateReport report;
    report.k = cfg.k;
    report.phi1 = cfg.phi1;
    report.theta_k = details.result.theta_abc;
    const Amplitude exact = exact_amplitude(model, cfg.k);
    report.theta_k_exact = exact.argument;
    report.r_k_exact = exact.modulus;
    report.smin_with_root = exact.modulus;
    report.smin_without_root = 1.0;
    const UsageTotals after = ledger.totals();
    report.usage = UsageTotals{after.u_applications - before.u_applications,
                               after.sprotis_applications - before.sprotis_applications,
                               after.w_applications - before.w_applications, after.shots - before.shots};
    return report;
}

}  // namespace

RunResult execute_run(const RunConfig& config) {
    RunResult result;
    result.config = resolve_config(config);
    const RunConfig& cfg = result.config;
    cfg.validate();
    const SpectralModel model = config_model(cfg);
    const RngStream master(cfg.seed, cfg.exact ? ShotNoise::kExact : ShotNoise::kSampled);
    UsageLedger ledger;
    const RunOptions options{cfg.workers};

    try {
        switch (cfg.mode) {
            case RunMode::kSandwich: {
                const RngStream tree_stream = master.child(kTreeStream);
                if (cfg.tree_min_smin) {
                    result.tree = resample_tree(cfg.k, cfg.split(), tree_stream, model, *cfg.tree_min_smin,
                                                cfg.tree_attempts);
                    if (!result.tree) {
                        result.status = RunStatus::kDegenerate;
                        result.error = "no sampled tree reached the requested s_min";
                        break;
                    }
                } else {
                    result.tree = build_tree(cfg.k, cfg.split(), tree_stream);
                }
                result.report =
                    sandwich_test(model, *result.tree, cfg.budget(), master.child(kEstimateStream), ledger, options);
                break;
            }
            case RunMode::kSequential:
                result.tree = degenerate_chain_tree(cfg.k);
                result.report =
                    sandwich_test(model, *result.tree, cfg.budget(), master.child(kEstimateStream), ledger, options);
                break;
            case RunMode::kHadamardExact:
                result.report = hadamard_baseline(model, cfg.k, cfg.budget(), master.child(kEstimateStream), ledger);
                break;
            case RunMode::kTwoLayer: {
                TwoLayerDetails details;
                result.report = run_two_layer(model, cfg, master, ledger, details);
                result.two_layer = details;
                break;
            }
        }
    } catch (const DegenerateNodeError& e) {
        result.status = RunStatus::kDegenerate;
        result.error = e.what();
        result.degenerate_node = e.node_value();
        result.degenerate_power = e.power();
    } catch (const AmbiguityError& e) {
        result.status = RunStatus::kDegenerate;
        result.error = e.what();
    }
    result.usage = ledger.totals();
    return result;
}

namespace {

json report_to_json(const EstimateReport& r) {
    json leaves = json::array();
    for (const auto& leaf : r.leaves) {
        leaves.push_back({{"value", leaf.value},
                          {"count", leaf.count},
                          {"shots", leaf.shots},
                          {"theta_hat", leaf.theta},
                          {"modulus_hat", leaf.modulus}});
    }
    json nodes = json::array();
    for (const auto& n : r.nodes) {
        nodes.push_back({{"h", n.height},
                         {"p", n.position},
                         {"k_hat", n.value},
                         {"a", n.a},
                         {"b", n.b},
                         {"omega_hat", n.omega},
                         {"phi", n.phi},
                         {"shots_magnitude", n.shots_magnitude},
                         {"shots_sandwich", n.shots_sandwich},
                         {"clamped", n.clamped},
                         {"r_a_hat", n.magnitudes.r_a},
                         {"r_b_hat", n.magnitudes.r_b},
                         {"r_ab_hat", n.magnitudes.r_ab},
                         {"s_phi1_hat", n.s_phi1},
                         {"s_phi2_hat", n.s_phi2}});
    }
    return {{"k", r.k},
            {"theta_k_hat", r.theta_k},
            {"theta1_hat", r.theta1},
            {"theta_k_exact", r.theta_k_exact},
            {"r_k_exact", r.r_k_exact},
            {"abs_error", r.error()},
            {"unwrapped_theta", r.unwrapped_theta()},
            {"ones_count", r.ones_count},
            {"k_theta1_hat", static_cast<double>(r.ones_count) * r.theta1},
            {"phi1", r.phi1},
            {"h_max", r.h_max},
            {"smin_with_root", r.smin_with_root},
            {"smin_without_root", r.smin_without_root},
            {"predicted_u_applications", r.predicted_u_applications},
            {"usage", usage_to_json(r.usage)},
            {"leaves", std::move(leaves)},
            {"nodes", std::move(nodes)}};
}

}  // namespace

json run_to_json(const RunResult& result) {
    json out{{"format", "sandwich-report/1"},
             {"config", config_to_json(result.config)},
             {"master_seed", result.config.seed},
             {"status", result.status == RunStatus::kOk ? "ok" : "degenerate"},
             {"exit_code", static_cast<int>(result.status)},
             {"error", result.error},
             {"usage", usage_to_json(result.usage)}};
    out["degenerate"] = result.degenerate_power
                            ? json{{"node", *result.degenerate_node}, {"power", *result.degenerate_power}}
                            : json(nullptr);
    out["estimate"] = result.report ? report_to_json(*result.report) : json(nullptr);
    out["tree"] = result.tree ? tree_to_json(*result.tree) : json(nullptr);
    if (result.two_layer) {
        const auto& t = *result.two_layer;
        out["two_layer"] = {{"a", t.a},
                            {"b", t.b},
                            {"c", t.c},
                            {"theta_a_hat", t.known.theta_a},
                            {"theta_b_hat", t.known.theta_b},
                            {"theta_c_hat", t.known.theta_c},
                            {"theta_ab_hat", optional_json(t.known.theta_ab)},
                            {"theta_bc_hat", optional_json(t.known.theta_bc)},
                            {"shunted_ab", t.result.shunted_ab},
                            {"shunted_bc", t.result.shunted_bc},
                            {"residual", t.result.residual}};
    } else {
        out["two_layer"] = nullptr;
    }
    return out;
}

std::string report_csv(const EstimateReport& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << kReportCsvHeader << '\n';
    for (const auto& n : r.nodes) {
        out << "node," << n.height << ',' << n.position << ',' << n.value << ',' << n.a << ',' << n.b << ','
            << n.omega << ',' << n.phi << ',' << n.shots_magnitude << ',' << n.shots_sandwich << ','
            << (n.clamped ? 1 : 0) << ',' << n.magnitudes.r_a << ',' << n.magnitudes.r_b << ','
            << n.magnitudes.r_ab << ',' << n.s_phi1 << ',' << n.s_phi2 << ",,,,,,,\n";
    }
    out << "summary,,,," << ",,,," << r.phi1 << ",,,,,,,," << r.theta_k << ',' << r.theta1 << ','
        << r.theta_k_exact << ',' << r.error() << ',' << r.usage.u_applications << ','
        << r.usage.sprotis_applications << ',' << r.usage.shots << '\n';
    return out.str();
}

SminStats smin_stats(const SpectralModel& model, std::uint64_t k, std::uint64_t trees, double x_min,
                     std::uint64_t seed) {
    if (trees < 1) {
        throw ParameterError("smin-stats needs at least one tree");
    }
    SplitPolicy policy;
    policy.x_min = x_min;
    policy.validate();
    SminStats stats;
    stats.k = k;
    const auto magnitudes = magnitude_table(model, k);
    for (std::uint64_t kp = 1; kp <= k; ++kp) {
        stats.r_min = std::min(stats.r_min, magnitudes[kp]);
    }
    const RngStream master(seed);
    for (std::uint64_t i = 0; i < trees; ++i) {
        const RngStream stream = master.child(i);
        const SumTree tree = build_tree(k, policy, stream);
        SminRow row;
        row.tree = i;
        row.tree_seed = stream.derived_seed();
        row.smin_with_root = tree_smin(tree, magnitudes, false);
        row.smin_without_root = tree_smin(tree, magnitudes, true);
        row.nontrivial_nodes = nontrivial_nodes(tree).size();
        row.h_max = tree.h_max();
        stats.rows.push_back(row);
    }
    return stats;
}

namespace {

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

std::string smin_stats_csv(const SminStats& stats) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << kSminCsvHeader << '\n';
    std::vector<double> with_root;
    std::vector<double> without_root;
    for (const auto& row : stats.rows) {
        out << "tree," << row.tree << ',' << row.tree_seed << ',' << row.smin_with_root << ','
            << row.smin_without_root << ',' << row.nontrivial_nodes << ',' << row.h_max << ',' << stats.r_min
            << '\n';
        with_root.push_back(row.smin_with_root);
        without_root.push_back(row.smin_without_root);
    }
    constexpr std::pair<std::string_view, double> kQuantiles[] = {
        {"min", 0.0}, {"q05", 0.05}, {"q25", 0.25}, {"median", 0.5}, {"q75", 0.75}, {"q95", 0.95}, {"max", 1.0}};
    if (!stats.rows.empty()) {
        for (const auto& [name, q] : kQuantiles) {
            out << "summary_" << name << ",,," << quantile(with_root, q) << ',' << quantile(without_root, q)
                << ",,," << stats.r_min << '\n';
        }
    }
    return out.str();
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const std::vector<std::uint64_t>& ks,
                                const std::vector<std::uint64_t>& seeds, const std::vector<RunMode>& modes,
                                unsigned workers) {
    if (ks.empty() || seeds.empty() || modes.empty()) {
        throw ParameterError("sweep needs at least one k, one seed and one mode");
    }
    const RunConfig resolved = resolve_config(base);
    const SpectralModel model = config_model(resolved);

    std::vector<RunConfig> configs;
    std::vector<RunMode> sorted_modes = modes;
    std::sort(sorted_modes.begin(), sorted_modes.end(),
              [](RunMode x, RunMode y) { return run_mode_name(x) < run_mode_name(y); });
    std::vector<std::uint64_t> sorted_ks = ks;
    std::sort(sorted_ks.begin(), sorted_ks.end());
    std::vector<std::uint64_t> sorted_seeds = seeds;
    std::sort(sorted_seeds.begin(), sorted_seeds.end());
    for (RunMode mode : sorted_modes) {
        for (std::uint64_t k : sorted_ks) {
            for (std::uint64_t seed : sorted_seeds) {
                RunConfig c = resolved;
                c.mode = mode;
                c.k = k;
                c.seed = seed;
                c.workers = 1;
                c.validate();
                configs.push_back(c);
            }
        }
    }

    std::map<std::uint64_t, double> r_min;
    for (std::uint64_t k : sorted_ks) {
        r_min[k] = min_magnitude_up_to(model, k);
    }

    std::vector<SweepRow> rows(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
            const RunResult result = execute_run(configs[i]);
            SweepRow row;
            row.mode = configs[i].mode;
            row.k = configs[i].k;
            row.seed = configs[i].seed;
            row.status = result.status;
            row.usage = result.usage;
            row.r_min = r_min.at(row.k);
            if (result.report && result.status == RunStatus::kOk) {
                row.theta_k_hat = result.report->theta_k;
                row.theta_k_exact = result.report->theta_k_exact;
                row.abs_error = result.report->error();
                row.predicted_u_applications = result.report->predicted_u_applications;
                row.smin_without_root = result.report->smin_without_root;
            } else {
                const Amplitude exact = exact_amplitude(model, row.k);
                row.theta_k_exact = exact.argument;
                row.theta_k_hat = std::numeric_limits<double>::quiet_NaN();
                row.abs_error = std::numeric_limits<double>::quiet_NaN();
            }
            rows[i] = row;
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(configs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    for (RunMode mode : sorted_modes) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::uint64_t k : sorted_ks) {
            double total = 0.0;
            std::size_t count = 0;
            for (const auto& row : rows) {
                if (row.mode == mode && row.k == k && row.status == RunStatus::kOk) {
                    total += static_cast<double>(row.usage.u_applications);
                    ++count;
                }
            }
            if (count > 0 && total > 0.0) {
                xs.push_back(static_cast<double>(k));
                ys.push_back(total / static_cast<double>(count));
            }
        }
        const std::set<double> distinct(xs.begin(), xs.end());
        const double slope = distinct.size() >= 2 ? loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
        for (auto& row : rows) {
            if (row.mode == mode) {
                row.mode_slope = slope;
            }
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << run_mode_name(r.mode) << ',' << r.k << ',' << r.seed << ','
            << (r.status == RunStatus::kOk ? "ok" : "degenerate") << ',' << r.theta_k_hat << ',' << r.theta_k_exact
            << ',' << r.abs_error << ',' << r.usage.u_applications << ',' << r.usage.sprotis_applications << ','
            << r.usage.w_applications << ',' << r.usage.shots << ',' << r.predicted_u_applications << ','
            << r.smin_without_root << ',' << r.r_min << ',' << r.mode_slope << '\n';
    }
    return out.str();
}

unsigned default_workers() {
    if (const char* env = std::getenv("SANDWICH_WORKERS")) {
        try {
            const long value = std::stol(env);
            if (value >= 1) {
                return static_cast<unsigned>(value);
            }
        } catch (const std::exception&) {
        }
    }
    return 1;
}

}  // namespace sandwich

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sandwich/costmodel.hpp"
#include "sandwich/errors.hpp"
#include "sandwich/experiment.hpp"
#include "sandwich/sumtree.hpp"
#include "sandwich/verify.hpp"

namespace {

using namespace sandwich;
using nlohmann::json;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitDegenerate = 3, kExitVerify = 4, kExitIo = 5 };

struct ModelArgs {
    std::string path;
    std::string kind = "ground-dominated";
    std::size_t size = 16;
    std::uint64_t seed = 1;
    GeneratorParams params;
    CLI::Option* size_option = nullptr;

    void attach(CLI::App* app, bool with_path) {
        if (with_path) {
            app->add_option("--model", path, "Model JSON file (overrides the generator options)");
        }
        app->add_option("--kind", kind, "two-level, clustered, uniform-random or ground-dominated")
            ->capture_default_str();
        size_option = app->add_option("--size", size, "Number of levels (two-level models default to 2)")
                          ->capture_default_str();
        app->add_option(with_path ? "--model-seed" : "--seed", seed, "Generator seed")->capture_default_str();
        app->add_option("--gap", params.gap, "Two-level phase gap")->capture_default_str();
        app->add_option("--ground-weight", params.ground_weight, "Two-level ground weight")->capture_default_str();
        app->add_option("--center", params.center, "Cluster center")->capture_default_str();
        app->add_option("--width", params.width, "Cluster width")->capture_default_str();
        app->add_option("--eta", params.eta, "Ground-state overlap")->capture_default_str();
    }

    ModelSource source() const {
        ModelSource m;
        if (!path.empty()) {
            m.path = path;
        }
        m.kind = parse_model_kind(kind);
        m.size = (m.kind == ModelKind::kTwoLevel && size_option->count() == 0) ? 2 : size;
        m.seed = seed;
        m.params = params;
        return m;
    }
};

struct RunArgs {
    RunConfig config;
    std::string mode = "sandwich";
    double tree_min_smin = -1.0;

    void attach(CLI::App* app, bool single_run) {
        auto& c = config;
        if (single_run) {
            app->add_option("--k", c.k, "Target power")->capture_default_str();
            app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
            app->add_option("--mode", mode, "sandwich, sequential, hadamard-exact or two-layer")
                ->capture_default_str();
        }
        app->add_option("--epsilon", c.epsilon, "Target phase accuracy")->capture_default_str();
        app->add_option("--q", c.q, "Budget exponent")->capture_default_str();
        app->add_option("--phi1", c.phi1, "First SPROTIS angle")->capture_default_str();
        app->add_option("--x-min", c.x_min, "Lower bound of the split fraction")->capture_default_str();
        app->add_option("--leaf-cutoff", c.leaf_cutoff, "Largest node value measured directly")
            ->capture_default_str();
        app->add_option("--budget-scale", c.budget_scale, "Shot budget constant")->capture_default_str();
        app->add_option("--theta1-scale", c.theta1_scale, "Leaf shot constant")->capture_default_str();
        app->add_option("--min-shots", c.min_shots, "Shot floor per channel")->capture_default_str();
        app->add_option("--s-floor", c.s_floor, "Smallest usable magnitude")->capture_default_str();
        app->add_flag("--exact", c.exact, "Disable shot noise");
        app->add_flag("--reuse-magnitudes", c.reuse_magnitudes, "Share magnitude estimates between nodes");
        app->add_option("--tree-min-smin", tree_min_smin, "Resample trees until s_min reaches this");
        app->add_option("--tree-attempts", c.tree_attempts, "Resampling attempts")->capture_default_str();
        app->add_option("--two-layer-points", c.two_layer_points, "Two-layer grid size")->capture_default_str();
        app->add_option("--two-layer-shots", c.two_layer_shots, "Shots per two-layer grid point")
            ->capture_default_str();
    }

    RunConfig finish(const ModelArgs& model) const {
        RunConfig c = config;
        c.model = model.source();
        c.mode = parse_run_mode(mode);
        if (tree_min_smin >= 0.0) {
            c.tree_min_smin = tree_min_smin;
        }
        return c;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileFormatError("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileFormatError("cannot write '" + path + "'");
    }
    out << content;
    if (!out) {
        throw FileFormatError("write to '" + path + "' failed");
    }
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw FileFormatError("'" + path + "' is not valid JSON: " + e.what());
    }
}

// CSV outputs start with one comment line carrying the resolved config.
std::string with_config_comment(const json& config, const std::string& csv) {
    return "# " + config.dump() + "\n" + csv;
}

std::string output_or_stdout(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return "stdout";
    }
    write_file(path, content);
    return path;
}

int cmd_gen_model(const ModelArgs& args, const std::string& out) {
    const ModelSource src = args.source();
    const SpectralModel model = generate_model(src.kind, src.size, src.seed, src.params);
    save_model(model, out);
    std::cout << "wrote " << model.levels() << "-level " << args.kind << " model to " << out << '\n';
    return kExitOk;
}

int cmd_run(const RunConfig& config, const std::string& report_path, const std::string& csv_path) {
    const RunResult result = execute_run(config);
    const json report = run_to_json(result);
    if (!report_path.empty()) {
        write_file(report_path, report.dump(2) + "\n");
    }
    if (!csv_path.empty() && result.report) {
        write_file(csv_path, with_config_comment(report.at("config"), report_csv(*result.report)));
    }
    std::printf("mode=%s k=%llu seed=%llu status=%s\n", std::string(run_mode_name(result.config.mode)).c_str(),
                static_cast<unsigned long long>(result.config.k),
                static_cast<unsigned long long>(result.config.seed),
                result.status == RunStatus::kOk ? "ok" : "degenerate");
    if (result.report) {
        const auto& r = *result.report;
        std::printf("theta_k_hat=%.12f theta_k_exact=%.12f abs_error=%.3e\n", r.theta_k, r.theta_k_exact, r.error());
    }
    std::printf("u_applications=%llu sprotis_applications=%llu shots=%llu\n",
                static_cast<unsigned long long>(result.usage.u_applications),
                static_cast<unsigned long long>(result.usage.sprotis_applications),
                static_cast<unsigned long long>(result.usage.shots));
    if (result.status != RunStatus::kOk) {
        std::cerr << "degenerate: " << result.error << '\n';
        return kExitDegenerate;
    }
    return kExitOk;
}

int cmd_tree(std::uint64_t k, const SplitPolicy& policy, std::uint64_t seed, bool padded, const std::string& out) {
    SumTree tree = build_tree(k, policy, RngStream(seed));
    if (padded) {
        tree = pad_to_uniform_depth(tree);
    }
    std::printf("k=%llu nodes=%zu nontrivial=%zu h_max=%u bound=%u ones=%llu\n", static_cast<unsigned long long>(k),
                tree.nodes().size(), nontrivial_nodes(tree).size(), tree.h_max(),
                height_bound(k, policy.y_max()), static_cast<unsigned long long>(count_ones_leaves(tree)));
    if (!out.empty()) {
        write_file(out, tree_to_json(tree).dump() + "\n");
    }
    return kExitOk;
}

int cmd_smin_stats(const ModelArgs& model_args, std::uint64_t k, std::uint64_t trees, double x_min,
                   std::uint64_t seed, const std::string& out) {
    RunConfig config;
    config.model = model_args.source();
    config.k = k;
    config.x_min = x_min;
    config.seed = seed;
    config = resolve_config(config);
    const SminStats stats = smin_stats(config_model(config), k, trees, x_min, seed);
    json header = config_to_json(config);
    header["trees"] = trees;
    const std::string where = output_or_stdout(out, with_config_comment(header, smin_stats_csv(stats)));
    if (where != "stdout") {
        std::cout << "wrote " << stats.rows.size() << " trees to " << where << '\n';
    }
    return kExitOk;
}

int cmd_verify(int qubits, unsigned seeds, bool inject_fault) {
    const dense::OracleReport report = dense::run_oracle_checks(qubits, seeds, inject_fault);
    for (const auto& check : report.checks) {
        std::printf("[%s] %-24s cases=%zu max_error=%.3e tolerance=%.1e\n", check.passed ? "PASS" : "FAIL",
                    check.name.c_str(), check.cases, check.max_error, check.tolerance);
    }
    return report.passed() ? kExitOk : kExitVerify;
}

int cmd_sweep(const RunConfig& base, const std::vector<std::uint64_t>& ks, const std::vector<std::uint64_t>& seeds,
              const std::vector<std::string>& mode_names, unsigned workers, const std::string& out) {
    std::vector<RunMode> modes;
    for (const auto& name : mode_names) {
        modes.push_back(parse_run_mode(name));
    }
    const RunConfig resolved = resolve_config(base);
    const auto rows = run_sweep(resolved, ks, seeds, modes, workers);
    json header = config_to_json(resolved);
    header["ks"] = ks;
    header["seeds"] = seeds;
    header["modes"] = mode_names;
    const std::string where = output_or_stdout(out, with_config_comment(header, sweep_csv(rows)));
    bool failed = false;
    for (const auto& row : rows) {
        failed = failed || row.status != RunStatus::kOk;
    }
    if (where != "stdout") {
        std::cout << "wrote " << rows.size() << " rows to " << where << '\n';
    }
    return failed ? kExitDegenerate : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sandwich-test phase estimation simulator"};
    app.require_subcommand(1);

    ModelArgs gen_args;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-model", "Generate a spectral model file");
    gen_args.attach(gen, false);
    gen->add_option("--out", gen_out, "Output path")->required();

    ModelArgs run_model;
    RunArgs run_args;
    std::string replay, report_path, csv_path;
    auto* run = app.add_subcommand("run", "Estimate theta_k for one configuration");
    run_model.attach(run, true);
    run_args.attach(run, true);
    run->add_option("--workers", run_args.config.workers, "Worker threads")->default_val(default_workers());
    run->add_option("--replay", replay, "Re-run the config embedded in a report (or a bare config file)");
    run->add_option("--report", report_path, "JSON report path");
    run->add_option("--csv", csv_path, "Per-node CSV path");

    std::uint64_t tree_k = 16, tree_seed = 1;
    SplitPolicy tree_policy;
    bool tree_padded = false;
    std::string tree_out;
    auto* tree = app.add_subcommand("tree", "Sample one random sum tree");
    tree->add_option("--k", tree_k, "Root value")->capture_default_str();
    tree->add_option("--x-min", tree_policy.x_min, "Lower bound of the split fraction")->capture_default_str();
    tree->add_option("--leaf-cutoff", tree_policy.leaf_cutoff, "Largest unsplit node value")->capture_default_str();
    tree->add_option("--seed", tree_seed, "Seed")->capture_default_str();
    tree->add_flag("--padded", tree_padded, "Pad to uniform depth");
    tree->add_option("--out", tree_out, "Tree JSON path");

    ModelArgs smin_model;
    std::uint64_t smin_k = 1024, smin_trees = 1000, smin_seed = 1;
    double smin_x_min = 1.0 / 3.0;
    std::string smin_out;
    auto* smin = app.add_subcommand("smin-stats", "Distribution of tree s_min over random trees");
    smin_model.attach(smin, true);
    smin->add_option("--k", smin_k, "Root value")->capture_default_str();
    smin->add_option("--trees", smin_trees, "Number of trees")->capture_default_str();
    smin->add_option("--x-min", smin_x_min, "Lower bound of the split fraction")->capture_default_str();
    smin->add_option("--seed", smin_seed, "Seed")->capture_default_str();
    smin->add_option("--out", smin_out, "CSV path (stdout if omitted)");

    int verify_n = 3;
    unsigned verify_seeds = 20;
    bool verify_fault = false;
    auto* verify = app.add_subcommand("verify", "Check closed forms against dense matrices");
    verify->add_option("--n", verify_n, "Qubits (at most 12)")->capture_default_str();
    verify->add_option("--seeds", verify_seeds, "Random instances")->capture_default_str();
    verify->add_flag("--inject-fault", verify_fault, "Perturb the closed form (harness self-test)");

    ModelArgs sweep_model;
    RunArgs sweep_args;
    std::vector<std::uint64_t> sweep_ks, sweep_seeds{1};
    std::vector<std::string> sweep_modes{"sandwich"};
    unsigned sweep_workers = default_workers();
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Batch runs over k, seeds and modes");
    sweep_model.attach(sweep, true);
    sweep_args.attach(sweep, false);
    sweep->add_option("--ks", sweep_ks, "Comma-separated k values")->required()->delimiter(',');
    sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds")->delimiter(',');
    sweep->add_option("--modes", sweep_modes, "Comma-separated modes")->delimiter(',');
    sweep->add_option("--workers", sweep_workers, "Worker threads")->capture_default_str();
    sweep->add_option("--out", sweep_out, "CSV path (stdout if omitted)");

    DepthParams depth_params;
    auto* depth = app.add_subcommand("depth", "Circuit depth under the locality constraint");
    depth->add_option("--n", depth_params.n, "System qubits")->capture_default_str();
    depth->add_option("--t-u", depth_params.t_u, "Depth of U")->capture_default_str();
    depth->add_option("--t-w", depth_params.t_w, "Depth of W")->capture_default_str();
    depth->add_option("--k", depth_params.k, "Power")->capture_default_str();
    depth->add_option("--alpha", depth_params.alpha, "Controlled-gate overhead per qubit")->capture_default_str();
    depth->add_option("--beta", depth_params.beta, "SPROTIS depth per qubit squared")->capture_default_str();
    depth->add_option("--layers", depth_params.sprotis_layers, "SPROTIS layers")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            return cmd_gen_model(gen_args, gen_out);
        }
        if (*run) {
            RunConfig config;
            if (!replay.empty()) {
                const json j = parse_json_file(replay);
                config = config_from_json(j.contains("config") ? j.at("config") : j);
            } else {
                config = run_args.finish(run_model);
            }
            return cmd_run(config, report_path, csv_path);
        }
        if (*tree) {
            tree_policy.validate();
            return cmd_tree(tree_k, tree_policy, tree_seed, tree_padded, tree_out);
        }
        if (*smin) {
            return cmd_smin_stats(smin_model, smin_k, smin_trees, smin_x_min, smin_seed, smin_out);
        }
        if (*verify) {
            return cmd_verify(verify_n, verify_seeds, verify_fault);
        }
        if (*sweep) {
            if (sweep_ks.empty()) {
                throw ParameterError("--ks needs at least one value");
            }
            return cmd_sweep(sweep_args.finish(sweep_model), sweep_ks, sweep_seeds, sweep_modes,
                             std::max(1u, sweep_workers), sweep_out);
        }
        if (*depth) {
            depth_params.validate();
            std::printf("depth_hadamard=%.6g depth_sandwich=%.6g spatial_qubits=%llu\n",
                        depth_hadamard(depth_params), depth_sandwich(depth_params),
                        static_cast<unsigned long long>(spatial_qubits(depth_params)));
            return kExitOk;
        }
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FileFormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

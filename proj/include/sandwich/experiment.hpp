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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sandwich/estimators.hpp"
#include "sandwich/spectral.hpp"

namespace sandwich {

enum class RunMode { kSandwich, kSequential, kHadamardExact, kTwoLayer };

RunMode parse_run_mode(std::string_view name);
std::string_view run_mode_name(RunMode mode);

/// Where the model comes from. A resolved config always carries the model
/// inline, so replaying it does not depend on external files.
struct ModelSource {
    std::optional<std::string> path;
    ModelKind kind = ModelKind::kGroundDominated;
    std::size_t size = 16;
    std::uint64_t seed = 1;
    GeneratorParams params;
    std::optional<SpectralModel> inline_model;
};

struct RunConfig {
    ModelSource model;
    std::uint64_t k = 128;
    double epsilon = 0.05;
    double q = 2.0;
    double phi1 = kPi / 4;
    double x_min = 1.0 / 3.0;
    std::uint64_t seed = 1;
    RunMode mode = RunMode::kSandwich;
    std::uint64_t leaf_cutoff = 1;
    double budget_scale = 1.0;
    double theta1_scale = 16.0;
    std::uint64_t min_shots = 100;
    double s_floor = 1e-3;
    bool exact = false;
    bool reuse_magnitudes = false;
    unsigned workers = 1;
    // Resample the tree until its s_min (root excluded) reaches this.
    std::optional<double> tree_min_smin;
    unsigned tree_attempts = 1000;
    std::size_t two_layer_points = 6;
    std::uint64_t two_layer_shots = 100000;

    BudgetPolicy budget() const;
    SplitPolicy split() const;
    void validate() const;
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

/// Loads or generates the model and stores it inline in the returned config.
RunConfig resolve_config(const RunConfig& config);
SpectralModel config_model(const RunConfig& resolved);

enum class RunStatus { kOk = 0, kDegenerate = 3 };

struct TwoLayerDetails {
    std::uint64_t a = 0, b = 0, c = 0;
    TwoLayerKnown known;
    TwoLayerResult result;
};

struct RunResult {
    RunConfig config;  // resolved
    RunStatus status = RunStatus::kOk;
    std::string error;
    std::optional<std::uint64_t> degenerate_power;
    std::optional<std::uint64_t> degenerate_node;
    std::optional<EstimateReport> report;
    std::optional<SumTree> tree;
    std::optional<TwoLayerDetails> two_layer;
    UsageTotals usage;  // ledger totals, also for failed runs
};

/// Runs one configuration end to end. Degenerate nodes and ambiguous fits are
/// reported through `status`; configuration and I/O errors throw.
RunResult execute_run(const RunConfig& config);

/// Full report: resolved config, master seed, estimate, per-node table, ledger
/// totals and tree diagnostics.
nlohmann::json run_to_json(const RunResult& result);

/// One row per non-trivial node plus a summary row.
std::string report_csv(const EstimateReport& report);
inline constexpr std::string_view kReportCsvHeader =
    "row_type,h,p,k_hat,a,b,omega,phi,shots_magnitude,shots_sandwich,clamped,r_a,r_b,r_ab,s_phi1,s_phi2,"
    "theta_k_hat,theta1_hat,theta_k_exact,abs_error,u_applications,sprotis_applications,shots";

struct SminRow {
    std::uint64_t tree = 0;
    std::uint64_t tree_seed = 0;
    double smin_with_root = 1.0;
    double smin_without_root = 1.0;
    std::size_t nontrivial_nodes = 0;
    std::uint32_t h_max = 0;
};

struct SminStats {
    std::uint64_t k = 0;
    double r_min = 1.0;  // exhaustive over 1..k
    std::vector<SminRow> rows;
};

/// Samples `trees` random trees for (model, k) and records each tree's s_min.
SminStats smin_stats(const SpectralModel& model, std::uint64_t k, std::uint64_t trees, double x_min,
                     std::uint64_t seed);

/// Per-tree rows, then quantile summary rows (min, q05, q25, median, q75, q95, max).
std::string smin_stats_csv(const SminStats& stats);
inline constexpr std::string_view kSminCsvHeader =
    "row_type,tree,tree_seed,smin_with_root,smin_without_root,nontrivial_nodes,h_max,r_min";

struct SweepRow {
    RunMode mode = RunMode::kSandwich;
    std::uint64_t k = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::kOk;
    double theta_k_hat = 0.0;
    double theta_k_exact = 0.0;
    double abs_error = 0.0;
    UsageTotals usage;
    std::uint64_t predicted_u_applications = 0;
    double smin_without_root = 1.0;
    double r_min = 1.0;
    double mode_slope = 0.0;
};

/// Every (mode, k, seed) combination of `base`, run on `workers` threads. Rows
/// come back sorted by (mode, k, seed) and carry the per-mode log-log slope of
/// mean U applications against k.
std::vector<SweepRow> run_sweep(const RunConfig& base, const std::vector<std::uint64_t>& ks,
                                const std::vector<std::uint64_t>& seeds, const std::vector<RunMode>& modes,
                                unsigned workers);

std::string sweep_csv(const std::vector<SweepRow>& rows);
inline constexpr std::string_view kSweepCsvHeader =
    "mode,k,seed,status,theta_k_hat,theta_k_exact,abs_error,u_applications,sprotis_applications,w_applications,"
    "shots,predicted_u_applications,smin_without_root,r_min,mode_slope";

/// Worker count from SANDWICH_WORKERS, else 1.
unsigned default_workers();

}  // namespace sandwich

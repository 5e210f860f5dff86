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
#include <map>
#include <string>
#include <vector>

#include "sandwich/measurement.hpp"

namespace sandwich {

/// Circuit-depth inputs under the locality constraint (one local gate per step).
struct DepthParams {
    std::uint64_t n = 10;  // system qubits
    double t_u = 100.0;    // depth of one U
    double t_w = 10.0;     // depth of the preparation unitary W
    std::uint64_t k = 1;
    // Controlled layers cost alpha * n (swap out, controlled gate, swap back).
    double alpha = 3.0;
    // One selective phase rotation costs beta * n^2.
    double beta = 1.0;
    std::uint64_t sprotis_layers = 1;

    double locality_factor() const { return alpha * static_cast<double>(n); }
    void validate() const;
};

/// k * locality_factor * t_u + t_w: controlled U^k plus preparation.
double depth_hadamard(const DepthParams& p);

/// k * t_u + sprotis_layers * beta * n^2 + locality_factor * t_u, the last term
/// being the single controlled U of the leaf Hadamard test.
double depth_sandwich(const DepthParams& p);

/// n + 1: the system plus one control qubit.
std::uint64_t spatial_qubits(const DepthParams& p);

/// Least-squares slope of log(y) against log(x). Needs >= 2 distinct x.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// One completed run, as fed to runtime_summary.
struct RunRecord {
    std::string method;
    std::uint64_t k = 0;
    UsageTotals usage;
    double r_min = 1.0;  // min r_k' over k' <= k
    double s_min = 1.0;  // tree s_min of the run (1 when no tree)
};

struct ComparisonRow {
    std::string method;
    std::uint64_t k = 0;
    std::uint64_t runs = 0;
    double mean_u_applications = 0.0;
    double mean_sprotis_applications = 0.0;
    double ratio_to_reference = 1.0;
    double slope = 0.0;  // fitted over all k of this method
    double r_min = 1.0;
    double s_min = 1.0;  // minimum over the runs
};

struct RuntimeSummary {
    std::string reference_method;
    std::vector<ComparisonRow> rows;  // sorted by (method, k)
    std::map<std::string, double> slopes;
};

/// Averages U applications per (method, k), fits log-log slopes against k and
/// reports ratios against `reference_method` at the same k (1 when absent).
RuntimeSummary runtime_summary(const std::vector<RunRecord>& records, const std::string& reference_method);

/// method,k,runs,mean_u_applications,mean_sprotis_applications,ratio_to_reference,slope,r_min,s_min
std::string runtime_summary_csv(const RuntimeSummary& summary);

}  // namespace sandwich

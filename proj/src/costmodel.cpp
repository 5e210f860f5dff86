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

#include "sandwich/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "sandwich/errors.hpp"

namespace sandwich {

void DepthParams::validate() const {
    if (n < 1) {
        throw ParameterError("depth parameter n must be positive");
    }
    if (!(t_u > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
        throw ParameterError("depth parameters t_u, alpha and beta must be positive");
    }
    if (!(t_w >= 0.0) || !std::isfinite(t_w)) {
        throw ParameterError("depth parameter t_w must be nonnegative");
    }
}

double depth_hadamard(const DepthParams& p) {
    return static_cast<double>(p.k) * p.locality_factor() * p.t_u + p.t_w;
}

double depth_sandwich(const DepthParams& p) {
    const double n = static_cast<double>(p.n);
    return static_cast<double>(p.k) * p.t_u + static_cast<double>(p.sprotis_layers) * p.beta * n * n +
           p.locality_factor() * p.t_u;
}

std::uint64_t spatial_qubits(const DepthParams& p) {
    return p.n + 1;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw ParameterError("log-log fit needs at least two (x, y) pairs");
    }
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw ParameterError("log-log fit needs positive values");
        }
        mean_x += std::log(xs[i]);
        mean_y += std::log(ys[i]);
    }
    mean_x /= static_cast<double>(xs.size());
    mean_y /= static_cast<double>(xs.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = std::log(xs[i]) - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(ys[i]) - mean_y);
    }
    if (sxx == 0.0) {
        throw ParameterError("log-log fit needs at least two distinct x values");
    }
    return sxy / sxx;
}

RuntimeSummary runtime_summary(const std::vector<RunRecord>& records, const std::string& reference_method) {
    struct Accumulator {
        std::uint64_t runs = 0;
        double u = 0.0;
        double sprotis = 0.0;
        double r_min = 1.0;
        double s_min = 1.0;
    };
    std::map<std::pair<std::string, std::uint64_t>, Accumulator> groups;
    for (const auto& rec : records) {
        auto& acc = groups[{rec.method, rec.k}];
        ++acc.runs;
        acc.u += static_cast<double>(rec.usage.u_applications);
        acc.sprotis += static_cast<double>(rec.usage.sprotis_applications);
        acc.r_min = std::min(acc.r_min, rec.r_min);
        acc.s_min = std::min(acc.s_min, rec.s_min);
    }

    RuntimeSummary summary;
    summary.reference_method = reference_method;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& [key, acc] : groups) {
        ComparisonRow row;
        row.method = key.first;
        row.k = key.second;
        row.runs = acc.runs;
        row.mean_u_applications = acc.u / static_cast<double>(acc.runs);
        row.mean_sprotis_applications = acc.sprotis / static_cast<double>(acc.runs);
        row.r_min = acc.r_min;
        row.s_min = acc.s_min;
        summary.rows.push_back(row);
        if (row.mean_u_applications > 0.0) {
            series[row.method].first.push_back(static_cast<double>(row.k));
            series[row.method].second.push_back(row.mean_u_applications);
        }
    }
    for (const auto& [method, xy] : series) {
        const std::set<double> distinct(xy.first.begin(), xy.first.end());
        summary.slopes[method] =
            distinct.size() >= 2 ? loglog_slope(xy.first, xy.second) : std::numeric_limits<double>::quiet_NaN();
    }
    for (auto& row : summary.rows) {
        if (auto it = summary.slopes.find(row.method); it != summary.slopes.end()) {
            row.slope = it->second;
        } else {
            row.slope = std::numeric_limits<double>::quiet_NaN();
        }
        auto ref = groups.find({reference_method, row.k});
        if (ref != groups.end() && ref->second.u > 0.0) {
            row.ratio_to_reference =
                row.mean_u_applications / (ref->second.u / static_cast<double>(ref->second.runs));
        } else {
            row.ratio_to_reference = 1.0;
        }
    }
    return summary;
}

std::string runtime_summary_csv(const RuntimeSummary& summary) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "method,k,runs,mean_u_applications,mean_sprotis_applications,ratio_to_reference,slope,r_min,s_min\n";
    for (const auto& row : summary.rows) {
        out << row.method << ',' << row.k << ',' << row.runs << ',' << row.mean_u_applications << ','
            << row.mean_sprotis_applications << ',' << row.ratio_to_reference << ',' << row.slope << ','
            << row.r_min << ',' << row.s_min << '\n';
    }
    return out.str();
}

}  // namespace sandwich

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

#include <cmath>
#include <sstream>

#include "sandwich/costmodel.hpp"
#include "sandwich/errors.hpp"
#include "sandwich/spectral.hpp"

namespace sandwich {
namespace {

TEST(Depth, HadamardSinglePower) {
    DepthParams p;
    p.n = 8;
    p.t_u = 50.0;
    p.t_w = 0.0;
    p.alpha = 1.0;
    p.k = 1;
    EXPECT_DOUBLE_EQ(depth_hadamard(p), 8 * 50.0);
}

TEST(Depth, HadamardLinearInK) {
    DepthParams p;
    p.t_w = 0.0;
    p.k = 7;
    const double one = depth_hadamard(p);
    p.k = 14;
    EXPECT_DOUBLE_EQ(depth_hadamard(p), 2 * one);
}

TEST(Depth, SandwichAtZeroPower) {
    DepthParams p;
    p.n = 6;
    p.t_u = 20.0;
    p.alpha = 1.0;
    p.beta = 1.0;
    p.sprotis_layers = 1;
    p.k = 0;
    EXPECT_DOUBLE_EQ(depth_sandwich(p), 36.0 + 6 * 20.0);
}

TEST(Depth, RatioGrowsWithQubits) {
    // For k much larger than n the ratio tends to alpha * n.
    for (std::uint64_t n : {4u, 8u, 16u}) {
        DepthParams p;
        p.n = n;
        p.k = 1000000;
        const double ratio = depth_hadamard(p) / depth_sandwich(p);
        EXPECT_NEAR(ratio / (p.alpha * static_cast<double>(n)), 1.0, 1e-3);
    }
}

TEST(Depth, LinearInGateDepth) {
    DepthParams p;
    p.t_w = 0.0;
    p.k = 9;
    const double hadamard = depth_hadamard(p);
    p.t_u *= 3;
    EXPECT_DOUBLE_EQ(depth_hadamard(p), 3 * hadamard);
}

TEST(Depth, SandwichDominatedByPowerForLargeK) {
    DepthParams p;
    p.n = 10;
    p.k = 100000;
    EXPECT_GT(static_cast<double>(p.k) * p.t_u / depth_sandwich(p), 0.99);
}

TEST(Depth, SpatialQubits) {
    DepthParams p;
    p.n = 11;
    EXPECT_EQ(spatial_qubits(p), 12u);
}

TEST(Depth, Validation) {
    DepthParams p;
    EXPECT_NO_THROW(p.validate());
    p.n = 0;
    EXPECT_THROW(p.validate(), ParameterError);
    p = {};
    p.t_u = -1.0;
    EXPECT_THROW(p.validate(), ParameterError);
}

TEST(LogLogSlope, ExactPowerLaw) {
    std::vector<double> xs, ys;
    for (double x = 2; x <= 512; x *= 2) {
        xs.push_back(x);
        ys.push_back(5.0 * x * x * x);
    }
    EXPECT_NEAR(loglog_slope(xs, ys), 3.0, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), ParameterError);
    EXPECT_THROW(loglog_slope({2.0, 2.0}, {1.0, 3.0}), ParameterError);
    EXPECT_THROW(loglog_slope({1.0, 2.0}, {1.0, 0.0}), ParameterError);
}

TEST(RuntimeSummary, IdenticalLedgersGiveUnitRatio) {
    std::vector<RunRecord> records;
    for (std::uint64_t k : {16u, 32u}) {
        for (const char* method : {"sandwich", "sequential"}) {
            records.push_back({method, k, UsageTotals{k * k, k, 0, k}, 0.5, 0.6});
        }
    }
    const RuntimeSummary s = runtime_summary(records, "sequential");
    ASSERT_EQ(s.rows.size(), 4u);
    for (const auto& row : s.rows) {
        EXPECT_DOUBLE_EQ(row.ratio_to_reference, 1.0);
        EXPECT_NEAR(row.slope, 2.0, 1e-12);
    }
}

TEST(RuntimeSummary, AveragesAndMinima) {
    std::vector<RunRecord> records{{"sandwich", 8, {100, 1, 0, 1}, 0.4, 0.9},
                                   {"sandwich", 8, {300, 3, 0, 1}, 0.4, 0.7},
                                   {"hadamard", 8, {50, 0, 0, 1}, 0.4, 1.0}};
    const RuntimeSummary s = runtime_summary(records, "hadamard");
    ASSERT_EQ(s.rows.size(), 2u);
    const auto& row = s.rows[1];
    EXPECT_EQ(row.method, "sandwich");
    EXPECT_EQ(row.runs, 2u);
    EXPECT_DOUBLE_EQ(row.mean_u_applications, 200.0);
    EXPECT_DOUBLE_EQ(row.mean_sprotis_applications, 2.0);
    EXPECT_DOUBLE_EQ(row.ratio_to_reference, 4.0);
    EXPECT_DOUBLE_EQ(row.s_min, 0.7);
    EXPECT_TRUE(std::isnan(row.slope));
}

TEST(RuntimeSummary, RminColumnMatchesExhaustiveScan) {
    const SpectralModel m = generate_model(ModelKind::kClustered, 10, 2);
    std::vector<RunRecord> records;
    for (std::uint64_t k : {10u, 100u, 400u}) {
        double r_min = 1.0;
        for (std::uint64_t j = 1; j <= k; ++j) {
            r_min = std::min(r_min, exact_amplitude(m, j).modulus);
        }
        records.push_back({"sandwich", k, {k, 0, 0, 1}, min_magnitude_up_to(m, k), 1.0});
        EXPECT_EQ(records.back().r_min, r_min);
    }
    const RuntimeSummary s = runtime_summary(records, "sandwich");
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(s.rows[i].r_min, records[i].r_min);
    }
}

TEST(RuntimeSummary, CsvSchema) {
    const RuntimeSummary s = runtime_summary({{"sandwich", 4, {10, 1, 2, 3}, 1.0, 1.0}}, "sandwich");
    std::istringstream csv(runtime_summary_csv(s));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    EXPECT_EQ(header, "method,k,runs,mean_u_applications,mean_sprotis_applications,ratio_to_reference,slope,r_min,s_min");
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 8);
}

}  // namespace
}  // namespace sandwich

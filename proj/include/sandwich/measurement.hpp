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

#include <atomic>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "sandwich/phase.hpp"
#include "sandwich/spectral.hpp"

namespace sandwich {

enum class ShotNoise {
    kSampled,  // Bernoulli sampling
    kExact,    // every estimate equals its expectation; shots are still accounted
};

/// A reproducible random stream addressed by (master seed, path). The sub-seed
/// is a stable hash of the path, so results do not depend on the order in which
/// streams are consumed.
class RngStream {
  public:
    explicit RngStream(std::uint64_t master_seed, ShotNoise noise = ShotNoise::kSampled);

    RngStream child(std::uint64_t index) const;
    RngStream child(std::initializer_list<std::uint64_t> indices) const;

    std::uint64_t master_seed() const { return master_seed_; }
    std::size_t depth() const { return depth_; }
    ShotNoise noise() const { return noise_; }
    bool exact() const { return noise_ == ShotNoise::kExact; }

    std::uint64_t derived_seed() const;
    std::mt19937_64 engine() const { return std::mt19937_64(derived_seed()); }
    /// One uniform draw in [0, 1) taken straight from derived_seed(); cheaper
    /// than seeding an engine when a stream is used once.
    double uniform() const { return static_cast<double>(derived_seed() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t master_seed_;
    std::uint64_t state_;    // running hash of the path
    std::size_t depth_ = 0;  // path length
    ShotNoise noise_;
};

std::uint64_t splitmix64(std::uint64_t x);

struct UsageTotals {
    std::uint64_t u_applications = 0;
    std::uint64_t sprotis_applications = 0;
    // W or W^dagger applications (state preparation and un-preparation). Kept
    // out of the headline run-time totals.
    std::uint64_t w_applications = 0;
    std::uint64_t shots = 0;

    UsageTotals& operator+=(const UsageTotals& other);
    bool operator==(const UsageTotals&) const = default;
};

/// Thread-safe, monotone accumulation of resource usage.
class UsageLedger {
  public:
    UsageLedger() = default;
    UsageLedger(const UsageLedger&) = delete;
    UsageLedger& operator=(const UsageLedger&) = delete;

    void record(const UsageTotals& delta);
    UsageTotals totals() const;

  private:
    std::atomic<std::uint64_t> u_applications_{0};
    std::atomic<std::uint64_t> sprotis_applications_{0};
    std::atomic<std::uint64_t> w_applications_{0};
    std::atomic<std::uint64_t> shots_{0};
};

/// Operator whose overlap with |psi> is measured: U^k, the sandwich
/// U^a R_psi^phi U^b, or the two-layer U^a R_psi^phi U^b R_psi^phi2 U^c.
struct MeasuredOperator {
    enum class Kind { kPower, kSandwich, kTwoLayer };

    Kind kind = Kind::kPower;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    double phi = 0.0;
    double phi2 = 0.0;

    static MeasuredOperator power(std::uint64_t k) { return {Kind::kPower, k, 0, 0, 0.0, 0.0}; }
    static MeasuredOperator sandwich(std::uint64_t a, std::uint64_t b, double phi) {
        return {Kind::kSandwich, a, b, 0, phi, 0.0};
    }
    static MeasuredOperator two_layer(std::uint64_t a, std::uint64_t b, std::uint64_t c, double phi1, double phi2) {
        return {Kind::kTwoLayer, a, b, c, phi1, phi2};
    }

    std::uint64_t u_power() const { return a + b + c; }
    std::uint64_t sprotis_count() const;
    double true_magnitude(const SpectralModel& model) const;
};

/// Fraction of `shots` projective measurements onto |psi><psi| that succeed,
/// each with probability |<psi|V|psi>|^2.
double sample_overlap_probability(const SpectralModel& model, const MeasuredOperator& op, std::uint64_t shots,
                                  const RngStream& rng, UsageLedger& ledger);

/// sqrt of the success fraction. Biased upward by O(1/(r shots)) for small samples.
double estimate_magnitude(const SpectralModel& model, const MeasuredOperator& op, std::uint64_t shots,
                          const RngStream& rng, UsageLedger& ledger);

/// Hadamard test of <psi|U^power|psi>. ceil(shots/2) shots go to the real part,
/// the rest to the imaginary part. power = 0 is answered exactly.
Amplitude hadamard_test_estimate(const SpectralModel& model, std::uint64_t power, std::uint64_t shots,
                                 const RngStream& rng, UsageLedger& ledger);

}  // namespace sandwich

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

#include "sandwich/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "sandwich/errors.hpp"

namespace sandwich {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, ShotNoise noise)
    : master_seed_(master_seed), state_(splitmix64(master_seed)), noise_(noise) {}

RngStream RngStream::child(std::uint64_t index) const {
    RngStream out = *this;
    out.state_ = splitmix64(state_ ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    ++out.depth_;
    return out;
}

RngStream RngStream::child(std::initializer_list<std::uint64_t> indices) const {
    RngStream out = *this;
    for (std::uint64_t index : indices) {
        out = out.child(index);
    }
    return out;
}

std::uint64_t RngStream::derived_seed() const {
    // Mixing the depth in keeps {1, 0} and {1} distinct from {1, 0, 0}.
    return splitmix64(state_ ^ depth_);
}

UsageTotals& UsageTotals::operator+=(const UsageTotals& other) {
    u_applications += other.u_applications;
    sprotis_applications += other.sprotis_applications;
    w_applications += other.w_applications;
    shots += other.shots;
    return *this;
}

void UsageLedger::record(const UsageTotals& delta) {
    u_applications_.fetch_add(delta.u_applications, std::memory_order_relaxed);
    sprotis_applications_.fetch_add(delta.sprotis_applications, std::memory_order_relaxed);
    w_applications_.fetch_add(delta.w_applications, std::memory_order_relaxed);
    shots_.fetch_add(delta.shots, std::memory_order_relaxed);
}

UsageTotals UsageLedger::totals() const {
    return UsageTotals{
        u_applications_.load(std::memory_order_relaxed),
        sprotis_applications_.load(std::memory_order_relaxed),
        w_applications_.load(std::memory_order_relaxed),
        shots_.load(std::memory_order_relaxed),
    };
}

std::uint64_t MeasuredOperator::sprotis_count() const {
    switch (kind) {
        case Kind::kPower:
            return 0;
        case Kind::kSandwich:
            return 1;
        case Kind::kTwoLayer:
            return 2;
    }
    return 0;
}

double MeasuredOperator::true_magnitude(const SpectralModel& model) const {
    switch (kind) {
        case Kind::kPower:
            return exact_amplitude(model, a).modulus;
        case Kind::kSandwich:
            return exact_sandwich_magnitude(model, a, b, PhaseAngle(phi));
        case Kind::kTwoLayer:
            return std::abs(two_layer_overlap(exact_amplitude(model, a), exact_amplitude(model, b),
                                              exact_amplitude(model, c), exact_amplitude(model, a + b),
                                              exact_amplitude(model, b + c), exact_amplitude(model, a + b + c), phi,
                                              phi2));
    }
    return 0.0;
}

namespace {

// Success count of `shots` Bernoulli(p) trials. p is clamped to [0, 1].
std::uint64_t draw_successes(double p, std::uint64_t shots, const RngStream& rng) {
    p = std::clamp(p, 0.0, 1.0);
    if (p == 0.0) {
        return 0;
    }
    if (p == 1.0) {
        return shots;
    }
    auto gen = rng.engine();
    std::binomial_distribution<std::uint64_t> binomial(shots, p);
    return binomial(gen);
}

}  // namespace

double sample_overlap_probability(const SpectralModel& model, const MeasuredOperator& op, std::uint64_t shots,
                                  const RngStream& rng, UsageLedger& ledger) {
    if (shots < 1) {
        throw ParameterError("sample_overlap_probability needs at least one shot");
    }
    const double magnitude = op.true_magnitude(model);
    const double p = std::clamp(magnitude * magnitude, 0.0, 1.0);

    UsageTotals usage;
    usage.shots = shots;
    usage.u_applications = shots * op.u_power();
    // W to prepare, W^dagger to measure; each SPROTIS is W R_0 W^dagger.
    usage.w_applications = 2 * shots;
    usage.sprotis_applications = shots * op.sprotis_count();
    usage.w_applications += 2 * usage.sprotis_applications;
    ledger.record(usage);

    if (rng.exact()) {
        return p;
    }
    return static_cast<double>(draw_successes(p, shots, rng)) / static_cast<double>(shots);
}

double estimate_magnitude(const SpectralModel& model, const MeasuredOperator& op, std::uint64_t shots,
                          const RngStream& rng, UsageLedger& ledger) {
    return std::sqrt(std::max(sample_overlap_probability(model, op, shots, rng, ledger), 0.0));
}

Amplitude hadamard_test_estimate(const SpectralModel& model, std::uint64_t power, std::uint64_t shots,
                                 const RngStream& rng, UsageLedger& ledger) {
    if (shots < 2) {
        throw ParameterError("hadamard test needs at least two shots");
    }
    UsageTotals usage;
    usage.shots = shots;
    usage.u_applications = shots * power;
    usage.w_applications = shots;
    ledger.record(usage);

    if (power == 0) {
        return Amplitude{};
    }
    const Amplitude truth = exact_amplitude(model, power);
    if (rng.exact()) {
        return truth;
    }
    const auto z = truth.value();
    const std::uint64_t shots_re = shots - shots / 2;
    const std::uint64_t shots_im = shots / 2;
    // P(control = 0) = (1 + Re z) / 2; the S^dagger variant gives (1 + Im z) / 2.
    const double f_re =
        static_cast<double>(draw_successes((1.0 + z.real()) / 2.0, shots_re, rng.child(0))) / static_cast<double>(shots_re);
    const double f_im =
        static_cast<double>(draw_successes((1.0 + z.imag()) / 2.0, shots_im, rng.child(1))) / static_cast<double>(shots_im);
    const double re = 2.0 * f_re - 1.0;
    const double im = 2.0 * f_im - 1.0;

    Amplitude estimate = Amplitude::from_complex({re, im});
    estimate.modulus = std::min(estimate.modulus, 1.0);
    return estimate;
}

}  // namespace sandwich

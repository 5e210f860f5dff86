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

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sandwich/phase.hpp"

namespace sandwich {

/// Polar form r e^{i theta} of an overlap <psi|V|psi>.
///
/// When the modulus is numerically zero the argument is undefined; it is then
/// reported as 0 and `degenerate` is set, and callers must branch on the flag.
struct Amplitude {
    double modulus = 1.0;
    double argument = 0.0;
    bool degenerate = false;

    static constexpr double kDegenerateModulus = 1e-12;

    static Amplitude from_complex(std::complex<double> z);
    std::complex<double> value() const { return std::polar(modulus, argument); }
};

/// Eigen-decomposition of the (U, |psi>) pair: U = sum_j e^{i lambda_j} |E_j><E_j|
/// and weights p_j = |<E_j|psi>|^2. Every overlap the estimators consume is closed
/// form in this basis.
class SpectralModel {
  public:
    static constexpr double kWeightSumTolerance = 1e-12;

    /// Throws ParameterError unless both arrays are nonempty, of equal length,
    /// weights are nonnegative and sum to 1 within kWeightSumTolerance.
    /// Eigenphases are canonicalized to [-pi, pi).
    SpectralModel(std::vector<double> eigenphases, std::vector<double> weights, std::string label = {});

    const std::vector<double>& eigenphases() const { return eigenphases_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::string& label() const { return label_; }
    std::size_t levels() const { return weights_.size(); }

    /// The model of U^dagger (eigenphases negated).
    SpectralModel reflected() const;

    bool operator==(const SpectralModel&) const = default;

  private:
    std::vector<double> eigenphases_;
    std::vector<double> weights_;
    std::string label_;
};

/// <psi|U^k|psi> = sum_j p_j e^{i k lambda_j}. k = 0 returns (1, 0) exactly.
Amplitude exact_amplitude(const SpectralModel& model, std::uint64_t k);

/// Closed-form |<psi|U^a R_psi^phi U^b|psi>| from the three overlaps, with
/// omega = theta_a + theta_b - theta_{a+b} + phi:
///   sqrt(r_ab^2 + 4 r_a^2 r_b^2 sin^2 phi - 4 r_ab r_a r_b sin phi sin omega).
double sandwich_magnitude(const Amplitude& amp_a, const Amplitude& amp_b, const Amplitude& amp_ab, double phi);

double exact_sandwich_magnitude(const SpectralModel& model, std::uint64_t a, std::uint64_t b, PhaseAngle phi);

/// Signed complex overlap of the two-layer operator U^a R^{phi1} U^b R^{phi2} U^c,
/// expanded as the four-term sum over the overlaps.
std::complex<double> two_layer_overlap(const Amplitude& amp_a, const Amplitude& amp_b, const Amplitude& amp_c,
                                       const Amplitude& amp_ab, const Amplitude& amp_bc, const Amplitude& amp_abc,
                                       double phi1, double phi2);

/// Selective phase rotation factor Phi = e^{2 i phi} - 1.
inline std::complex<double> sprotis_factor(double phi) {
    return std::polar(1.0, 2.0 * phi) - 1.0;
}

/// min_{1 <= k' <= k} r_{k'}: the exhaustive scan used as r_min.
double min_magnitude_up_to(const SpectralModel& model, std::uint64_t k);

/// r_0 .. r_kmax, used by diagnostics that repeatedly look up magnitudes.
std::vector<double> magnitude_table(const SpectralModel& model, std::uint64_t kmax);

enum class ModelKind { kTwoLevel, kClustered, kUniformRandom, kGroundDominated };

ModelKind parse_model_kind(std::string_view name);
std::string_view model_kind_name(ModelKind kind);

/// Knobs for generate_model. Each kind reads only the fields it needs:
///   two_level        gap, ground_weight (size must be 2)
///   clustered        center, width
///   uniform_random   (none)
///   ground_dominated eta
struct GeneratorParams {
    double gap = kPi / 2;
    double ground_weight = 0.5;
    double center = 0.0;
    double width = 0.2;
    double eta = 0.8;

    bool operator==(const GeneratorParams&) const = default;
};

/// Deterministic for fixed (kind, size, seed, params).
SpectralModel generate_model(ModelKind kind, std::size_t size, std::uint64_t seed, const GeneratorParams& params = {});

nlohmann::json model_to_json(const SpectralModel& model);
SpectralModel model_from_json(const nlohmann::json& j);

void save_model(const SpectralModel& model, const std::filesystem::path& path);
SpectralModel load_model(const std::filesystem::path& path);

}  // namespace sandwich

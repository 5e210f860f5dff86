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

#include "sandwich/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sandwich/errors.hpp"
#include "sandwich/measurement.hpp"

namespace sandwich {

Amplitude Amplitude::from_complex(std::complex<double> z) {
    Amplitude amp;
    amp.modulus = std::abs(z);
    if (amp.modulus < kDegenerateModulus) {
        amp.argument = 0.0;
        amp.degenerate = true;
    } else {
        amp.argument = canonical_angle(std::arg(z));
    }
    return amp;
}

SpectralModel::SpectralModel(std::vector<double> eigenphases, std::vector<double> weights, std::string label)
    : eigenphases_(std::move(eigenphases)), weights_(std::move(weights)), label_(std::move(label)) {
    if (weights_.empty()) {
        throw ParameterError("spectral model needs at least one level");
    }
    if (eigenphases_.size() != weights_.size()) {
        throw ParameterError("spectral model has " + std::to_string(eigenphases_.size()) + " eigenphases but " +
                             std::to_string(weights_.size()) + " weights");
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ParameterError("spectral model weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "spectral model weights sum to " << sum << ", expected 1";
        throw ParameterError(msg.str());
    }
    for (double& phase : eigenphases_) {
        if (!std::isfinite(phase)) {
            throw ParameterError("spectral model eigenphases must be finite");
        }
        phase = canonical_angle(phase);
    }
}

SpectralModel SpectralModel::reflected() const {
    std::vector<double> negated(eigenphases_.size());
    std::transform(eigenphases_.begin(), eigenphases_.end(), negated.begin(), [](double x) { return -x; });
    return SpectralModel(std::move(negated), weights_, label_);
}

Amplitude exact_amplitude(const SpectralModel& model, std::uint64_t k) {
    if (k == 0) {
        return Amplitude{};
    }
    const auto& phases = model.eigenphases();
    const auto& weights = model.weights();
    const double kd = static_cast<double>(k);
    std::complex<double> sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        sum += std::polar(weights[j], canonical_angle(kd * phases[j]));
    }
    Amplitude amp = Amplitude::from_complex(sum);
    amp.modulus = std::min(amp.modulus, 1.0);
    return amp;
}

double sandwich_magnitude(const Amplitude& amp_a, const Amplitude& amp_b, const Amplitude& amp_ab, double phi) {
    // |r_ab + 2 r_a r_b sin(phi) e^{i(omega + pi/2)}|, which expands to the
    // square-root form without ever going negative under rounding.
    const double omega = amp_a.argument + amp_b.argument - amp_ab.argument + phi;
    const double cross = 2.0 * amp_a.modulus * amp_b.modulus * std::sin(phi);
    return std::hypot(amp_ab.modulus - cross * std::sin(omega), cross * std::cos(omega));
}

double exact_sandwich_magnitude(const SpectralModel& model, std::uint64_t a, std::uint64_t b, PhaseAngle phi) {
    return sandwich_magnitude(exact_amplitude(model, a), exact_amplitude(model, b), exact_amplitude(model, a + b),
                              phi.radians());
}

std::complex<double> two_layer_overlap(const Amplitude& amp_a, const Amplitude& amp_b, const Amplitude& amp_c,
                                       const Amplitude& amp_ab, const Amplitude& amp_bc, const Amplitude& amp_abc,
                                       double phi1, double phi2) {
    const auto big_phi1 = sprotis_factor(phi1);
    const auto big_phi2 = sprotis_factor(phi2);
    return amp_abc.value() + big_phi1 * amp_a.value() * amp_bc.value() + big_phi2 * amp_ab.value() * amp_c.value() +
           big_phi1 * big_phi2 * amp_a.value() * amp_b.value() * amp_c.value();
}

double min_magnitude_up_to(const SpectralModel& model, std::uint64_t k) {
    double r_min = 1.0;
    for (std::uint64_t kp = 1; kp <= k; ++kp) {
        r_min = std::min(r_min, exact_amplitude(model, kp).modulus);
    }
    return r_min;
}

std::vector<double> magnitude_table(const SpectralModel& model, std::uint64_t kmax) {
    std::vector<double> table(kmax + 1);
    for (std::uint64_t kp = 0; kp <= kmax; ++kp) {
        table[kp] = exact_amplitude(model, kp).modulus;
    }
    return table;
}

namespace {

constexpr std::pair<ModelKind, std::string_view> kKindNames[] = {
    {ModelKind::kTwoLevel, "two-level"},
    {ModelKind::kClustered, "clustered"},
    {ModelKind::kUniformRandom, "uniform-random"},
    {ModelKind::kGroundDominated, "ground-dominated"},
};

std::vector<double> normalized(std::vector<double> w) {
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) {
        x /= sum;
    }
    return w;
}

// Uniform weights in (0, 1], normalized.
std::vector<double> random_weights(std::size_t count, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(count);
    for (double& x : w) {
        x = 1.0 - unit(gen);
    }
    return normalized(std::move(w));
}

std::vector<double> random_phases(std::size_t count, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::vector<double> phases(count);
    for (double& x : phases) {
        x = angle(gen);
    }
    return phases;
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
    for (const auto& [kind, text] : kKindNames) {
        if (text == name) {
            return kind;
        }
    }
    // Accept underscores as well.
    std::string dashed(name);
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    for (const auto& [kind, text] : kKindNames) {
        if (text == dashed) {
            return kind;
        }
    }
    throw ParameterError("unknown model kind '" + std::string(name) + "'");
}

std::string_view model_kind_name(ModelKind kind) {
    for (const auto& [k, text] : kKindNames) {
        if (k == kind) {
            return text;
        }
    }
    return "unknown";
}

SpectralModel generate_model(ModelKind kind, std::size_t size, std::uint64_t seed, const GeneratorParams& params) {
    if (size < 1) {
        throw ParameterError("model size must be at least 1");
    }
    std::mt19937_64 gen(splitmix64(seed ^ (static_cast<std::uint64_t>(kind) << 56)));
    std::string label(model_kind_name(kind));

    switch (kind) {
        case ModelKind::kTwoLevel: {
            if (size != 2) {
                throw ParameterError("two-level model needs size 2");
            }
            if (!(params.ground_weight > 0.0 && params.ground_weight < 1.0)) {
                throw ParameterError("two-level ground_weight must be in (0, 1)");
            }
            if (!std::isfinite(params.gap)) {
                throw ParameterError("two-level gap must be finite");
            }
            return SpectralModel({0.0, params.gap}, {params.ground_weight, 1.0 - params.ground_weight}, label);
        }
        case ModelKind::kClustered: {
            if (!(params.width >= 0.0) || !std::isfinite(params.center)) {
                throw ParameterError("clustered model needs finite center and width >= 0");
            }
            std::normal_distribution<double> spread(params.center, params.width);
            std::vector<double> phases(size);
            for (double& x : phases) {
                x = spread(gen);
            }
            auto weights = random_weights(size, gen);
            return SpectralModel(std::move(phases), std::move(weights), label);
        }
        case ModelKind::kUniformRandom: {
            auto phases = random_phases(size, gen);
            auto weights = random_weights(size, gen);
            return SpectralModel(std::move(phases), std::move(weights), label);
        }
        case ModelKind::kGroundDominated: {
            if (!(params.eta > 0.0 && params.eta <= 1.0)) {
                throw ParameterError("ground-dominated eta must be in (0, 1]");
            }
            if (size == 1 && params.eta != 1.0) {
                throw ParameterError("ground-dominated model of size 1 needs eta = 1");
            }
            auto phases = random_phases(size, gen);
            std::vector<double> weights(size, 0.0);
            weights[0] = params.eta;
            if (size > 1) {
                auto rest = random_weights(size - 1, gen);
                for (std::size_t j = 1; j < size; ++j) {
                    weights[j] = (1.0 - params.eta) * rest[j - 1];
                }
            }
            return SpectralModel(std::move(phases), std::move(weights), label);
        }
    }
    throw ParameterError("unhandled model kind");
}

nlohmann::json model_to_json(const SpectralModel& model) {
    return nlohmann::json{
        {"label", model.label()},
        {"eigenphases", model.eigenphases()},
        {"weights", model.weights()},
    };
}

SpectralModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) {
            throw FileFormatError("model must be a JSON object");
        }
        auto phases = j.at("eigenphases").get<std::vector<double>>();
        auto weights = j.at("weights").get<std::vector<double>>();
        std::string label = j.value("label", std::string{});
        return SpectralModel(std::move(phases), std::move(weights), std::move(label));
    } catch (const nlohmann::json::exception& e) {
        throw FileFormatError(std::string("malformed model: ") + e.what());
    } catch (const ParameterError& e) {
        throw FileFormatError(std::string("invalid model: ") + e.what());
    }
}

void save_model(const SpectralModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FileFormatError("cannot write model file " + path.string());
    }
    out << model_to_json(model).dump(2) << '\n';
    if (!out) {
        throw FileFormatError("failed writing model file " + path.string());
    }
}

SpectralModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileFormatError("cannot open model file " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FileFormatError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace sandwich

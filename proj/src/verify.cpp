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

#include "sandwich/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sandwich/dense_oracle.hpp"
#include "sandwich/measurement.hpp"
#include "sandwich/spectral.hpp"

namespace sandwich::dense {

bool OracleReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.passed; });
}

double closed_form_sandwich(std::complex<double> z_a, std::complex<double> z_b, std::complex<double> z_ab, double phi,
                            double cross_sign) {
    const double r_a = std::abs(z_a);
    const double r_b = std::abs(z_b);
    const double r_ab = std::abs(z_ab);
    const double omega = std::arg(z_a) + std::arg(z_b) - std::arg(z_ab) + phi;
    const double sin_phi = std::sin(phi);
    const double squared = r_ab * r_ab + 4.0 * r_a * r_a * r_b * r_b * sin_phi * sin_phi -
                           cross_sign * 4.0 * r_ab * r_a * r_b * sin_phi * std::sin(omega);
    return std::sqrt(std::max(squared, 0.0));
}

namespace {

void record(OracleCheck& check, double error) {
    ++check.cases;
    check.max_error = std::max(check.max_error, error);
    if (!(error <= check.tolerance)) {
        check.passed = false;
    }
}

}  // namespace

OracleReport run_oracle_checks(int qubits, unsigned seeds, bool inject_fault) {
    OracleCheck identity{"sandwich_identity", 0, 0.0, 1e-10, true};
    OracleCheck spectral_sandwich{"spectral_sandwich_magnitude", 0, 0.0, 1e-10, true};
    OracleCheck unitary{"sprotis_unitary", 0, 0.0, kUnitaryTolerance, true};
    OracleCheck eigen_action{"sprotis_eigen_action", 0, 0.0, 1e-10, true};
    OracleCheck spectralize_check{"spectralize_amplitudes", 0, 0.0, 1e-10, true};
    OracleCheck two_layer{"two_layer_expansion", 0, 0.0, 1e-10, true};
    const double cross_sign = inject_fault ? -1.0 : 1.0;

    for (unsigned seed = 0; seed < seeds; ++seed) {
        const auto [u, psi] = random_dense_instance(qubits, seed);
        std::mt19937_64 gen(splitmix64(seed + 0x7e57));
        std::uniform_int_distribution<int> power(0, 8);
        std::uniform_real_distribution<double> angle(-kPi, kPi);

        const SpectralModel model = spectralize(u, psi);
        // Dense overlaps <psi|U^j|psi>, j <= 64, by one power iteration.
        std::vector<std::complex<double>> overlaps;
        {
            Vector v = psi.amplitudes();
            for (int j = 0; j <= 64; ++j) {
                overlaps.push_back(psi.amplitudes().dot(v));
                v = u.entries() * v;
            }
        }
        for (int j = 0; j <= 64; ++j) {
            const auto spectral = exact_amplitude(model, static_cast<std::uint64_t>(j)).value();
            record(spectralize_check, std::abs(spectral - overlaps[static_cast<std::size_t>(j)]));
        }

        for (int t = 0; t < 5; ++t) {
            const int a = power(gen);
            const int b = power(gen);
            const double phi = angle(gen);
            const double dense = std::abs(sandwich_matrix(u, psi, a, b, PhaseAngle(phi)));
            const double closed = closed_form_sandwich(overlaps[a], overlaps[b], overlaps[a + b], phi, cross_sign);
            record(identity, std::abs(dense - closed));
            record(spectral_sandwich,
                   std::abs(dense - exact_sandwich_magnitude(model, a, b, PhaseAngle(phi))));

            const int c = power(gen);
            const double phi2 = angle(gen);
            const double dense2 = std::abs(two_layer_matrix(u, psi, a, b, c, PhaseAngle(phi), PhaseAngle(phi2)));
            auto amp = [&](int j) { return Amplitude::from_complex(overlaps[j]); };
            const double expanded =
                std::abs(two_layer_overlap(amp(a), amp(b), amp(c), amp(a + b), amp(b + c), amp(a + b + c), phi, phi2));
            record(two_layer, std::abs(dense2 - expanded));
        }

        const double phi = angle(gen);
        const DenseUnitary r = sprotis(psi, PhaseAngle(phi));
        record(unitary, unitarity_defect(r.entries(), seed));
        const Vector& p = psi.amplitudes();
        record(eigen_action, (r.entries() * p - std::polar(1.0, 2.0 * phi) * p).norm());
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector perp(p.size());
        for (Eigen::Index i = 0; i < perp.size(); ++i) {
            perp[i] = {normal(gen), normal(gen)};
        }
        perp -= p * p.dot(perp);
        perp.normalize();
        record(eigen_action, (r.entries() * perp - perp).norm());
    }
    return OracleReport{{identity, spectral_sandwich, unitary, eigen_action, spectralize_check, two_layer}};
}

}  // namespace sandwich::dense

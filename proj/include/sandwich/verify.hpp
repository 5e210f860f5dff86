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
#include <string>
#include <vector>

namespace sandwich::dense {

struct OracleCheck {
    std::string name;
    std::size_t cases = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

struct OracleReport {
    std::vector<OracleCheck> checks;

    bool passed() const;
};

/// Dense-matrix equivalence suite over `seeds` random instances of `qubits`
/// qubits: the sandwich magnitude identity, SPROTIS unitarity and eigen-action,
/// spectralize against dense powers (k <= 64) and the two-layer expansion.
/// `inject_fault` flips the sign of the cross term in the closed form, which the
/// suite must detect.
OracleReport run_oracle_checks(int qubits, unsigned seeds, bool inject_fault = false);

/// Closed form sqrt(r_ab^2 + 4 r_a^2 r_b^2 sin^2 phi - 4 r_ab r_a r_b sin phi sin omega)
/// from complex overlaps. `cross_sign` = -1 gives the faulty variant.
double closed_form_sandwich(std::complex<double> z_a, std::complex<double> z_b, std::complex<double> z_ab, double phi,
                            double cross_sign = 1.0);

}  // namespace sandwich::dense

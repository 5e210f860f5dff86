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
#include <utility>

#include <Eigen/Dense>

#include "sandwich/phase.hpp"
#include "sandwich/spectral.hpp"

namespace sandwich::dense {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kMaxQubits = 12;
inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kUnitaryTolerance = 1e-8;
inline constexpr double kMergeTolerance = 1e-9;

/// Normalized state vector of n qubits.
class DenseState {
  public:
    /// Throws ParameterError if the dimension is not 2^n with 1 <= n <= 12 or the
    /// norm differs from 1 by more than kNormTolerance.
    explicit DenseState(Vector amplitudes);

    const Vector& amplitudes() const { return amplitudes_; }
    int qubits() const { return qubits_; }
    Eigen::Index dim() const { return amplitudes_.size(); }

  private:
    Vector amplitudes_;
    int qubits_;
};

/// 2^n x 2^n unitary. Unitarity is spot-checked on construction by applying
/// U^dagger U to a fixed pseudo-random vector.
class DenseUnitary {
  public:
    explicit DenseUnitary(Matrix entries);

    const Matrix& entries() const { return entries_; }
    int qubits() const { return qubits_; }
    Eigen::Index dim() const { return entries_.rows(); }

  private:
    Matrix entries_;
    int qubits_;
};

/// ||U^dagger U v - v|| for a seeded random unit vector v.
double unitarity_defect(const Matrix& u, std::uint64_t seed = 0x5eed);

/// R_psi^phi = 1 + (e^{2 i phi} - 1)|psi><psi|, built as a rank-one update.
DenseUnitary sprotis(const DenseState& psi, PhaseAngle phi);

/// <psi|U^power|psi> by repeated matrix-vector products.
std::complex<double> power_overlap(const DenseUnitary& u, const DenseState& psi, std::uint64_t power);

/// <psi|U^a R_psi^phi U^b|psi> with the SPROTIS matrix applied explicitly.
std::complex<double> sandwich_matrix(const DenseUnitary& u, const DenseState& psi, std::uint64_t a, std::uint64_t b,
                                     PhaseAngle phi);

/// <psi|U^a R^{phi1} U^b R^{phi2} U^c|psi>.
std::complex<double> two_layer_matrix(const DenseUnitary& u, const DenseState& psi, std::uint64_t a, std::uint64_t b,
                                      std::uint64_t c, PhaseAngle phi1, PhaseAngle phi2);

/// Eigenphases of U with weights |<E_j|psi>|^2, via a Schur decomposition
/// (orthonormal even for degenerate spectra). Levels closer than kMergeTolerance
/// are merged by adding weights.
SpectralModel spectralize(const DenseUnitary& u, const DenseState& psi);

/// Haar-like unitary (QR of a complex Gaussian matrix with phase-fixed R) and a
/// random normalized state. Deterministic per seed.
std::pair<DenseUnitary, DenseState> random_dense_instance(int qubits, std::uint64_t seed);

}  // namespace sandwich::dense

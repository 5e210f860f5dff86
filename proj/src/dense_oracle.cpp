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

#include "sandwich/dense_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sandwich/errors.hpp"
#include "sandwich/measurement.hpp"

namespace sandwich::dense {

namespace {

int qubits_for_dim(Eigen::Index dim) {
    for (int n = 1; n <= kMaxQubits; ++n) {
        if (dim == (Eigen::Index{1} << n)) {
            return n;
        }
    }
    throw ParameterError("dimension " + std::to_string(dim) + " is not 2^n with 1 <= n <= 12");
}

Vector gaussian_vector(Eigen::Index dim, std::mt19937_64& gen) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        v[i] = {normal(gen), normal(gen)};
    }
    return v;
}

}  // namespace

DenseState::DenseState(Vector amplitudes) : amplitudes_(std::move(amplitudes)), qubits_(qubits_for_dim(amplitudes_.size())) {
    if (std::abs(amplitudes_.norm() - 1.0) > kNormTolerance) {
        throw ParameterError("dense state is not normalized");
    }
}

double unitarity_defect(const Matrix& u, std::uint64_t seed) {
    std::mt19937_64 gen(splitmix64(seed));
    Vector v = gaussian_vector(u.cols(), gen);
    v.normalize();
    return (u.adjoint() * (u * v) - v).norm();
}

DenseUnitary::DenseUnitary(Matrix entries) : entries_(std::move(entries)), qubits_(0) {
    if (entries_.rows() != entries_.cols()) {
        throw ParameterError("unitary must be square");
    }
    qubits_ = qubits_for_dim(entries_.rows());
    if (unitarity_defect(entries_) > kUnitaryTolerance) {
        throw ParameterError("matrix is not unitary within tolerance");
    }
}

DenseUnitary sprotis(const DenseState& psi, PhaseAngle phi) {
    const Vector& v = psi.amplitudes();
    Matrix r = Matrix::Identity(v.size(), v.size());
    r += sprotis_factor(phi.radians()) * (v * v.adjoint());
    return DenseUnitary(std::move(r));
}

namespace {

void check_dims(const DenseUnitary& u, const DenseState& psi) {
    if (u.dim() != psi.dim()) {
        throw ParameterError("unitary and state dimensions differ");
    }
}

Vector apply_power(const Matrix& u, Vector v, std::uint64_t power) {
    for (std::uint64_t i = 0; i < power; ++i) {
        v = u * v;
    }
    return v;
}

}  // namespace

std::complex<double> power_overlap(const DenseUnitary& u, const DenseState& psi, std::uint64_t power) {
    check_dims(u, psi);
    return psi.amplitudes().dot(apply_power(u.entries(), psi.amplitudes(), power));
}

std::complex<double> sandwich_matrix(const DenseUnitary& u, const DenseState& psi, std::uint64_t a, std::uint64_t b,
                                     PhaseAngle phi) {
    check_dims(u, psi);
    const Matrix r = sprotis(psi, phi).entries();
    Vector v = apply_power(u.entries(), psi.amplitudes(), b);
    v = r * v;
    v = apply_power(u.entries(), std::move(v), a);
    return psi.amplitudes().dot(v);
}

std::complex<double> two_layer_matrix(const DenseUnitary& u, const DenseState& psi, std::uint64_t a, std::uint64_t b,
                                      std::uint64_t c, PhaseAngle phi1, PhaseAngle phi2) {
    check_dims(u, psi);
    const Matrix r1 = sprotis(psi, phi1).entries();
    const Matrix r2 = sprotis(psi, phi2).entries();
    Vector v = apply_power(u.entries(), psi.amplitudes(), c);
    v = r2 * v;
    v = apply_power(u.entries(), std::move(v), b);
    v = r1 * v;
    v = apply_power(u.entries(), std::move(v), a);
    return psi.amplitudes().dot(v);
}

SpectralModel spectralize(const DenseUnitary& u, const DenseState& psi) {
    check_dims(u, psi);
    Eigen::ComplexSchur<Matrix> schur(u.entries());
    if (schur.info() != Eigen::Success) {
        throw ParameterError("Schur decomposition failed");
    }
    const Matrix& t = schur.matrixT();
    const Vector overlaps = schur.matrixU().adjoint() * psi.amplitudes();

    std::vector<std::pair<double, double>> levels;
    levels.reserve(static_cast<std::size_t>(t.rows()));
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        levels.emplace_back(canonical_angle(std::arg(t(i, i))), std::norm(overlaps[i]));
    }
    std::sort(levels.begin(), levels.end());

    std::vector<double> phases;
    std::vector<double> weights;
    for (const auto& [phase, weight] : levels) {
        if (!phases.empty() && angular_distance(phase, phases.back()) <= kMergeTolerance) {
            weights.back() += weight;
        } else {
            phases.push_back(phase);
            weights.push_back(weight);
        }
    }
    // The sorted list wraps at -pi/pi.
    if (phases.size() > 1 && angular_distance(phases.front(), phases.back()) <= kMergeTolerance) {
        weights.front() += weights.back();
        phases.pop_back();
        weights.pop_back();
    }
    double sum = 0.0;
    for (double w : weights) {
        sum += w;
    }
    for (double& w : weights) {
        w /= sum;
    }
    return SpectralModel(std::move(phases), std::move(weights), "spectralized");
}

std::pair<DenseUnitary, DenseState> random_dense_instance(int qubits, std::uint64_t seed) {
    if (qubits < 1 || qubits > kMaxQubits) {
        throw ParameterError("dense instance needs 1 <= n <= 12 qubits");
    }
    const Eigen::Index dim = Eigen::Index{1} << qubits;
    std::mt19937_64 gen(splitmix64(seed ^ 0xd3a5e0ULL));
    Matrix g(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        g.col(j) = gaussian_vector(dim, gen);
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const std::complex<double> d = r(j, j);
        q.col(j) *= d / std::abs(d);
    }
    Vector psi = gaussian_vector(dim, gen);
    psi.normalize();
    return {DenseUnitary(std::move(q)), DenseState(std::move(psi))};
}

}  // namespace sandwich::dense

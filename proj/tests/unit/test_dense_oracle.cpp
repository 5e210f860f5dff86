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
#include <complex>

#include "sandwich/dense_oracle.hpp"
#include "sandwich/errors.hpp"
#include "sandwich/verify.hpp"

namespace sandwich::dense {
namespace {

using cplx = std::complex<double>;

DenseState uniform_state(int qubits) {
    const Eigen::Index dim = Eigen::Index{1} << qubits;
    return DenseState(Vector::Constant(dim, cplx(1.0 / std::sqrt(static_cast<double>(dim)), 0.0)));
}

TEST(DenseState, Validation) {
    EXPECT_THROW(DenseState(Vector::Zero(3)), ParameterError);
    Vector v = Vector::Zero(4);
    v(0) = 2.0;
    EXPECT_THROW(DenseState{v}, ParameterError);
    v(0) = 1.0;
    EXPECT_NO_THROW(DenseState{v});
}

TEST(DenseUnitary, RejectsNonUnitary) {
    Matrix m = Matrix::Identity(4, 4);
    m(0, 1) = 0.5;
    EXPECT_THROW(DenseUnitary{m}, ParameterError);
    EXPECT_THROW(DenseUnitary(Matrix::Identity(3, 3)), ParameterError);
}

TEST(Sprotis, ZeroAngleIsIdentity) {
    const auto [u, psi] = random_dense_instance(3, 1);
    EXPECT_LT((sprotis(psi, PhaseAngle(0.0)).entries() - Matrix::Identity(8, 8)).norm(), 1e-14);
}

TEST(Sprotis, RightAngleIsSelectiveInversion) {
    const auto [u, psi] = random_dense_instance(2, 2);
    const Vector& v = psi.amplitudes();
    const Matrix expected = Matrix::Identity(4, 4) - 2.0 * v * v.adjoint();
    EXPECT_LT((sprotis(psi, PhaseAngle(kPi / 2)).entries() - expected).norm(), 1e-14);
}

TEST(Sprotis, IsUnitaryAndActsOnPsi) {
    const auto [u, psi] = random_dense_instance(3, 5);
    const double phi = 0.77;
    const Matrix r = sprotis(psi, PhaseAngle(phi)).entries();
    EXPECT_LT((r.adjoint() * r - Matrix::Identity(8, 8)).norm(), 1e-12);
    const Vector image = r * psi.amplitudes();
    EXPECT_LT((image - std::polar(1.0, 2 * phi) * psi.amplitudes()).norm(), 1e-13);
}

TEST(SandwichMatrix, ReducesToPowerAtZeroAngle) {
    const auto [u, psi] = random_dense_instance(3, 7);
    EXPECT_LT(std::abs(sandwich_matrix(u, psi, 2, 3, PhaseAngle(0.0)) - power_overlap(u, psi, 5)), 1e-13);
}

TEST(SandwichMatrix, NoPowersGivesRotationFactor) {
    const auto [u, psi] = random_dense_instance(2, 8);
    const double phi = 1.1;
    EXPECT_LT(std::abs(sandwich_matrix(u, psi, 0, 0, PhaseAngle(phi)) - std::polar(1.0, 2 * phi)), 1e-14);
}

TEST(SandwichMatrix, MatchesSpectralizedModel) {
    const auto [u, psi] = random_dense_instance(3, 9);
    const SpectralModel model = spectralize(u, psi);
    const double s = std::abs(sandwich_matrix(u, psi, 2, 1, PhaseAngle(kPi / 3)));
    EXPECT_NEAR(s, exact_sandwich_magnitude(model, 2, 1, PhaseAngle(kPi / 3)), 1e-10);
    const auto [u2, psi2] = random_dense_instance(2, 10);
    EXPECT_NEAR(std::abs(sandwich_matrix(u2, psi2, 2, 3, PhaseAngle(kPi / 4))),
                exact_sandwich_magnitude(spectralize(u2, psi2), 2, 3, PhaseAngle(kPi / 4)), 1e-10);
}

TEST(Spectralize, IdentityMergesToOneLevel) {
    const SpectralModel m = spectralize(DenseUnitary(Matrix::Identity(8, 8)), uniform_state(3));
    ASSERT_EQ(m.levels(), 1u);
    EXPECT_NEAR(m.eigenphases()[0], 0.0, 1e-12);
    EXPECT_NEAR(m.weights()[0], 1.0, 1e-12);
}

TEST(Spectralize, DiagonalGivesUniformWeights) {
    Matrix d = Matrix::Zero(4, 4);
    const double phases[] = {0.1, 0.9, -1.3, 2.5};
    for (int j = 0; j < 4; ++j) {
        d(j, j) = std::polar(1.0, phases[j]);
    }
    const SpectralModel m = spectralize(DenseUnitary(d), uniform_state(2));
    ASSERT_EQ(m.levels(), 4u);
    for (double w : m.weights()) {
        EXPECT_NEAR(w, 0.25, 1e-12);
    }
}

TEST(Spectralize, ReproducesPowers) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto [u, psi] = random_dense_instance(3, seed);
        const SpectralModel m = spectralize(u, psi);
        for (std::uint64_t k : {1u, 4u, 17u, 40u}) {
            EXPECT_LT(std::abs(exact_amplitude(m, k).value() - power_overlap(u, psi, k)), 1e-10);
        }
    }
}

TEST(RandomInstance, DeterministicAndBounded) {
    const auto a = random_dense_instance(2, 33);
    const auto b = random_dense_instance(2, 33);
    EXPECT_EQ(a.first.entries(), b.first.entries());
    EXPECT_EQ(a.second.amplitudes(), b.second.amplitudes());
    EXPECT_THROW(random_dense_instance(13, 1), ParameterError);
    EXPECT_THROW(random_dense_instance(0, 1), ParameterError);
}

TEST(TwoLayerMatrix, MatchesExpansion) {
    const auto [u, psi] = random_dense_instance(3, 21);
    auto amp = [&](std::uint64_t k) { return Amplitude::from_complex(power_overlap(u, psi, k)); };
    const double p1 = 0.4, p2 = -1.2;
    const cplx dense = two_layer_matrix(u, psi, 2, 3, 1, PhaseAngle(p1), PhaseAngle(p2));
    const cplx expansion = two_layer_overlap(amp(2), amp(3), amp(1), amp(5), amp(4), amp(6), p1, p2);
    EXPECT_LT(std::abs(dense - expansion), 1e-12);
}

TEST(OracleChecks, PassAndDetectFault) {
    EXPECT_TRUE(run_oracle_checks(2, 5).passed());
    EXPECT_FALSE(run_oracle_checks(2, 5, true).passed());
    EXPECT_THROW(run_oracle_checks(13, 1), ParameterError);
}

}  // namespace
}  // namespace sandwich::dense

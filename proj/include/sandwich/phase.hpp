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

#include <cmath>
#include <numbers>

namespace sandwich {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps any finite angle onto [-pi, pi).
inline double canonical_angle(double radians) {
    double r = std::remainder(radians, kTwoPi);
    if (r >= kPi) {
        r -= kTwoPi;
    }
    return r;
}

/// An angle stored in canonical form. All phase comparisons in the library go
/// through angular_distance rather than raw subtraction.
class PhaseAngle {
  public:
    constexpr PhaseAngle() = default;
    explicit PhaseAngle(double radians) : value_(canonical_angle(radians)) {}

    double radians() const { return value_; }

    PhaseAngle operator+(PhaseAngle other) const { return PhaseAngle(value_ + other.value_); }
    PhaseAngle operator-(PhaseAngle other) const { return PhaseAngle(value_ - other.value_); }
    PhaseAngle operator-() const { return PhaseAngle(-value_); }

    bool operator==(const PhaseAngle&) const = default;

  private:
    double value_ = 0.0;
};

/// Shortest arc between two angles, in [0, pi].
inline double angular_distance(double a, double b) {
    return std::abs(canonical_angle(a - b));
}

inline double angular_distance(PhaseAngle a, PhaseAngle b) {
    return angular_distance(a.radians(), b.radians());
}

}  // namespace sandwich

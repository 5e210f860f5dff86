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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandwich {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable model/tree/report file.
class FileFormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A sum-tree node whose required magnitudes fell below the allocation floor.
/// `power` is the exponent of U whose overlap was too small.
class DegenerateNodeError : public std::runtime_error {
  public:
    DegenerateNodeError(std::uint64_t node_value, std::uint64_t power, double magnitude);

    std::uint64_t node_value() const { return node_value_; }
    std::uint64_t power() const { return power_; }
    double magnitude() const { return magnitude_; }

  private:
    std::uint64_t node_value_;
    std::uint64_t power_;
    double magnitude_;
};

/// The two-layer fit could not single out a phase.
class AmbiguityError : public std::runtime_error {
  public:
    AmbiguityError(const std::string& what, std::vector<double> candidates);

    const std::vector<double>& candidates() const { return candidates_; }

  private:
    std::vector<double> candidates_;
};

}  // namespace sandwich

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

#include "sandwich/errors.hpp"

#include <sstream>

namespace sandwich {

namespace {

std::string degenerate_message(std::uint64_t node_value, std::uint64_t power, double magnitude) {
    std::ostringstream out;
    out << "degenerate node k_hat=" << node_value << ": |<psi|U^" << power << "|psi>| estimate " << magnitude
        << " is below the magnitude floor";
    return out.str();
}

std::string ambiguity_message(const std::string& what, const std::vector<double>& candidates) {
    std::ostringstream out;
    out << what;
    if (!candidates.empty()) {
        out << " (candidates:";
        for (double c : candidates) {
            out << ' ' << c;
        }
        out << ')';
    }
    return out.str();
}

}  // namespace

DegenerateNodeError::DegenerateNodeError(std::uint64_t node_value, std::uint64_t power, double magnitude)
    : std::runtime_error(degenerate_message(node_value, power, magnitude)),
      node_value_(node_value),
      power_(power),
      magnitude_(magnitude) {}

AmbiguityError::AmbiguityError(const std::string& what, std::vector<double> candidates)
    : std::runtime_error(ambiguity_message(what, candidates)), candidates_(std::move(candidates)) {}

}  // namespace sandwich

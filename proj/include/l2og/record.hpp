// Copyright 2026 The l2og Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2og/circuits.hpp"

namespace l2og {

/// One optimization trajectory: losses[0] is the initial loss.
struct RunRecord {
    std::string task_id;
    std::string optimizer_id;
    std::uint64_t seed = 0;
    std::vector<double> losses;
    std::vector<double> wall_ms; // per step; wall_ms[0] covers setup
    std::map<std::string, double> final_metrics;
    bool diverged = false;
    Vector final_params;

    [[nodiscard]] double final_loss() const {
        return losses.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : losses.back();
    }

    /// Pads a truncated trajectory to `steps + 1` entries with +inf.
    void mark_diverged(std::size_t steps) {
        diverged = true;
        while (losses.size() < steps + 1) {
            losses.push_back(std::numeric_limits<double>::infinity());
            wall_ms.push_back(0.0);
        }
    }
};

struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector &v) { return v.allFinite(); }

} // namespace l2og

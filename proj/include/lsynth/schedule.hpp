// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

namespace lsynth {

/// Per-timestep weight of the style residual, forwarded to generator
/// backends. Layout forms early in denoising, so the style weight is high
/// through `boundary` and low afterwards.
struct StyleSchedule {
    double early_weight = 0.7;
    double late_weight = 0.3;
    int boundary = 35;  // last timestep using early_weight
    int total_steps = 50;

    /// Throws ContractViolation when an invariant does not hold.
    void validate() const;
};

/// Throws ContractViolation unless 0 <= t < total_steps.
double style_lambda(const StyleSchedule& schedule, int t);

/// (timestep, weight) for every step, strictly increasing timesteps.
std::vector<std::pair<int, double>> expand(const StyleSchedule& schedule);

}  // namespace lsynth

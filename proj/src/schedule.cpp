// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/schedule.hpp"

#include <string>

#include "lsynth/error.hpp"

namespace lsynth {

void StyleSchedule::validate() const {
    auto in_unit = [](double w) { return w >= 0.0 && w <= 1.0; };
    if (!in_unit(early_weight) || !in_unit(late_weight)) {
        throw ContractViolation("style weights must lie in [0,1]");
    }
    if (boundary < 0 || boundary >= total_steps) {
        throw ContractViolation("style boundary must satisfy 0 <= boundary < total_steps");
    }
}

double style_lambda(const StyleSchedule& schedule, int t) {
    schedule.validate();
    if (t < 0 || t >= schedule.total_steps) {
        throw ContractViolation("timestep " + std::to_string(t) + " outside [0, " +
                                std::to_string(schedule.total_steps) + ")");
    }
    return t <= schedule.boundary ? schedule.early_weight : schedule.late_weight;
}

std::vector<std::pair<int, double>> expand(const StyleSchedule& schedule) {
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(schedule.total_steps));
    for (int t = 0; t < schedule.total_steps; ++t) out.emplace_back(t, style_lambda(schedule, t));
    return out;
}

}  // namespace lsynth

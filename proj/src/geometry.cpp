// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lsynth {

BBox::BBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
    if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) ||
        !std::isfinite(y_max)) {
        throw std::invalid_argument("bbox has non-finite coordinates");
    }
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw std::invalid_argument("bbox has non-positive extent: (" + std::to_string(x_min) +
                                    ", " + std::to_string(y_min) + ", " + std::to_string(x_max) +
                                    ", " + std::to_string(y_max) + ")");
    }
}

BBox BBox::from_center(Point center, double width, double height) {
    return BBox(center.x - width / 2.0, center.y - height / 2.0, center.x + width / 2.0,
                center.y + height / 2.0);
}

BBox BBox::from_array(const std::array<double, 4>& xyxy) {
    return BBox(xyxy[0], xyxy[1], xyxy[2], xyxy[3]);
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
    const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
    const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

double iou(const BBox& a, const BBox& b) noexcept {
    if (a == b) return 1.0;
    const double inter = intersection_area(a, b);
    if (inter == 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double overlap_ratio(const BBox& target, std::span<const BBox> others) noexcept {
    double sum = 0.0;
    for (const auto& o : others) {
        sum += intersection_area(target, o);
    }
    return sum / target.area();
}

namespace {

// Shift [lo, hi] into [0, 1] keeping its length, or take the whole axis.
std::pair<double, double> clamp_axis(double lo, double hi) noexcept {
    const double len = hi - lo;
    if (len >= 1.0) return {0.0, 1.0};
    if (lo < 0.0) return {0.0, len};
    if (hi > 1.0) return {std::min(1.0 - len, std::nextafter(1.0, 0.0)), 1.0};
    return {lo, hi};
}

}  // namespace

BBox clamp_to_canvas(const BBox& b) noexcept {
    const auto [x0, x1] = clamp_axis(b.x_min(), b.x_max());
    const auto [y0, y1] = clamp_axis(b.y_min(), b.y_max());
    return BBox(x0, y0, x1, y1);
}

}  // namespace lsynth

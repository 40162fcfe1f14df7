// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <span>

namespace lsynth {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned box in normalized corner form: every coordinate is a
/// fraction of the canvas width or height. Construction rejects boxes with
/// non-positive extent or non-finite coordinates. Coordinates may lie
/// outside [0,1] until passed through clamp_to_canvas.
class BBox {
public:
    BBox() = default;  // the full canvas
    BBox(double x_min, double y_min, double x_max, double y_max);

    static BBox from_center(Point center, double width, double height);
    static BBox from_array(const std::array<double, 4>& xyxy);

    double x_min() const noexcept { return x_min_; }
    double y_min() const noexcept { return y_min_; }
    double x_max() const noexcept { return x_max_; }
    double y_max() const noexcept { return y_max_; }

    double width() const noexcept { return x_max_ - x_min_; }
    double height() const noexcept { return y_max_ - y_min_; }
    double area() const noexcept { return width() * height(); }
    double aspect() const noexcept { return height() / width(); }
    Point center() const noexcept { return {(x_min_ + x_max_) / 2.0, (y_min_ + y_max_) / 2.0}; }

    bool in_canvas() const noexcept {
        return x_min_ >= 0.0 && y_min_ >= 0.0 && x_max_ <= 1.0 && y_max_ <= 1.0;
    }

    std::array<double, 4> to_array() const noexcept { return {x_min_, y_min_, x_max_, y_max_}; }

    friend bool operator==(const BBox&, const BBox&) = default;
    friend auto operator<=>(const BBox&, const BBox&) = default;

private:
    double x_min_ = 0.0;
    double y_min_ = 0.0;
    double x_max_ = 1.0;
    double y_max_ = 1.0;
};

double intersection_area(const BBox& a, const BBox& b) noexcept;

/// Intersection over union, in [0,1].
double iou(const BBox& a, const BBox& b) noexcept;

/// Sum of the target's intersections with each of `others`, divided by the
/// target's own area. Can exceed 1 when the others overlap each other.
double overlap_ratio(const BBox& target, std::span<const BBox> others) noexcept;

/// Moves a box inside the unit canvas while keeping its width and height;
/// an axis longer than the canvas is resized to [0,1].
BBox clamp_to_canvas(const BBox& b) noexcept;

}  // namespace lsynth

// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/kernels.hpp"

#include <numeric>

namespace lsynth::kernels {

std::vector<double> iou_matrix_serial(std::span<const BBox> rows, std::span<const BBox> cols) {
    std::vector<double> out(rows.size() * cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out[i * cols.size() + j] = iou(rows[i], cols[j]);
        }
    }
    return out;
}

std::vector<double> iou_matrix_omp(std::span<const BBox> rows, std::span<const BBox> cols) {
    std::vector<double> out(rows.size() * cols.size());
    const auto n_rows = static_cast<std::ptrdiff_t>(rows.size());
    const std::size_t n_cols = cols.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n_rows; ++i) {
        for (std::size_t j = 0; j < n_cols; ++j) {
            out[static_cast<std::size_t>(i) * n_cols + j] = iou(rows[i], cols[j]);
        }
    }
    return out;
}

std::vector<double> iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols) {
    if (rows.size() * cols.size() >= kParallelThreshold) return iou_matrix_omp(rows, cols);
    return iou_matrix_serial(rows, cols);
}

namespace {

// Summation order matches overlap_ratio(target, others-without-target).
double ratio_excluding(std::span<const BBox> boxes, std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < boxes.size(); ++j) {
        if (j != i) sum += intersection_area(boxes[i], boxes[j]);
    }
    return sum / boxes[i].area();
}

}  // namespace

std::vector<double> overlap_ratios_serial(std::span<const BBox> boxes) {
    std::vector<double> out(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        out[i] = ratio_excluding(boxes, i);
    }
    return out;
}

std::vector<double> overlap_ratios_omp(std::span<const BBox> boxes) {
    std::vector<double> out(boxes.size());
    const auto n = static_cast<std::ptrdiff_t>(boxes.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = ratio_excluding(boxes, static_cast<std::size_t>(i));
    }
    return out;
}

std::vector<double> overlap_ratios(std::span<const BBox> boxes) {
    if (boxes.size() * boxes.size() >= kParallelThreshold) return overlap_ratios_omp(boxes);
    return overlap_ratios_serial(boxes);
}

double mean_overlap_ratio(std::span<const BBox> boxes) {
    if (boxes.empty()) return 0.0;
    const auto r = overlap_ratios(boxes);
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

}  // namespace lsynth::kernels

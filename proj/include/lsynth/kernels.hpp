// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lsynth/geometry.hpp"

/// Batched box kernels. Every kernel has a serial reference and an OpenMP
/// version producing bit-identical results; the plain entry points pick one
/// by problem size.
namespace lsynth::kernels {

/// Row-major |rows| x |cols| matrix of pairwise IoU.
std::vector<double> iou_matrix_serial(std::span<const BBox> rows, std::span<const BBox> cols);
std::vector<double> iou_matrix_omp(std::span<const BBox> rows, std::span<const BBox> cols);
std::vector<double> iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols);

/// overlap_ratio of each box against every other box of the same set.
std::vector<double> overlap_ratios_serial(std::span<const BBox> boxes);
std::vector<double> overlap_ratios_omp(std::span<const BBox> boxes);
std::vector<double> overlap_ratios(std::span<const BBox> boxes);

double mean_overlap_ratio(std::span<const BBox> boxes);

/// Pair count above which the dispatching entry points go parallel.
inline constexpr std::size_t kParallelThreshold = 1 << 14;

}  // namespace lsynth::kernels

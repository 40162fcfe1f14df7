// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsynth/candidate.hpp"
#include "lsynth/geometry.hpp"
#include "lsynth/layout.hpp"

namespace lsynth {

struct Detection {
    std::string cate;
    BBox bbox;
    double confidence = 0.0;
    std::string detector;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// IoU a detection must exceed to count as the same object as a layout
/// instance.
inline constexpr double kMatchIou = 0.5;

struct InstanceMatch {
    int instance_id = 0;
    bool matched = false;
    double best_iou = 0.0;         // IoU of the match, else best same-cate IoU seen
    double best_confidence = 0.0;  // 0 when unmatched
    std::optional<std::size_t> detection;  // index into the detection list
};

/// One detector's view of one candidate, in layout instance order.
struct MatchReport {
    std::string detector;
    std::vector<InstanceMatch> instances;

    const InstanceMatch* find(int instance_id) const;
};

/// Greedy one-to-one matching in descending IoU order. A pair is eligible
/// when the categories are equal ignoring case and IoU > 0.5. Ties are
/// ordered by detection box, then confidence, so the result does not depend
/// on the order of `detections`.
MatchReport match_detections(const Layout& layout, std::span<const Detection> detections,
                             std::string detector = {});

/// False iff some instance is unmatched in every report. Requires at least
/// one report.
bool accept_candidate(std::span<const MatchReport> reports);

/// Mean best_confidence over all (detector, instance) pairs; unmatched pairs
/// count as 0.
double position_score(std::span<const MatchReport> reports);

enum class ScoreMode { Both, Quality, Position };

std::string_view to_string(ScoreMode mode);
ScoreMode parse_score_mode(std::string_view s);

struct ScoredCandidate {
    CandidateImage image;
    std::vector<MatchReport> reports;
    double quality = 0.0;   // Q in [0,1]
    double position = 0.0;  // P in [0,1]
    bool accepted = false;

    double total(ScoreMode mode = ScoreMode::Both) const;
};

/// Fills accepted and position from the reports.
ScoredCandidate score_candidate(CandidateImage image, std::vector<MatchReport> reports,
                                double quality);

/// Index of the accepted candidate with the highest score, lowest index on
/// ties; nullopt when every candidate was discarded.
std::optional<std::size_t> select_best(std::span<const ScoredCandidate> candidates,
                                       ScoreMode mode = ScoreMode::Both);

/// Min-max maps a raw scorer value into [0,1].
double normalize_score(double raw, double min, double max);

}  // namespace lsynth

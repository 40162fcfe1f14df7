// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/filtering.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include "lsynth/kernels.hpp"
#include "lsynth/text.hpp"

namespace lsynth {

void CandidateImage::validate() const {
    if (path.empty()) throw std::invalid_argument("candidate image has empty path");
    if (width <= 0 || height <= 0) throw std::invalid_argument("candidate image has no pixels");
}

const InstanceMatch* MatchReport::find(int instance_id) const {
    auto it = std::find_if(instances.begin(), instances.end(),
                           [&](const InstanceMatch& m) { return m.instance_id == instance_id; });
    return it == instances.end() ? nullptr : &*it;
}

MatchReport match_detections(const Layout& layout, std::span<const Detection> detections,
                             std::string detector) {
    MatchReport report;
    report.detector = std::move(detector);
    if (report.detector.empty() && !detections.empty()) report.detector = detections.front().detector;

    const auto inst_boxes = layout.boxes();
    std::vector<BBox> det_boxes;
    det_boxes.reserve(detections.size());
    for (const auto& d : detections) det_boxes.push_back(d.bbox);
    const auto ious = kernels::iou_matrix(inst_boxes, det_boxes);

    struct Pair {
        double iou;
        std::size_t inst;
        std::size_t det;
    };
    std::vector<Pair> pairs;
    report.instances.resize(layout.instances.size());
    for (std::size_t i = 0; i < layout.instances.size(); ++i) {
        auto& m = report.instances[i];
        m.instance_id = layout.instances[i].id;
        for (std::size_t d = 0; d < detections.size(); ++d) {
            if (!iequals(layout.instances[i].cate, detections[d].cate)) continue;
            const double v = ious[i * detections.size() + d];
            m.best_iou = std::max(m.best_iou, v);
            if (v > kMatchIou) pairs.push_back({v, i, d});
        }
    }

    auto key = [&](const Pair& p) {
        const auto& d = detections[p.det];
        return std::make_tuple(-p.iou, d.bbox, -d.confidence, to_lower(d.cate), p.inst);
    };
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) { return key(a) < key(b); });

    std::vector<bool> det_used(detections.size(), false);
    for (const auto& p : pairs) {
        auto& m = report.instances[p.inst];
        if (m.matched || det_used[p.det]) continue;
        m.matched = true;
        m.best_iou = p.iou;
        m.best_confidence = detections[p.det].confidence;
        m.detection = p.det;
        det_used[p.det] = true;
    }
    return report;
}

bool accept_candidate(std::span<const MatchReport> reports) {
    if (reports.empty()) throw std::invalid_argument("accept_candidate needs at least one report");
    for (const auto& m : reports.front().instances) {
        const bool seen = std::any_of(reports.begin(), reports.end(), [&](const MatchReport& r) {
            const auto* x = r.find(m.instance_id);
            return x != nullptr && x->matched;
        });
        if (!seen) return false;
    }
    return true;
}

double position_score(std::span<const MatchReport> reports) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : reports) {
        for (const auto& m : r.instances) {
            sum += m.matched ? m.best_confidence : 0.0;
            ++n;
        }
    }
    return n == 0 ? 0.0 : std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

std::string_view to_string(ScoreMode mode) {
    switch (mode) {
        case ScoreMode::Both: return "both";
        case ScoreMode::Quality: return "quality";
        case ScoreMode::Position: return "position";
    }
    return "?";
}

ScoreMode parse_score_mode(std::string_view s) {
    const auto l = to_lower(s);
    if (l == "both") return ScoreMode::Both;
    if (l == "quality") return ScoreMode::Quality;
    if (l == "position") return ScoreMode::Position;
    throw std::invalid_argument("unknown score mode '" + std::string(s) + "'");
}

double ScoredCandidate::total(ScoreMode mode) const {
    switch (mode) {
        case ScoreMode::Quality: return quality;
        case ScoreMode::Position: return position;
        case ScoreMode::Both: break;
    }
    return quality + position;
}

ScoredCandidate score_candidate(CandidateImage image, std::vector<MatchReport> reports,
                                double quality) {
    ScoredCandidate c;
    c.image = std::move(image);
    c.reports = std::move(reports);
    c.quality = std::clamp(quality, 0.0, 1.0);
    c.accepted = accept_candidate(c.reports);
    c.position = position_score(c.reports);
    return c;
}

std::optional<std::size_t> select_best(std::span<const ScoredCandidate> candidates, ScoreMode mode) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].accepted) continue;
        if (!best || candidates[i].total(mode) > candidates[*best].total(mode)) best = i;
    }
    return best;
}

double normalize_score(double raw, double min, double max) {
    if (!(max > min)) throw std::invalid_argument("score range must have max > min");
    return std::clamp((raw - min) / (max - min), 0.0, 1.0);
}

}  // namespace lsynth

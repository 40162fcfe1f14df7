// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "lsynth/error.hpp"
#include "lsynth/layout_json.hpp"
#include "lsynth/text.hpp"

namespace lsynth {

namespace {

bool names_match(const InstanceSpec& inst, std::string_view name) {
    return iequals(inst.cate, name) || iequals(inst.label, name);
}

bool contains_box(const BBox& outer, const BBox& inner) {
    constexpr double kTol = 1e-6;
    return inner.x_min() >= outer.x_min() - kTol && inner.y_min() >= outer.y_min() - kTol &&
           inner.x_max() <= outer.x_max() + kTol && inner.y_max() <= outer.y_max() + kTol;
}

}  // namespace

const InstanceSpec* Layout::find(int id) const {
    auto it = std::find_if(instances.begin(), instances.end(),
                           [id](const InstanceSpec& i) { return i.id == id; });
    return it == instances.end() ? nullptr : &*it;
}

std::vector<BBox> Layout::boxes() const {
    std::vector<BBox> out;
    out.reserve(instances.size());
    for (const auto& i : instances) out.push_back(i.bbox);
    return out;
}

void Layout::validate(std::size_t max_instances) const {
    std::vector<std::string> v;
    if (instances.empty()) v.emplace_back("layout has no instances");
    if (instances.size() > max_instances) {
        v.push_back("layout has " + std::to_string(instances.size()) + " instances, maximum is " +
                    std::to_string(max_instances));
    }
    std::set<int> ids;
    for (const auto& inst : instances) {
        const auto tag = "instance " + std::to_string(inst.id);
        if (!ids.insert(inst.id).second) v.push_back(tag + ": duplicate id");
        if (inst.label.empty()) v.push_back(tag + ": empty label");
        if (inst.cate.empty()) v.push_back(tag + ": empty cate");
        if (!inst.bbox.in_canvas()) v.push_back(tag + ": bbox outside canvas");
    }
    if (!v.empty()) throw ValidationError(std::move(v));
}

std::string_view to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::Add: return "add";
        case RuleKind::Remove: return "remove";
        case RuleKind::Replace: return "replace";
        case RuleKind::Scene: return "scene";
        case RuleKind::Constrain: return "constrain";
    }
    return "?";
}

RuleKind parse_rule_kind(std::string_view s) {
    const auto l = to_lower(s);
    if (l == "add") return RuleKind::Add;
    if (l == "remove") return RuleKind::Remove;
    if (l == "replace") return RuleKind::Replace;
    if (l == "scene") return RuleKind::Scene;
    if (l == "constrain") return RuleKind::Constrain;
    throw std::invalid_argument("unknown rule kind '" + std::string(s) + "'");
}

void LayoutRequest::validate() const {
    std::vector<std::string> v;
    if (categories.empty() && initial_boxes.empty()) {
        v.emplace_back("request names no categories and no initial boxes");
    }
    for (const auto& c : categories) {
        if (c.name.empty()) v.emplace_back("empty category name");
        if (c.count < 1) v.push_back("category '" + c.name + "' has count < 1");
    }
    for (const auto& r : rules) {
        const bool needs_subject =
            r.kind == RuleKind::Add || r.kind == RuleKind::Remove || r.kind == RuleKind::Replace;
        if (needs_subject && r.subject.empty()) {
            v.push_back(std::string(to_string(r.kind)) + " rule without subject");
        }
    }
    if (!v.empty()) throw ValidationError(std::move(v));
}

// ---- files --------------------------------------------------------------------

namespace {

std::string quoted(const std::string& s) {
    return nlohmann::json(s).dump();
}

std::string fixed6_box(const BBox& b) {
    return "[" + format_fixed(b.x_min(), 6) + ", " + format_fixed(b.y_min(), 6) + ", " +
           format_fixed(b.x_max(), 6) + ", " + format_fixed(b.y_max(), 6) + "]";
}

}  // namespace

std::string serialize_layout(const Layout& layout) {
    std::ostringstream out;
    out << "{\n  \"scene\": " << quoted(layout.scene) << ",\n";
    if (layout.style_ref) out << "  \"style_ref\": " << quoted(*layout.style_ref) << ",\n";
    out << "  \"instances\": [";
    for (std::size_t i = 0; i < layout.instances.size(); ++i) {
        const auto& inst = layout.instances[i];
        out << (i == 0 ? "\n" : ",\n");
        out << "    {\"id\": " << inst.id << ", \"label\": " << quoted(inst.label)
            << ", \"desc\": " << quoted(inst.desc) << ", \"cate\": " << quoted(inst.cate)
            << ", \"bbox\": " << fixed6_box(inst.bbox);
        if (inst.ref) out << ", \"ref\": " << quoted(*inst.ref);
        out << "}";
    }
    out << (layout.instances.empty() ? "]\n}\n" : "\n  ]\n}\n");
    return out.str();
}

Layout parse_layout(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("layout: invalid JSON: ") + e.what());
    }
    return json_codec::decode_layout(j);
}

std::string serialize_request(const LayoutRequest& request) {
    return json_codec::encode(request).dump(2) + "\n";
}

LayoutRequest parse_request(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("request: invalid JSON: ") + e.what());
    }
    return json_codec::decode_request(j);
}

// ---- initialization -------------------------------------------------------------

std::vector<std::string> check_against_request(const LayoutRequest& request, Layout& layout,
                                               std::size_t max_instances) {
    std::set<std::string> user_refs;
    for (const auto& [_, path] : request.reference_images) user_refs.insert(path);

    std::vector<std::string> v;
    for (auto& inst : layout.instances) {
        if (inst.desc.empty()) inst.desc = inst.label;
        if (inst.cate.empty()) inst.cate = to_lower(inst.label);
        inst.bbox = clamp_to_canvas(inst.bbox);
        if (inst.ref && !user_refs.contains(*inst.ref)) inst.ref.reset();
    }
    layout.style_ref = request.style_ref;

    try {
        layout.validate(max_instances);
    } catch (const ValidationError& e) {
        v = e.violations();
    }

    auto present = [&](std::string_view name) {
        return std::any_of(layout.instances.begin(), layout.instances.end(),
                           [&](const InstanceSpec& i) { return names_match(i, name); });
    };

    std::set<std::string> exempt;  // categories a rule takes out of the layout
    for (const auto& r : request.rules) {
        if (r.kind == RuleKind::Remove || r.kind == RuleKind::Replace) exempt.insert(to_lower(r.subject));
    }
    for (const auto& c : request.categories) {
        if (!exempt.contains(to_lower(c.name)) && !present(c.name)) {
            v.push_back("requested category '" + c.name + "' missing");
        }
    }
    for (const auto& r : request.rules) {
        switch (r.kind) {
            case RuleKind::Add:
                if (!present(r.subject)) v.push_back("add '" + r.subject + "': subject missing");
                break;
            case RuleKind::Remove:
                if (present(r.subject)) v.push_back("remove '" + r.subject + "': subject present");
                break;
            case RuleKind::Replace:
                if (present(r.subject)) v.push_back("replace '" + r.subject + "': subject present");
                if (const auto* to = std::get_if<std::string>(&r.argument); to && !present(*to)) {
                    v.push_back("replace '" + r.subject + "': replacement '" + *to + "' missing");
                }
                break;
            case RuleKind::Constrain:
                if (const auto* region = std::get_if<BBox>(&r.argument)) {
                    for (const auto& inst : layout.instances) {
                        if (names_match(inst, r.subject) && !contains_box(*region, inst.bbox)) {
                            v.push_back("constrain '" + r.subject + "': instance " +
                                        std::to_string(inst.id) + " outside region");
                        }
                    }
                }
                break;
            case RuleKind::Scene:
                break;
        }
    }
    return v;
}

Layout propose_layout(const LayoutRequest& request, LayoutProposer& proposer, int retries,
                      std::size_t max_instances) {
    request.validate();
    std::vector<std::string> last;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        Layout layout = proposer.propose(request);
        last = check_against_request(request, layout, max_instances);
        if (last.empty()) return layout;
    }
    throw ValidationError(std::move(last));
}

namespace {

struct Pending {
    std::string label;
    std::optional<BBox> fixed;
};

BBox place_sampled(const CategoryStats& stats, const BBox& region, std::span<const BBox> placed,
                   Rng& rng) {
    const auto emp = sample_empirical(stats, rng);
    const double w = std::min(emp.width, 1.0);
    const double h = std::min(w * emp.aspect, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto coord = [&](double lo, double hi, double len) {
        const double u = unit(rng);
        if (len >= hi - lo) return (lo + hi) / 2.0;
        return lo + len / 2.0 + u * (hi - lo - len);
    };

    std::optional<BBox> best;
    double best_ratio = 0.0;
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        const double cx = coord(region.x_min(), region.x_max(), w);
        const double cy = coord(region.y_min(), region.y_max(), h);
        const BBox box = clamp_to_canvas(BBox::from_center({cx, cy}, w, h));
        const double r = overlap_ratio(box, placed);
        if (!best || r < best_ratio) {
            best = box;
            best_ratio = r;
        }
    }
    return *best;
}

}  // namespace

Layout fallback_propose(const LayoutRequest& request, const StatsTable& stats, Rng& rng,
                        std::size_t max_instances) {
    request.validate();

    std::vector<Pending> pending;
    for (const auto& b : request.initial_boxes) pending.push_back({b.label, clamp_to_canvas(b.bbox)});
    for (const auto& c : request.categories) {
        const auto given = std::count_if(request.initial_boxes.begin(), request.initial_boxes.end(),
                                         [&](const InitialBox& b) { return iequals(b.label, c.name); });
        for (auto n = given; n < c.count; ++n) pending.push_back({c.name, std::nullopt});
    }

    std::optional<std::string> scene;
    std::map<std::string, BBox> regions;  // lower-cased subject -> region
    for (const auto& r : request.rules) {
        auto matches = [&](const Pending& p) { return iequals(p.label, r.subject); };
        switch (r.kind) {
            case RuleKind::Remove:
                std::erase_if(pending, matches);
                break;
            case RuleKind::Replace:
                if (const auto* to = std::get_if<std::string>(&r.argument)) {
                    for (auto& p : pending) {
                        if (matches(p)) p.label = *to;
                    }
                } else {
                    std::erase_if(pending, matches);
                }
                break;
            case RuleKind::Add:
                if (const auto* at = std::get_if<BBox>(&r.argument)) {
                    pending.push_back({r.subject, clamp_to_canvas(*at)});
                } else {
                    pending.push_back({r.subject, std::nullopt});
                }
                break;
            case RuleKind::Scene:
                if (const auto* text = std::get_if<std::string>(&r.argument)) scene = *text;
                break;
            case RuleKind::Constrain:
                if (const auto* region = std::get_if<BBox>(&r.argument)) {
                    regions.insert_or_assign(to_lower(r.subject), clamp_to_canvas(*region));
                }
                break;
        }
    }
    if (pending.empty()) throw ValidationError({"rules leave nothing to place"});
    if (pending.size() > max_instances) {
        throw ValidationError({"request needs " + std::to_string(pending.size()) +
                               " instances, maximum is " + std::to_string(max_instances)});
    }

    Layout layout;
    layout.style_ref = request.style_ref;
    std::vector<BBox> placed;
    for (const auto& p : pending) {
        if (p.fixed) placed.push_back(*p.fixed);
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
        const auto& p = pending[i];
        InstanceSpec inst;
        inst.id = static_cast<int>(i);
        inst.label = p.label;
        inst.desc = p.label;
        inst.cate = to_lower(p.label);
        if (auto it = request.reference_images.find(p.label); it != request.reference_images.end()) {
            inst.ref = it->second;
        }
        if (p.fixed) {
            inst.bbox = *p.fixed;
        } else {
            auto region = regions.find(to_lower(p.label));
            inst.bbox = place_sampled(stats.find_or_default(inst.cate),
                                      region == regions.end() ? BBox() : region->second, placed, rng);
            placed.push_back(inst.bbox);
        }
        layout.instances.push_back(std::move(inst));
    }

    if (scene) {
        layout.scene = *scene;
    } else {
        std::vector<std::string> seen;
        for (const auto& p : pending) {
            if (std::none_of(seen.begin(), seen.end(), [&](const auto& s) { return iequals(s, p.label); })) {
                seen.push_back(p.label);
            }
        }
        layout.scene = "a realistic photo of a scene with";
        for (std::size_t i = 0; i < seen.size(); ++i) {
            layout.scene += (i == 0 ? " " : (i + 1 == seen.size() ? " and " : ", ")) + seen[i];
        }
    }
    return layout;
}

Layout FallbackProposer::propose(const LayoutRequest& request) {
    Rng rng(request.seed);
    return fallback_propose(request, stats_, rng, max_instances_);
}

// ---- adjustment -------------------------------------------------------------------

InstanceSpec blend_size(const InstanceSpec& inst, const EmpiricalSample& empirical, double alpha) {
    const double width = alpha * empirical.width + (1.0 - alpha) * inst.bbox.width();
    const double aspect = alpha * empirical.aspect + (1.0 - alpha) * inst.bbox.aspect();
    InstanceSpec out = inst;
    out.bbox = clamp_to_canvas(BBox::from_center(inst.bbox.center(), width, width * aspect));
    return out;
}

InstanceSpec adjust_size(const InstanceSpec& inst, const CategoryStats* stats, Rng& rng) {
    if (stats == nullptr) return inst;
    const auto empirical = sample_empirical(*stats, rng);
    const double alpha = std::uniform_real_distribution<double>(kBlendMin, kBlendMax)(rng);
    return blend_size(inst, empirical, alpha);
}

Point direction_vector(Direction d) {
    constexpr double k = 0.70710678118654752440;  // 1/sqrt(2)
    switch (d) {
        case Direction::Stay: return {0.0, 0.0};
        case Direction::N: return {0.0, -1.0};
        case Direction::NE: return {k, -k};
        case Direction::E: return {1.0, 0.0};
        case Direction::SE: return {k, k};
        case Direction::S: return {0.0, 1.0};
        case Direction::SW: return {-k, k};
        case Direction::W: return {-1.0, 0.0};
        case Direction::NW: return {-k, -k};
    }
    return {0.0, 0.0};
}

PositionChoice best_position(const BBox& box, std::span<const BBox> others, double step) {
    const Point c = box.center();
    std::optional<PositionChoice> best;
    for (const auto d : kDirections) {
        BBox candidate = clamp_to_canvas(box);
        if (d != Direction::Stay) {
            const Point v = direction_vector(d);
            candidate = clamp_to_canvas(
                BBox::from_center({c.x + step * v.x, c.y + step * v.y}, box.width(), box.height()));
        }
        const double r = overlap_ratio(candidate, others);
        if (!best || r < best->ratio) best = PositionChoice{candidate, d, r};
    }
    return *best;
}

InstanceSpec adjust_position(const InstanceSpec& inst, const Layout& layout, Rng& rng) {
    const double step = std::uniform_real_distribution<double>(kStepMin, kStepMax)(rng);
    std::vector<BBox> others;
    others.reserve(layout.instances.size());
    for (const auto& o : layout.instances) {
        if (o.id != inst.id) others.push_back(o.bbox);
    }
    InstanceSpec out = inst;
    out.bbox = best_position(inst.bbox, others, step).bbox;
    return out;
}

Layout adjust_layout(const Layout& layout, const StatsTable& stats, Rng& rng) {
    Layout out = layout;
    std::vector<std::size_t> order(out.instances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return layout.instances[a].bbox.area() > layout.instances[b].bbox.area();
    });

    for (const auto idx : order) {
        auto& inst = out.instances[idx];
        const CategoryStats* s = stats.find(inst.cate);
        if (s == nullptr) s = stats.find(inst.label);
        inst = adjust_size(inst, s, rng);
        inst = adjust_position(inst, out, rng);
    }
    return out;
}

}  // namespace lsynth

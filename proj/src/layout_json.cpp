// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/layout_json.hpp"

#include "lsynth/error.hpp"

namespace lsynth::json_codec {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.is_object()) throw ParseError(ctx + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(ctx + ": missing field '" + key + "'");
    return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& ctx) {
    const auto& v = field(obj, key, ctx);
    if (!v.is_string()) throw ParseError(ctx + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           const std::string& ctx) {
    if (!obj.is_object()) throw ParseError(ctx + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(ctx + "." + key + ": expected a string");
    return it->get<std::string>();
}

double number_field(const json& obj, const char* key, const std::string& ctx) {
    const auto& v = field(obj, key, ctx);
    if (!v.is_number()) throw ParseError(ctx + "." + key + ": expected a number");
    return v.get<double>();
}

std::int64_t int_field(const json& obj, const char* key, const std::string& ctx) {
    const auto& v = field(obj, key, ctx);
    if (!v.is_number_integer()) throw ParseError(ctx + "." + key + ": expected an integer");
    return v.get<std::int64_t>();
}

bool is_uint(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::uint64_t uint_field(const json& obj, const char* key, const std::string& ctx) {
    const auto& v = field(obj, key, ctx);
    if (!is_uint(v)) {
        throw ParseError(ctx + "." + key + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

json encode(const BBox& b) {
    return json::array({b.x_min(), b.y_min(), b.x_max(), b.y_max()});
}

BBox decode_bbox(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 4) throw ParseError(ctx + ": bbox must have 4 numbers");
    std::array<double, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw ParseError(ctx + ": bbox must have 4 numbers");
        v[i] = j[i].get<double>();
    }
    try {
        return BBox::from_array(v);
    } catch (const std::invalid_argument& e) {
        throw ParseError(ctx + ": " + e.what());
    }
}

json encode(const InstanceSpec& inst) {
    json j = {{"id", inst.id},     {"label", inst.label}, {"desc", inst.desc},
              {"cate", inst.cate}, {"bbox", encode(inst.bbox)}};
    if (inst.ref) j["ref"] = *inst.ref;
    return j;
}

InstanceSpec decode_instance(const json& j, const std::string& ctx) {
    InstanceSpec inst;
    inst.id = static_cast<int>(int_field(j, "id", ctx));
    inst.label = string_field(j, "label", ctx);
    inst.desc = optional_string(j, "desc", ctx).value_or("");
    inst.cate = optional_string(j, "cate", ctx).value_or("");
    inst.bbox = decode_bbox(field(j, "bbox", ctx), ctx + ".bbox");
    inst.ref = optional_string(j, "ref", ctx);
    return inst;
}

json encode(const Layout& layout) {
    json j = {{"scene", layout.scene}, {"instances", json::array()}};
    if (layout.style_ref) j["style_ref"] = *layout.style_ref;
    for (const auto& inst : layout.instances) j["instances"].push_back(encode(inst));
    return j;
}

Layout decode_layout(const json& j, const std::string& ctx) {
    Layout layout;
    layout.scene = string_field(j, "scene", ctx);
    layout.style_ref = optional_string(j, "style_ref", ctx);
    const auto& insts = field(j, "instances", ctx);
    if (!insts.is_array()) throw ParseError(ctx + ".instances: expected an array");
    for (std::size_t i = 0; i < insts.size(); ++i) {
        layout.instances.push_back(
            decode_instance(insts[i], ctx + ".instances[" + std::to_string(i) + "]"));
    }
    return layout;
}

json encode(const LayoutRule& rule) {
    json j = {{"kind", std::string(to_string(rule.kind))}, {"subject", rule.subject}};
    if (const auto* s = std::get_if<std::string>(&rule.argument)) j["argument"] = *s;
    if (const auto* b = std::get_if<BBox>(&rule.argument)) j["argument"] = encode(*b);
    return j;
}

LayoutRule decode_rule(const json& j, const std::string& ctx) {
    LayoutRule rule;
    try {
        rule.kind = parse_rule_kind(string_field(j, "kind", ctx));
    } catch (const std::invalid_argument& e) {
        throw ParseError(ctx + ".kind: " + e.what());
    }
    rule.subject = optional_string(j, "subject", ctx).value_or("");
    if (auto it = j.find("argument"); it != j.end() && !it->is_null()) {
        if (it->is_string()) {
            rule.argument = it->get<std::string>();
        } else {
            rule.argument = decode_bbox(*it, ctx + ".argument");
        }
    }
    return rule;
}

json encode(const LayoutRequest& request) {
    json j = {{"categories", json::array()},
              {"rules", json::array()},
              {"initial_boxes", json::array()},
              {"reference_images", json::object()},
              {"seed", request.seed}};
    for (const auto& c : request.categories) {
        j["categories"].push_back({{"name", c.name}, {"count", c.count}});
    }
    for (const auto& r : request.rules) j["rules"].push_back(encode(r));
    for (const auto& b : request.initial_boxes) {
        j["initial_boxes"].push_back({{"label", b.label}, {"bbox", encode(b.bbox)}});
    }
    for (const auto& [label, path] : request.reference_images) j["reference_images"][label] = path;
    if (request.style_ref) j["style_ref"] = *request.style_ref;
    return j;
}

LayoutRequest decode_request(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ParseError(ctx + ": expected an object");
    LayoutRequest req;
    if (auto it = j.find("categories"); it != j.end()) {
        if (!it->is_array()) throw ParseError(ctx + ".categories: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& c = (*it)[i];
            const auto cctx = ctx + ".categories[" + std::to_string(i) + "]";
            if (c.is_string()) {
                req.categories.push_back({c.get<std::string>(), 1});
            } else {
                CategoryCount cc;
                cc.name = string_field(c, "name", cctx);
                if (c.contains("count")) cc.count = static_cast<int>(int_field(c, "count", cctx));
                req.categories.push_back(std::move(cc));
            }
        }
    }
    if (auto it = j.find("rules"); it != j.end()) {
        if (!it->is_array()) throw ParseError(ctx + ".rules: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            req.rules.push_back(decode_rule((*it)[i], ctx + ".rules[" + std::to_string(i) + "]"));
        }
    }
    if (auto it = j.find("initial_boxes"); it != j.end()) {
        if (!it->is_array()) throw ParseError(ctx + ".initial_boxes: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto bctx = ctx + ".initial_boxes[" + std::to_string(i) + "]";
            req.initial_boxes.push_back({string_field((*it)[i], "label", bctx),
                                         decode_bbox(field((*it)[i], "bbox", bctx), bctx + ".bbox")});
        }
    }
    if (auto it = j.find("reference_images"); it != j.end()) {
        if (!it->is_object()) throw ParseError(ctx + ".reference_images: expected an object");
        for (const auto& [label, path] : it->items()) {
            if (!path.is_string()) throw ParseError(ctx + ".reference_images." + label + ": expected a string");
            req.reference_images.emplace(label, path.get<std::string>());
        }
    }
    req.style_ref = optional_string(j, "style_ref", ctx);
    if (j.contains("seed")) req.seed = uint_field(j, "seed", ctx);
    return req;
}

}  // namespace lsynth::json_codec

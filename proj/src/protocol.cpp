// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/protocol.hpp"

#include <cmath>
#include <functional>

#include "lsynth/error.hpp"
#include "lsynth/layout_json.hpp"
#include "lsynth/text.hpp"

namespace lsynth::protocol {

using nlohmann::json;
using namespace json_codec;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::Proposer: return "proposer";
        case Role::Generator: return "generator";
        case Role::Detector: return "detector";
        case Role::Scorer: return "scorer";
    }
    return "?";
}

Role parse_role(std::string_view s) {
    const auto l = to_lower(s);
    if (l == "proposer") return Role::Proposer;
    if (l == "generator") return Role::Generator;
    if (l == "detector") return Role::Detector;
    if (l == "scorer") return Role::Scorer;
    throw std::invalid_argument("unknown backend role '" + std::string(s) + "'");
}

std::string_view to_string(Op op) {
    switch (op) {
        case Op::Hello: return "hello";
        case Op::ProposeLayout: return "propose_layout";
        case Op::Generate: return "generate";
        case Op::Detect: return "detect";
        case Op::Score: return "score";
        case Op::Shutdown: return "shutdown";
    }
    return "?";
}

std::optional<Op> parse_op(std::string_view s) {
    for (auto op : {Op::Hello, Op::ProposeLayout, Op::Generate, Op::Detect, Op::Score, Op::Shutdown}) {
        if (to_string(op) == s) return op;
    }
    return std::nullopt;
}

std::optional<Role> role_for(Op op) {
    switch (op) {
        case Op::ProposeLayout: return Role::Proposer;
        case Op::Generate: return Role::Generator;
        case Op::Detect: return Role::Detector;
        case Op::Score: return Role::Scorer;
        case Op::Hello:
        case Op::Shutdown: break;
    }
    return std::nullopt;
}

void GenerationRequest::validate() const {
    int prev = -1;
    for (const auto& [t, w] : style_schedule) {
        if (t <= prev) throw ContractViolation("style schedule timesteps must strictly increase");
        if (!(w >= 0.0 && w <= 1.0)) throw ContractViolation("style schedule weight outside [0,1]");
        prev = t;
    }
    if (width <= 0 || height <= 0) throw ContractViolation("generation size must be positive");
    if (output_path.empty()) throw ContractViolation("generation request has no output path");
}

json encode(const GenerationRequest& r) {
    json j = {{"layout", json_codec::encode(r.layout)},
              {"instance_refs", json::object()},
              {"seed", r.seed},
              {"style_schedule", json::array()},
              {"output_path", r.output_path},
              {"width", r.width},
              {"height", r.height}};
    if (r.style_ref) j["style_ref"] = *r.style_ref;
    for (const auto& [id, path] : r.instance_refs) j["instance_refs"][std::to_string(id)] = path;
    for (const auto& [t, w] : r.style_schedule) j["style_schedule"].push_back(json::array({t, w}));
    return j;
}

GenerationRequest decode_generation_request(const json& j, const std::string& ctx) {
    GenerationRequest r;
    r.layout = decode_layout(field(j, "layout", ctx), ctx + ".layout");
    r.style_ref = optional_string(j, "style_ref", ctx);
    if (auto it = j.find("instance_refs"); it != j.end()) {
        if (!it->is_object()) throw ParseError(ctx + ".instance_refs: expected an object");
        for (const auto& [key, path] : it->items()) {
            if (!path.is_string()) throw ParseError(ctx + ".instance_refs." + key + ": expected a string");
            try {
                r.instance_refs.emplace(std::stoi(key), path.get<std::string>());
            } catch (const std::exception&) {
                throw ParseError(ctx + ".instance_refs: key '" + key + "' is not an instance id");
            }
        }
    }
    r.seed = uint_field(j, "seed", ctx);
    const auto& sched = field(j, "style_schedule", ctx);
    if (!sched.is_array()) throw ParseError(ctx + ".style_schedule: expected an array");
    for (const auto& e : sched) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number()) {
            throw ParseError(ctx + ".style_schedule: entries must be [timestep, weight]");
        }
        r.style_schedule.emplace_back(e[0].get<int>(), e[1].get<double>());
    }
    r.output_path = string_field(j, "output_path", ctx);
    r.width = static_cast<int>(int_field(j, "width", ctx));
    r.height = static_cast<int>(int_field(j, "height", ctx));
    try {
        r.validate();
    } catch (const ContractViolation& e) {
        throw ParseError(ctx + ": " + e.what());
    }
    return r;
}

json encode(const CandidateImage& image) {
    return {{"path", image.path},
            {"width", image.width},
            {"height", image.height},
            {"generator", image.generator},
            {"seed", image.seed}};
}

CandidateImage decode_candidate_image(const json& j, const std::string& ctx) {
    CandidateImage im;
    im.path = string_field(j, "path", ctx);
    im.width = static_cast<int>(int_field(j, "width", ctx));
    im.height = static_cast<int>(int_field(j, "height", ctx));
    im.generator = optional_string(j, "generator", ctx).value_or("");
    if (j.contains("seed")) im.seed = uint_field(j, "seed", ctx);
    try {
        im.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(ctx + ": " + e.what());
    }
    return im;
}

json encode(const Detection& d) {
    return {{"cate", d.cate}, {"bbox", json_codec::encode(d.bbox)}, {"confidence", d.confidence}};
}

Detection decode_detection(const json& j, const std::string& ctx) {
    Detection d;
    d.cate = string_field(j, "cate", ctx);
    d.bbox = decode_bbox(field(j, "bbox", ctx), ctx + ".bbox");
    d.confidence = number_field(j, "confidence", ctx);
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        throw ParseError(ctx + ".confidence: outside [0,1]");
    }
    return d;
}

json encode(const Hello& h) {
    json j = {{"role", std::string(to_string(h.role))}, {"version", h.version}};
    if (!h.name.empty()) j["name"] = h.name;
    if (h.score_range) j["score_range"] = json::array({h.score_range->first, h.score_range->second});
    return j;
}

Hello decode_hello(const json& j) {
    Hello h;
    try {
        h.role = parse_role(string_field(j, "role", "hello"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("hello.role: ") + e.what());
    }
    h.version = string_field(j, "version", "hello");
    h.name = optional_string(j, "name", "hello").value_or("");
    if (auto it = j.find("score_range"); it != j.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
            throw ParseError("hello.score_range: expected [min, max]");
        }
        const double lo = (*it)[0].get<double>();
        const double hi = (*it)[1].get<double>();
        if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw ParseError("hello.score_range: max must exceed min");
        }
        h.score_range = std::make_pair(lo, hi);
    }
    return h;
}

namespace {

std::vector<std::string> check_envelope(const json& msg, bool reply) {
    std::vector<std::string> p;
    if (!msg.is_object()) {
        p.emplace_back("message is not a JSON object");
        return p;
    }
    if (!msg.contains("id") || !is_uint(msg["id"])) {
        p.emplace_back("'id' must be a non-negative integer");
    }
    if (reply) {
        if (!msg.contains("status") || !msg["status"].is_string() ||
            (msg["status"] != "ok" && msg["status"] != "error")) {
            p.emplace_back("'status' must be \"ok\" or \"error\"");
        } else if (msg["status"] == "error" &&
                   (!msg.contains("error") || !msg["error"].is_string())) {
            p.emplace_back("error reply without an 'error' message");
        }
    }
    return p;
}

std::vector<std::string> collect(const std::function<void()>& decode) {
    try {
        decode();
    } catch (const ParseError& e) {
        return {e.what()};
    }
    return {};
}

std::vector<std::string> string_array(const json& msg, const char* key) {
    if (!msg.contains(key) || !msg[key].is_array()) return {std::string("'") + key + "' must be an array"};
    for (const auto& v : msg[key]) {
        if (!v.is_string()) return {std::string("'") + key + "' must contain only strings"};
    }
    return {};
}

}  // namespace

std::vector<std::string> validate_request(const json& msg) {
    auto p = check_envelope(msg, false);
    if (!p.empty()) return p;
    if (!msg.contains("op") || !msg["op"].is_string()) return {"'op' must be a string"};
    const auto op = parse_op(msg["op"].get<std::string>());
    if (!op) return {"unknown op '" + msg["op"].get<std::string>() + "'"};
    switch (*op) {
        case Op::Hello:
        case Op::Shutdown:
            return {};
        case Op::ProposeLayout:
            return collect([&] { decode_request(field(msg, "request", "propose_layout"), "propose_layout.request"); });
        case Op::Generate:
            return collect([&] { decode_generation_request(field(msg, "request", "generate"), "generate.request"); });
        case Op::Detect: {
            auto q = collect([&] { string_field(msg, "image", "detect"); });
            auto v = string_array(msg, "vocabulary");
            q.insert(q.end(), v.begin(), v.end());
            return q;
        }
        case Op::Score:
            return collect([&] { string_field(msg, "image", "score"); });
    }
    return {};
}

std::vector<std::string> validate_reply(Op op, const json& msg) {
    auto p = check_envelope(msg, true);
    if (!p.empty() || msg["status"] == "error") return p;
    switch (op) {
        case Op::Hello:
            return collect([&] { decode_hello(msg); });
        case Op::Shutdown:
            return {};
        case Op::ProposeLayout:
            return collect([&] { decode_layout(field(msg, "layout", "reply"), "reply.layout"); });
        case Op::Generate:
            return collect([&] { decode_candidate_image(field(msg, "image", "reply"), "reply.image"); });
        case Op::Detect:
            return collect([&] {
                const auto& dets = field(msg, "detections", "reply");
                if (!dets.is_array()) throw ParseError("reply.detections: expected an array");
                for (std::size_t i = 0; i < dets.size(); ++i) {
                    decode_detection(dets[i], "reply.detections[" + std::to_string(i) + "]");
                }
            });
        case Op::Score:
            return collect([&] {
                const double s = number_field(msg, "score", "reply");
                if (!std::isfinite(s)) throw ParseError("reply.score: not finite");
            });
    }
    return {};
}

json ok_reply(std::uint64_t id) {
    return {{"id", id}, {"status", "ok"}};
}

json error_reply(std::uint64_t id, const std::string& message) {
    return {{"id", id}, {"status", "error"}, {"error", message}};
}

}  // namespace lsynth::protocol

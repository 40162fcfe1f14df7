// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/conformance.hpp"

#include "json.hpp"
#include "lsynth/error.hpp"
#include "lsynth/protocol.hpp"
#include "lsynth/text.hpp"

namespace lsynth::conformance {

using nlohmann::json;

namespace {

std::string substitute(std::string line, const std::map<std::string, std::string>& vars) {
    for (const auto& [name, value] : vars) {
        const std::string token = "$" + name;
        for (auto pos = line.find(token); pos != std::string::npos; pos = line.find(token, pos + value.size())) {
            line.replace(pos, token.size(), value);
        }
    }
    return line;
}

}  // namespace

std::vector<Step> load_transcript(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::vector<Step> steps;
    std::size_t n = 0;
    for (const auto& raw : split(text, '\n')) {
        ++n;
        if (trim(raw).empty()) continue;
        const auto where = "transcript line " + std::to_string(n);
        json rec;
        try {
            rec = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("dir") || !rec.contains("line") || !rec["line"].is_string()) {
            throw ParseError(where + ": expected {dir, line}");
        }
        const auto dir = rec["dir"].get<std::string>();
        const auto line = substitute(rec["line"].get<std::string>(), vars);
        if (dir == "send") {
            steps.push_back({line, std::nullopt});
        } else if (dir == "recv") {
            if (steps.empty() || steps.back().reply) throw ParseError(where + ": reply without a request");
            steps.back().reply = line;
        } else {
            throw ParseError(where + ": unknown direction '" + dir + "'");
        }
    }
    return steps;
}

std::vector<std::string> replay(Endpoint& endpoint, const std::vector<Step>& steps,
                                std::chrono::milliseconds timeout) {
    std::vector<std::string> violations;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& step = steps[i];
        const auto where = "step " + std::to_string(i);
        const auto request = json::parse(step.request, nullptr, false);
        const auto op_name = request.is_object() && request.contains("op") && request["op"].is_string()
                                 ? request["op"].get<std::string>()
                                 : std::string();
        const auto op = protocol::parse_op(op_name);

        std::string line;
        try {
            endpoint.send_line(step.request);
            line = endpoint.read_line(timeout);
        } catch (const BackendError& e) {
            violations.push_back(where + ": " + e.what());
            break;
        }
        const auto reply = json::parse(line, nullptr, false);
        if (reply.is_discarded()) {
            violations.push_back(where + ": reply is not JSON");
            continue;
        }
        if (request.is_object() && request.contains("id") && reply.value("id", json()) != request["id"]) {
            violations.push_back(where + ": reply id does not match the request");
        }
        if (op) {
            const auto problems = protocol::validate_reply(*op, reply);
            for (const auto& p : problems) violations.push_back(where + ": " + p);
            if (problems.empty() && *op == protocol::Op::Detect && reply.value("status", "") == "ok" &&
                request.contains("vocabulary") && request["vocabulary"].is_array()) {
                for (const auto& d : reply["detections"]) {
                    const auto cate = d["cate"].get<std::string>();
                    bool known = false;
                    for (const auto& v : request["vocabulary"]) known = known || (v.is_string() && iequals(v.get<std::string>(), cate));
                    if (!known) violations.push_back(where + ": detection '" + cate + "' is outside the vocabulary");
                }
            }
        } else if (reply.value("status", "") != "error") {
            violations.push_back(where + ": unknown op '" + op_name + "' was not rejected");
        }
        if (step.reply) {
            const auto expected = json::parse(*step.reply, nullptr, false);
            if (!expected.is_discarded() && expected.value("status", "") != reply.value("status", "")) {
                violations.push_back(where + ": status '" + reply.value("status", "") + "', recorded '" +
                                     expected.value("status", "") + "'");
            }
        }
    }
    return violations;
}

}  // namespace lsynth::conformance

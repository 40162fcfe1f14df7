// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "json.hpp"
#include "lsynth/layout.hpp"

// JSON codecs for geometry and layout types. Decoders throw ParseError with
// the path of the offending field.
namespace lsynth::json_codec {

nlohmann::json encode(const BBox& b);
BBox decode_bbox(const nlohmann::json& j, const std::string& ctx);

nlohmann::json encode(const InstanceSpec& inst);
InstanceSpec decode_instance(const nlohmann::json& j, const std::string& ctx);

nlohmann::json encode(const Layout& layout);
Layout decode_layout(const nlohmann::json& j, const std::string& ctx = "layout");

nlohmann::json encode(const LayoutRule& rule);
LayoutRule decode_rule(const nlohmann::json& j, const std::string& ctx);

nlohmann::json encode(const LayoutRequest& request);
LayoutRequest decode_request(const nlohmann::json& j, const std::string& ctx = "request");

// Field helpers shared by the other codecs.
/// True for any integer value >= 0, however it was stored.
bool is_uint(const nlohmann::json& v);
const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& ctx);
std::string string_field(const nlohmann::json& obj, const char* key, const std::string& ctx);
std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key,
                                           const std::string& ctx);
double number_field(const nlohmann::json& obj, const char* key, const std::string& ctx);
std::int64_t int_field(const nlohmann::json& obj, const char* key, const std::string& ctx);
std::uint64_t uint_field(const nlohmann::json& obj, const char* key, const std::string& ctx);

}  // namespace lsynth::json_codec

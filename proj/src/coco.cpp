// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/coco.hpp"

#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "lsynth/error.hpp"
#include "lsynth/text.hpp"

namespace lsynth::coco {

using nlohmann::json;

namespace {

std::string where(const char* section, std::size_t i) {
    return std::string(section) + "[" + std::to_string(i) + "]";
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.is_object()) throw ParseError(ctx + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(ctx + ": missing field '" + key + "'");
    return *it;
}

std::int64_t require_int(const json& obj, const char* key, const std::string& ctx) {
    const auto& v = require(obj, key, ctx);
    if (!v.is_number_integer()) throw ParseError(ctx + ": '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

double require_number(const json& obj, const char* key, const std::string& ctx) {
    const auto& v = require(obj, key, ctx);
    if (!v.is_number()) throw ParseError(ctx + ": '" + key + "' must be a number");
    return v.get<double>();
}

const json& require_array(const json& root, const char* key) {
    const auto& v = require(root, key, "document");
    if (!v.is_array()) throw ParseError(std::string("document: '") + key + "' must be an array");
    return v;
}

}  // namespace

Dataset parse(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("document: invalid JSON: ") + e.what());
    }

    Dataset ds;
    const auto& images = require_array(root, "images");
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto ctx = where("images", i);
        Image im;
        im.id = require_int(images[i], "id", ctx);
        im.width = require_number(images[i], "width", ctx);
        im.height = require_number(images[i], "height", ctx);
        if (auto it = images[i].find("file_name"); it != images[i].end() && it->is_string()) {
            im.file_name = it->get<std::string>();
        }
        ds.images.push_back(std::move(im));
    }

    const auto& anns = require_array(root, "annotations");
    for (std::size_t i = 0; i < anns.size(); ++i) {
        const auto ctx = where("annotations", i);
        Annotation a;
        if (anns[i].is_object() && anns[i].contains("id")) a.id = require_int(anns[i], "id", ctx);
        a.image_id = require_int(anns[i], "image_id", ctx);
        a.category_id = require_int(anns[i], "category_id", ctx);
        const auto& bb = require(anns[i], "bbox", ctx);
        if (!bb.is_array() || bb.size() != 4) throw ParseError(ctx + ": bbox must have 4 numbers");
        for (std::size_t k = 0; k < 4; ++k) {
            if (!bb[k].is_number()) throw ParseError(ctx + ": bbox must have 4 numbers");
            a.bbox[k] = bb[k].get<double>();
        }
        ds.annotations.push_back(a);
    }

    const auto& cats = require_array(root, "categories");
    for (std::size_t i = 0; i < cats.size(); ++i) {
        const auto ctx = where("categories", i);
        Category c;
        c.id = require_int(cats[i], "id", ctx);
        const auto& name = require(cats[i], "name", ctx);
        if (!name.is_string()) throw ParseError(ctx + ": 'name' must be a string");
        c.name = name.get<std::string>();
        ds.categories.push_back(std::move(c));
    }
    return ds;
}

Dataset load(const std::string& path) {
    return parse(read_file(path));
}

std::vector<std::string> check(std::string_view text) {
    std::vector<std::string> problems;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        problems.push_back(std::string("invalid JSON: ") + e.what());
        return problems;
    }
    if (!root.is_object()) {
        problems.emplace_back("top level is not an object");
        return problems;
    }
    for (const char* key : {"images", "annotations", "categories"}) {
        if (!root.contains(key) || !root[key].is_array()) {
            problems.push_back(std::string("missing array '") + key + "'");
        }
    }
    if (!problems.empty()) return problems;

    struct Dims {
        double w, h;
    };
    std::map<std::int64_t, Dims> images;
    for (std::size_t i = 0; i < root["images"].size(); ++i) {
        const auto& im = root["images"][i];
        const auto ctx = where("images", i);
        if (!im.is_object() || !im.contains("id") || !im["id"].is_number_integer()) {
            problems.push_back(ctx + ": id must be an integer");
            continue;
        }
        if (!im.contains("file_name") || !im["file_name"].is_string()) {
            problems.push_back(ctx + ": file_name must be a string");
        }
        const bool dims_ok = im.contains("width") && im["width"].is_number() &&
                             im.contains("height") && im["height"].is_number() &&
                             im["width"].get<double>() > 0 && im["height"].get<double>() > 0;
        if (!dims_ok) problems.push_back(ctx + ": width/height must be positive numbers");
        const auto id = im["id"].get<std::int64_t>();
        Dims d{dims_ok ? im["width"].get<double>() : 0.0, dims_ok ? im["height"].get<double>() : 0.0};
        if (!images.emplace(id, d).second) problems.push_back(ctx + ": duplicate image id");
    }

    std::set<std::int64_t> categories;
    for (std::size_t i = 0; i < root["categories"].size(); ++i) {
        const auto& c = root["categories"][i];
        const auto ctx = where("categories", i);
        if (!c.is_object() || !c.contains("id") || !c["id"].is_number_integer()) {
            problems.push_back(ctx + ": id must be an integer");
            continue;
        }
        if (!c.contains("name") || !c["name"].is_string() || c["name"].get<std::string>().empty()) {
            problems.push_back(ctx + ": name must be a non-empty string");
        }
        if (!categories.insert(c["id"].get<std::int64_t>()).second) {
            problems.push_back(ctx + ": duplicate category id");
        }
    }

    bool have_prev = false;
    std::int64_t prev_id = 0;
    for (std::size_t i = 0; i < root["annotations"].size(); ++i) {
        const auto& a = root["annotations"][i];
        const auto ctx = where("annotations", i);
        if (!a.is_object()) {
            problems.push_back(ctx + ": not an object");
            continue;
        }
        for (const char* key : {"id", "image_id", "category_id"}) {
            if (!a.contains(key) || !a[key].is_number_integer()) {
                problems.push_back(ctx + ": " + key + " must be an integer");
            }
        }
        if (a.contains("id") && a["id"].is_number_integer()) {
            const auto id = a["id"].get<std::int64_t>();
            if (have_prev && id <= prev_id) problems.push_back(ctx + ": ids not strictly increasing");
            have_prev = true;
            prev_id = id;
        }
        const Dims* dims = nullptr;
        if (a.contains("image_id") && a["image_id"].is_number_integer()) {
            auto it = images.find(a["image_id"].get<std::int64_t>());
            if (it == images.end()) {
                problems.push_back(ctx + ": image_id does not reference an image");
            } else {
                dims = &it->second;
            }
        }
        if (a.contains("category_id") && a["category_id"].is_number_integer() &&
            !categories.contains(a["category_id"].get<std::int64_t>())) {
            problems.push_back(ctx + ": category_id does not reference a category");
        }
        if (a.contains("iscrowd") && !(a["iscrowd"] == 0 || a["iscrowd"] == 1)) {
            problems.push_back(ctx + ": iscrowd must be 0 or 1");
        }
        const auto& bb = a.contains("bbox") ? a["bbox"] : json();
        bool bb_ok = bb.is_array() && bb.size() == 4;
        for (std::size_t k = 0; bb_ok && k < 4; ++k) {
            bb_ok = bb[k].is_number() && std::isfinite(bb[k].get<double>());
        }
        if (!bb_ok) {
            problems.push_back(ctx + ": bbox must be 4 finite numbers");
            continue;
        }
        const double x = bb[0], y = bb[1], w = bb[2], h = bb[3];
        if (x < 0 || y < 0 || w <= 0 || h <= 0) {
            problems.push_back(ctx + ": bbox has negative origin or non-positive size");
        }
        constexpr double kSlack = 0.011;  // two-decimal rounding of x and w
        if (dims && dims->w > 0 && (x + w > dims->w + kSlack || y + h > dims->h + kSlack)) {
            problems.push_back(ctx + ": bbox extends past the image");
        }
        if (!a.contains("area") || !a["area"].is_number()) {
            problems.push_back(ctx + ": area must be a number");
        } else if (std::abs(a["area"].get<double>() - w * h) > kSlack * (w + h + 1.0)) {
            problems.push_back(ctx + ": area disagrees with bbox");
        }
    }
    return problems;
}

}  // namespace lsynth::coco

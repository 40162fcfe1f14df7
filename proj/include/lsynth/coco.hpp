// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lsynth::coco {

struct Image {
    std::int64_t id = 0;
    std::string file_name;
    double width = 0.0;
    double height = 0.0;
};

struct Annotation {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    std::int64_t category_id = 0;
    std::array<double, 4> bbox{};  // pixel x, y, w, h
};

struct Category {
    std::int64_t id = 0;
    std::string name;
};

struct Dataset {
    std::vector<Image> images;
    std::vector<Annotation> annotations;
    std::vector<Category> categories;
};

/// Parses a COCO instance-annotation document. Throws ParseError naming the
/// offending record (e.g. "annotations[3]: bbox must have 4 numbers").
Dataset parse(std::string_view text);
Dataset load(const std::string& path);

/// Structural checks against the COCO instance schema. Returns one message
/// per problem; empty means the document is valid.
std::vector<std::string> check(std::string_view text);

}  // namespace lsynth::coco

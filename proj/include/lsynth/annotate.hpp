// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lsynth/candidate.hpp"
#include "lsynth/filtering.hpp"
#include "lsynth/layout.hpp"

namespace lsynth {

/// Replaces each instance box with the box of a same-category detection
/// matched at IoU > 0.5 (same greedy matching as filtering); unmatched
/// instances keep their box.
Layout post_refine(const Layout& layout, std::span<const Detection> detections);

/// Annotation kinds a task may ask for.
enum class AnnotationFormat { Bbox, Mask, GlobalCaption, RegionCaption, Relation };

std::string_view to_string(AnnotationFormat f);
AnnotationFormat parse_annotation_format(std::string_view s);

struct Relation {
    int subject = 0;
    std::string predicate;
    int object = 0;

    friend bool operator==(const Relation&, const Relation&) = default;
};

/// Payloads produced by optional annotator backends. The engine passes them
/// through; it never synthesizes them.
struct AnnotationExtras {
    std::optional<std::string> global_caption;
    std::optional<std::map<int, std::string>> region_captions;  // instance id -> caption
    std::optional<std::vector<Relation>> relations;
    std::optional<std::map<int, std::string>> masks;  // instance id -> mask file or RLE
};

struct AnnotatedInstance {
    int id = 0;
    std::string label;
    std::string cate;
    BBox bbox;
    std::string desc;

    friend bool operator==(const AnnotatedInstance&, const AnnotatedInstance&) = default;
};

struct AnnotationDocument {
    CandidateImage image;
    std::vector<AnnotatedInstance> instances;
    AnnotationExtras extras;
    std::set<AnnotationFormat> formats_emitted;
};

/// Builds the document for `image` from its (post-refined) layout. Throws
/// UnavailableAnnotation when a requested format lacks its payload.
AnnotationDocument assemble(const CandidateImage& image, const Layout& layout,
                            const AnnotationExtras& extras, const std::set<AnnotationFormat>& formats);

/// Ordered category names. COCO ids are 1-based positions, YOLO class
/// indices 0-based positions.
class CategoryRegistry {
public:
    CategoryRegistry() = default;
    explicit CategoryRegistry(const std::vector<std::string>& names);

    /// Appends `name` unless already present (case-insensitive).
    void add(const std::string& name);

    /// Throws UnknownCategory.
    std::size_t class_index(std::string_view name) const;
    std::int64_t coco_id(std::string_view name) const { return static_cast<std::int64_t>(class_index(name)) + 1; }

    const std::vector<std::string>& names() const noexcept { return names_; }

    /// classes.txt: one name per line in class-index order.
    std::string classes_txt() const;

private:
    std::vector<std::string> names_;
};

/// COCO instance file. Image ids are 1-based document positions; boxes are
/// pixel [x, y, w, h]; floats at 2 decimal places. file_name is the image
/// path's filename.
std::string emit_coco(std::span<const AnnotationDocument> documents, const CategoryRegistry& registry);

/// "<class> <cx> <cy> <w> <h>" per instance, normalized, 6 decimal places.
/// Lines carry no terminator.
std::vector<std::string> emit_yolo(const AnnotationDocument& document, const CategoryRegistry& registry);

/// Joins YOLO lines, each newline-terminated.
std::string yolo_file(const std::vector<std::string>& lines);

/// One-line JSON record per document for downstream tooling.
nlohmann::json document_record(const AnnotationDocument& document);

}  // namespace lsynth

// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/annotate.hpp"

#include <filesystem>
#include <sstream>

#include "lsynth/error.hpp"
#include "lsynth/layout_json.hpp"
#include "lsynth/text.hpp"

namespace lsynth {

Layout post_refine(const Layout& layout, std::span<const Detection> detections) {
    const auto report = match_detections(layout, detections);
    Layout out = layout;
    for (std::size_t i = 0; i < out.instances.size(); ++i) {
        const auto& m = report.instances[i];
        if (m.matched) out.instances[i].bbox = detections[*m.detection].bbox;
    }
    return out;
}

std::string_view to_string(AnnotationFormat f) {
    switch (f) {
        case AnnotationFormat::Bbox: return "bbox";
        case AnnotationFormat::Mask: return "mask";
        case AnnotationFormat::GlobalCaption: return "global_caption";
        case AnnotationFormat::RegionCaption: return "region_caption";
        case AnnotationFormat::Relation: return "relation";
    }
    return "?";
}

AnnotationFormat parse_annotation_format(std::string_view s) {
    const auto l = to_lower(trim(s));
    for (auto f : {AnnotationFormat::Bbox, AnnotationFormat::Mask, AnnotationFormat::GlobalCaption,
                   AnnotationFormat::RegionCaption, AnnotationFormat::Relation}) {
        if (to_string(f) == l) return f;
    }
    throw std::invalid_argument("unknown annotation format '" + std::string(s) + "'");
}

AnnotationDocument assemble(const CandidateImage& image, const Layout& layout,
                            const AnnotationExtras& extras, const std::set<AnnotationFormat>& formats) {
    AnnotationDocument doc;
    doc.image = image;
    for (const auto& inst : layout.instances) {
        doc.instances.push_back({inst.id, inst.label, inst.cate, inst.bbox, inst.desc});
    }
    for (const auto f : formats) {
        switch (f) {
            case AnnotationFormat::Bbox:
                break;
            case AnnotationFormat::Mask:
                if (!extras.masks) throw UnavailableAnnotation("mask");
                doc.extras.masks = extras.masks;
                break;
            case AnnotationFormat::GlobalCaption:
                if (!extras.global_caption) throw UnavailableAnnotation("global_caption");
                doc.extras.global_caption = extras.global_caption;
                break;
            case AnnotationFormat::RegionCaption:
                if (!extras.region_captions) throw UnavailableAnnotation("region_caption");
                doc.extras.region_captions = extras.region_captions;
                break;
            case AnnotationFormat::Relation:
                if (!extras.relations) throw UnavailableAnnotation("relation");
                doc.extras.relations = extras.relations;
                break;
        }
        doc.formats_emitted.insert(f);
    }
    return doc;
}

CategoryRegistry::CategoryRegistry(const std::vector<std::string>& names) {
    for (const auto& n : names) add(n);
}

void CategoryRegistry::add(const std::string& name) {
    if (name.empty()) throw std::invalid_argument("empty category name");
    for (const auto& n : names_) {
        if (iequals(n, name)) return;
    }
    names_.push_back(name);
}

std::size_t CategoryRegistry::class_index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (iequals(names_[i], name)) return i;
    }
    throw UnknownCategory(std::string(name));
}

std::string CategoryRegistry::classes_txt() const {
    std::string out;
    for (const auto& n : names_) out += n + "\n";
    return out;
}

namespace {

std::string q(const std::string& s) {
    return nlohmann::json(s).dump();
}

std::string f2(double v) {
    return format_fixed(v, 2);
}

}  // namespace

std::string emit_coco(std::span<const AnnotationDocument> documents, const CategoryRegistry& registry) {
    // Resolve every category first so an unknown one fails before any output.
    for (const auto& doc : documents) {
        for (const auto& inst : doc.instances) registry.class_index(inst.cate);
    }

    std::ostringstream out;
    out << "{\n\"images\": [";
    for (std::size_t i = 0; i < documents.size(); ++i) {
        const auto& im = documents[i].image;
        out << (i == 0 ? "\n" : ",\n") << "  {\"id\": " << i + 1 << ", \"file_name\": "
            << q(std::filesystem::path(im.path).filename().string()) << ", \"width\": " << im.width
            << ", \"height\": " << im.height << "}";
    }
    out << (documents.empty() ? "],\n" : "\n],\n");

    out << "\"annotations\": [";
    std::int64_t next_id = 1;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        const auto& doc = documents[i];
        const double w = doc.image.width;
        const double h = doc.image.height;
        for (const auto& inst : doc.instances) {
            const double bx = inst.bbox.x_min() * w;
            const double by = inst.bbox.y_min() * h;
            const double bw = inst.bbox.width() * w;
            const double bh = inst.bbox.height() * h;
            out << (next_id == 1 ? "\n" : ",\n") << "  {\"id\": " << next_id << ", \"image_id\": " << i + 1
                << ", \"category_id\": " << registry.coco_id(inst.cate) << ", \"bbox\": [" << f2(bx) << ", "
                << f2(by) << ", " << f2(bw) << ", " << f2(bh) << "], \"area\": " << f2(bw * bh)
                << ", \"iscrowd\": 0}";
            ++next_id;
        }
    }
    out << (next_id == 1 ? "],\n" : "\n],\n");

    out << "\"categories\": [";
    const auto& names = registry.names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << (i == 0 ? "\n" : ",\n") << "  {\"id\": " << i + 1 << ", \"name\": " << q(names[i]) << "}";
    }
    out << (names.empty() ? "]\n}\n" : "\n]\n}\n");
    return out.str();
}

std::vector<std::string> emit_yolo(const AnnotationDocument& document, const CategoryRegistry& registry) {
    std::vector<std::string> lines;
    lines.reserve(document.instances.size());
    for (const auto& inst : document.instances) {
        const auto cls = registry.class_index(inst.cate);
        const auto c = inst.bbox.center();
        lines.push_back(std::to_string(cls) + " " + format_fixed(c.x, 6) + " " + format_fixed(c.y, 6) + " " +
                        format_fixed(inst.bbox.width(), 6) + " " + format_fixed(inst.bbox.height(), 6));
    }
    return lines;
}

std::string yolo_file(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

nlohmann::json document_record(const AnnotationDocument& document) {
    using nlohmann::json;
    json j = {{"image", {{"file_name", std::filesystem::path(document.image.path).filename().string()},
                         {"width", document.image.width},
                         {"height", document.image.height},
                         {"generator", document.image.generator},
                         {"seed", document.image.seed}}},
              {"instances", json::array()},
              {"formats", json::array()}};
    for (const auto& inst : document.instances) {
        j["instances"].push_back({{"id", inst.id},
                                  {"label", inst.label},
                                  {"cate", inst.cate},
                                  {"desc", inst.desc},
                                  {"bbox", json_codec::encode(inst.bbox)}});
    }
    for (const auto f : document.formats_emitted) j["formats"].push_back(std::string(to_string(f)));
    const auto& x = document.extras;
    if (x.global_caption) j["global_caption"] = *x.global_caption;
    if (x.region_captions) {
        for (const auto& [id, cap] : *x.region_captions) j["region_captions"][std::to_string(id)] = cap;
    }
    if (x.relations) {
        j["relations"] = json::array();
        for (const auto& r : *x.relations) {
            j["relations"].push_back({{"subject", r.subject}, {"predicate", r.predicate}, {"object", r.object}});
        }
    }
    if (x.masks) {
        for (const auto& [id, m] : *x.masks) j["masks"][std::to_string(id)] = m;
    }
    return j;
}

}  // namespace lsynth

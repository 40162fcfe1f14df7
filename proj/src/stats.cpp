// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "lsynth/error.hpp"
#include "lsynth/text.hpp"

namespace lsynth {

void CategoryStats::validate() const {
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("category stats '" + category + "': " + why);
    };
    if (category.empty()) fail("empty category name");
    if (category.find_first_of("\t\n\r") != std::string::npos) fail("name contains tab or newline");
    if (!std::isfinite(width_mean) || !(width_mean > 0.0) || width_mean > 1.0) {
        fail("width_mean outside (0,1]");
    }
    if (!std::isfinite(aspect_mean) || !(aspect_mean > 0.0)) fail("aspect_mean must be > 0");
    if (!std::isfinite(width_std) || width_std < 0.0) fail("width_std must be >= 0");
    if (!std::isfinite(aspect_std) || aspect_std < 0.0) fail("aspect_std must be >= 0");
    if (sample_count < 1) fail("sample_count must be >= 1");
    if (sample_count < 2 && (width_std != 0.0 || aspect_std != 0.0)) {
        fail("a single sample cannot have a spread");
    }
}

void StatsTable::insert(CategoryStats stats) {
    stats.validate();
    auto name = stats.category;
    if (!entries_.emplace(std::move(name), std::move(stats)).second) {
        throw std::invalid_argument("duplicate category in stats table");
    }
}

const CategoryStats* StatsTable::find(std::string_view category) const {
    auto it = entries_.find(category);
    return it == entries_.end() ? nullptr : &it->second;
}

const CategoryStats& StatsTable::find_or_default(std::string_view category) const {
    if (const auto* s = find(category)) return *s;
    if (global_) return *global_;
    return builtin_default();
}

void StatsTable::set_global(CategoryStats stats) {
    stats.validate();
    global_ = std::move(stats);
}

const CategoryStats& StatsTable::builtin_default() {
    static const CategoryStats kDefault{"default", 0.3, 0.1, 1.0, 0.3, 2};
    return kDefault;
}

namespace {

// Welford running mean / population variance.
class Moments {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double pstd() const { return n_ < 2 ? 0.0 : std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_))); }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Accumulator {
    Moments width;
    Moments aspect;

    CategoryStats finish(std::string name) const {
        return CategoryStats{std::move(name), width.mean(), width.pstd(), aspect.mean(),
                             aspect.pstd(), width.count()};
    }
};

}  // namespace

FitResult fit_category_stats(const coco::Dataset& dataset, std::string source,
                             const std::vector<std::string>& only) {
    std::unordered_map<std::int64_t, const coco::Image*> images;
    for (const auto& im : dataset.images) images.emplace(im.id, &im);
    std::unordered_map<std::int64_t, std::string> names;
    for (const auto& c : dataset.categories) {
        if (c.name.empty()) throw ParseError("category " + std::to_string(c.id) + ": empty name");
        names.emplace(c.id, c.name);
    }
    const std::set<std::string, std::less<>> wanted(only.begin(), only.end());

    FitResult result;
    result.table = StatsTable(std::move(source));
    std::map<std::string, Accumulator> acc;
    Accumulator pooled;

    for (std::size_t i = 0; i < dataset.annotations.size(); ++i) {
        const auto& a = dataset.annotations[i];
        const auto ctx = "annotations[" + std::to_string(i) + "]";
        auto im = images.find(a.image_id);
        if (im == images.end()) {
            throw ParseError(ctx + ": image_id " + std::to_string(a.image_id) + " not found");
        }
        auto name = names.find(a.category_id);
        if (name == names.end()) {
            throw ParseError(ctx + ": category_id " + std::to_string(a.category_id) + " not found");
        }
        if (!wanted.empty() && !wanted.contains(name->second)) continue;

        const double iw = im->second->width;
        const double ih = im->second->height;
        const double bw = a.bbox[2];
        const double bh = a.bbox[3];
        if (!(iw > 0.0) || !(ih > 0.0) || !(bw > 0.0) || !(bh > 0.0) || !std::isfinite(bw) ||
            !std::isfinite(bh)) {
            ++result.rejected_records;
            continue;
        }
        const double w = bw / iw;
        const double aspect = (bh / ih) / w;
        auto& slot = acc[name->second];
        slot.width.add(w);
        slot.aspect.add(aspect);
        pooled.width.add(w);
        pooled.aspect.add(aspect);
    }

    for (const auto& [name, a] : acc) {
        auto s = a.finish(name);
        s.width_mean = std::min(s.width_mean, 1.0);
        result.table.insert(std::move(s));
    }
    if (pooled.width.count() > 0) {
        auto g = pooled.finish("*");
        g.width_mean = std::min(g.width_mean, 1.0);
        result.table.set_global(std::move(g));
    }
    return result;
}

EmpiricalSample sample_empirical(const CategoryStats& stats, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    double zw = 0.0;
    for (int i = 0; i < kEmpiricalDraws; ++i) zw += z(rng);
    double za = 0.0;
    for (int i = 0; i < kEmpiricalDraws; ++i) za += z(rng);
    zw /= kEmpiricalDraws;
    za /= kEmpiricalDraws;
    return {std::max(kEmpiricalFloor, stats.width_mean + stats.width_std * zw),
            std::max(kEmpiricalFloor, stats.aspect_mean + stats.aspect_std * za)};
}

namespace {

constexpr std::string_view kHeader = "# lsynth category stats v1";

void write_row(std::ostringstream& out, std::string_view tag, const CategoryStats& s,
               bool with_name) {
    out << tag;
    if (with_name) out << '\t' << s.category;
    out << '\t' << format_exact(s.width_mean) << '\t' << format_exact(s.width_std) << '\t'
        << format_exact(s.aspect_mean) << '\t' << format_exact(s.aspect_std) << '\t'
        << s.sample_count << '\n';
}

double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("stats line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

CategoryStats parse_row(const std::vector<std::string>& f, std::size_t first, std::string name,
                        std::size_t line) {
    CategoryStats s;
    s.category = std::move(name);
    s.width_mean = parse_double(f[first], line);
    s.width_std = parse_double(f[first + 1], line);
    s.aspect_mean = parse_double(f[first + 2], line);
    s.aspect_std = parse_double(f[first + 3], line);
    try {
        std::size_t used = 0;
        s.sample_count = std::stoull(f[first + 4], &used);
        if (used != f[first + 4].size()) throw std::invalid_argument("count");
    } catch (const std::exception&) {
        throw ParseError("stats line " + std::to_string(line) + ": bad sample count");
    }
    return s;
}

}  // namespace

std::string serialize_stats(const StatsTable& table) {
    std::ostringstream out;
    out << kHeader << '\n';
    out << "# entry\tcategory\twidth_mean\twidth_std\taspect_mean\taspect_std\tsample_count\n";
    out << "source\t" << table.source() << '\n';
    if (table.global()) write_row(out, "global", *table.global(), false);
    for (const auto& [_, s] : table.entries()) write_row(out, "entry", s, true);
    return out.str();
}

StatsTable parse_stats(std::string_view text) {
    StatsTable table;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string line = raw;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto f = split(line, '\t');
        try {
            if (f[0] == "source" && f.size() == 2) {
                table = StatsTable(f[1]);
            } else if (f[0] == "global" && f.size() == 6) {
                table.set_global(parse_row(f, 1, "*", line_no));
            } else if (f[0] == "entry" && f.size() == 7) {
                table.insert(parse_row(f, 2, f[1], line_no));
            } else {
                throw ParseError("stats line " + std::to_string(line_no) + ": unrecognized record");
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError("stats line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

StatsTable load_stats(const std::string& path) {
    return parse_stats(read_file(path));
}

}  // namespace lsynth

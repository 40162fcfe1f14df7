// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsynth/coco.hpp"
#include "lsynth/rng.hpp"

namespace lsynth {

/// Normal fits of one category's normalized box width and height/width
/// aspect over a reference dataset.
struct CategoryStats {
    std::string category;
    double width_mean = 0.0;
    double width_std = 0.0;
    double aspect_mean = 1.0;
    double aspect_std = 0.0;
    std::size_t sample_count = 0;

    /// Throws std::invalid_argument when an invariant does not hold.
    void validate() const;

    friend bool operator==(const CategoryStats&, const CategoryStats&) = default;
};

class StatsTable {
public:
    StatsTable() = default;
    explicit StatsTable(std::string source) : source_(std::move(source)) {}

    void insert(CategoryStats stats);

    /// Strict lookup by category name.
    const CategoryStats* find(std::string_view category) const;

    /// Lookup that falls back to the pooled all-category entry, then to a
    /// built-in default.
    const CategoryStats& find_or_default(std::string_view category) const;

    void set_global(CategoryStats stats);
    const std::optional<CategoryStats>& global() const noexcept { return global_; }

    const std::map<std::string, CategoryStats, std::less<>>& entries() const noexcept {
        return entries_;
    }
    const std::string& source() const noexcept { return source_; }
    bool empty() const noexcept { return entries_.empty(); }

    friend bool operator==(const StatsTable&, const StatsTable&) = default;

    static const CategoryStats& builtin_default();

private:
    std::map<std::string, CategoryStats, std::less<>> entries_;
    std::optional<CategoryStats> global_;
    std::string source_;
};

struct FitResult {
    StatsTable table;
    std::size_t rejected_records = 0;  // zero-size images or boxes
};

/// Fits per-category width/aspect normals (population std) from COCO
/// instance annotations. Boxes are normalized by their own image's size.
/// `only` restricts the fit to the named categories when non-empty.
FitResult fit_category_stats(const coco::Dataset& dataset, std::string source = {},
                             const std::vector<std::string>& only = {});

struct EmpiricalSample {
    double width = 0.0;
    double aspect = 0.0;
};

/// Number of normal draws averaged per returned value.
inline constexpr int kEmpiricalDraws = 100;
inline constexpr double kEmpiricalFloor = 0.01;

/// Averages 100 width draws then 100 aspect draws from the category's
/// normals; each result is floored at 0.01.
EmpiricalSample sample_empirical(const CategoryStats& stats, Rng& rng);

/// Tab-separated stats file. Floats are written in shortest round-trip form.
std::string serialize_stats(const StatsTable& table);
StatsTable parse_stats(std::string_view text);
StatsTable load_stats(const std::string& path);

}  // namespace lsynth

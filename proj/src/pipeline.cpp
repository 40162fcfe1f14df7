// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <map>
#include <mutex>

#include "json.hpp"
#include "lsynth/error.hpp"
#include "lsynth/layout_json.hpp"
#include "lsynth/rng.hpp"
#include "lsynth/simulators.hpp"
#include "lsynth/stats.hpp"
#include "lsynth/text.hpp"

namespace lsynth {

namespace fs = std::filesystem;
using nlohmann::json;
using protocol::Role;

// Stream tags keep the seeds of different pipeline stages apart.
namespace {
constexpr std::uint64_t kRequestStream = 1;
constexpr std::uint64_t kLayoutStream = 2;
constexpr std::uint64_t kAdjustStream = 3;
constexpr std::uint64_t kGenerateStream = 4;
}  // namespace

// ---- config ----------------------------------------------------------------------

void PipelineConfig::validate() const {
    auto fail = [](const std::string& why) { throw ConfigError("config: " + why); };
    if (stats_path.empty()) fail("'stats' is required");
    if (categories.empty()) fail("category list is empty");
    for (const auto& c : categories) {
        if (c.empty()) fail("empty category name");
    }
    if (generator.empty()) fail("'generator' is required");
    if (detectors.empty()) fail("at least one 'detector' is required");
    if (scorer.empty()) fail("'scorer' is required");
    if (refiner && *refiner >= detectors.size()) fail("'refiner' does not name a configured detector");
    if (images < 1) fail("'images' must be >= 1");
    if (instances_min < 1 || instances_min > instances_max) fail("'instances' range is empty");
    if (static_cast<std::size_t>(instances_max) > max_instances) fail("'instances' exceeds 'max_instances'");
    if (candidates < 1) fail("'k' must be >= 1");
    if (max_regenerations < 0) fail("'max_regenerations' must be >= 0");
    if (parallelism < 1) fail("'parallelism' must be >= 1");
    if (output_dir.empty()) fail("'output' is required");
    if (image_width < 1 || image_height < 1) fail("image size must be positive");
    if (proposer_retries < 0) fail("'proposer_retries' must be >= 0");
    if (timeout.count() <= 0) fail("'timeout_s' must be positive");
    try {
        style.validate();
    } catch (const ContractViolation& e) {
        fail(e.what());
    }
}

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& value, std::size_t line) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' expects an integer, got '" +
                          value + "'");
    }
    return out;
}

double parse_real(const std::string& key, const std::string& value, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + value +
                      "'");
}

std::vector<std::string> comma_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& part : split(value, ',')) {
        auto t = trim(part);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

std::string resolve(const fs::path& base, const std::string& value) {
    const fs::path p(value);
    if (p.is_absolute() || base.empty()) return p.string();
    return (base / p).lexically_normal().string();
}

// Relative file operands inside a command line are left alone; only sim
// options naming files are resolved.
std::string resolve_backend(const fs::path& base, const std::string& spec) {
    if (!spec.starts_with("sim:") || base.empty()) return spec;
    std::string out;
    for (const auto& tok : split(spec, ' ')) {
        if (tok.starts_with("stats=")) {
            out += "stats=" + resolve(base, tok.substr(6));
        } else {
            out += tok;
        }
        out += ' ';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
    PipelineConfig c;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = to_lower(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (key != "detector" && !seen.insert(key).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        const auto n = line_no;
        if (key == "stats") {
            c.stats_path = resolve(base_dir, value);
        } else if (key == "categories") {
            c.categories = comma_list(value);
        } else if (key == "proposer") {
            if (value != "fallback") c.proposer = resolve_backend(base_dir, value);
        } else if (key == "generator") {
            c.generator = resolve_backend(base_dir, value);
        } else if (key == "detector") {
            c.detectors.push_back(resolve_backend(base_dir, value));
        } else if (key == "scorer") {
            c.scorer = resolve_backend(base_dir, value);
        } else if (key == "refiner") {
            c.refiner = parse_integer<std::size_t>(key, value, n);
        } else if (key == "images") {
            c.images = parse_integer<int>(key, value, n);
        } else if (key == "instances") {
            const auto dash = value.find('-');
            if (dash == std::string::npos) {
                c.instances_min = c.instances_max = parse_integer<int>(key, value, n);
            } else {
                c.instances_min = parse_integer<int>(key, trim(value.substr(0, dash)), n);
                c.instances_max = parse_integer<int>(key, trim(value.substr(dash + 1)), n);
            }
        } else if (key == "k") {
            c.candidates = parse_integer<int>(key, value, n);
        } else if (key == "formats") {
            c.formats.clear();
            for (const auto& f : comma_list(value)) {
                try {
                    c.formats.insert(parse_annotation_format(f));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
                }
            }
        } else if (key == "seed") {
            c.master_seed = parse_integer<std::uint64_t>(key, value, n);
        } else if (key == "output") {
            c.output_dir = resolve(base_dir, value);
        } else if (key == "max_regenerations") {
            c.max_regenerations = parse_integer<int>(key, value, n);
        } else if (key == "parallelism") {
            c.parallelism = parse_integer<int>(key, value, n);
        } else if (key == "score_mode") {
            try {
                c.score_mode = parse_score_mode(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
            }
        } else if (key == "image_width") {
            c.image_width = parse_integer<int>(key, value, n);
        } else if (key == "image_height") {
            c.image_height = parse_integer<int>(key, value, n);
        } else if (key == "style_early") {
            c.style.early_weight = parse_real(key, value, n);
        } else if (key == "style_late") {
            c.style.late_weight = parse_real(key, value, n);
        } else if (key == "style_boundary") {
            c.style.boundary = parse_integer<int>(key, value, n);
        } else if (key == "style_steps") {
            c.style.total_steps = parse_integer<int>(key, value, n);
        } else if (key == "style_ref") {
            c.style_ref = resolve(base_dir, value);
        } else if (key == "max_instances") {
            c.max_instances = parse_integer<std::size_t>(key, value, n);
        } else if (key == "proposer_retries") {
            c.proposer_retries = parse_integer<int>(key, value, n);
        } else if (key == "timeout_s") {
            c.timeout = std::chrono::milliseconds(static_cast<long long>(parse_real(key, value, n) * 1000.0));
        } else {
            throw ConfigError("config line " + std::to_string(n) + ": unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.parent_path());
}

LayoutRequest sample_request(const PipelineConfig& config, std::size_t index) {
    if (config.categories.empty()) throw ConfigError("config: category list is empty");
    Rng rng(derive_seed(config.master_seed, {kRequestStream, index}));
    const int count = std::uniform_int_distribution<int>(config.instances_min, config.instances_max)(rng);
    std::uniform_int_distribution<std::size_t> pick(0, config.categories.size() - 1);

    LayoutRequest req;
    for (int i = 0; i < count; ++i) {
        const auto& name = config.categories[pick(rng)];
        auto it = std::find_if(req.categories.begin(), req.categories.end(),
                               [&](const CategoryCount& c) { return c.name == name; });
        if (it == req.categories.end()) {
            req.categories.push_back({name, 1});
        } else {
            ++it->count;
        }
    }
    req.style_ref = config.style_ref;
    req.seed = derive_seed(config.master_seed, {index});
    return req;
}

// ---- report --------------------------------------------------------------------------

std::string serialize_report(const RunReport& report) {
    json j = {{"attempted", report.attempted},
              {"emitted", report.emitted},
              {"abandoned", report.abandoned},
              {"candidate_attempts", report.candidate_attempts},
              {"partial", report.partial},
              {"images", json::array()}};
    if (report.partial) j["abort_reason"] = report.abort_reason;
    for (const auto& r : report.images) {
        json rec = {{"index", r.index},
                    {"emitted", r.emitted},
                    {"accepted_candidates", r.accepted_candidates},
                    {"attempted_candidates", r.attempted_candidates},
                    {"regenerations", r.regenerations}};
        if (r.selected) {
            rec["selected"] = *r.selected;
            rec["quality"] = r.quality;
            rec["position"] = r.position;
            rec["image"] = r.image_file;
        }
        if (r.layout) rec["layout"] = json_codec::encode(*r.layout);
        j["images"].push_back(std::move(rec));
    }
    return j.dump(2) + "\n";
}

// ---- backends -------------------------------------------------------------------------

std::unique_ptr<BackendClient> connect_backend(const std::string& spec, Role role, const std::string& name,
                                               std::chrono::milliseconds timeout) {
    std::unique_ptr<Endpoint> endpoint;
    if (spec.starts_with("sim:")) {
        auto server = sim::make_sim_server(spec.substr(4));
        if (server->role() != role) {
            throw ConfigError("backend '" + name + "': simulator is a " + std::string(to_string(server->role())) +
                              ", expected a " + std::string(to_string(role)));
        }
        endpoint = std::make_unique<LoopbackEndpoint>(std::move(server));
    } else {
        endpoint = std::make_unique<ProcessEndpoint>(spec);
    }
    auto client = std::make_unique<BackendClient>(std::move(endpoint), role, name, timeout);
    client->handshake();
    return client;
}

WorkerBackends connect_worker(const PipelineConfig& config) {
    WorkerBackends w;
    if (config.proposer) w.proposer = connect_backend(*config.proposer, Role::Proposer, "proposer", config.timeout);
    w.generator = connect_backend(config.generator, Role::Generator, "generator", config.timeout);
    std::set<std::string> names;
    for (std::size_t i = 0; i < config.detectors.size(); ++i) {
        auto d = connect_backend(config.detectors[i], Role::Detector, "detector" + std::to_string(i),
                                 config.timeout);
        if (!names.insert(d->hello().name).second) {
            throw ConfigError("detectors must declare distinct names; '" + d->hello().name + "' repeats");
        }
        w.detectors.push_back(std::move(d));
    }
    w.scorer = connect_backend(config.scorer, Role::Scorer, "scorer", config.timeout);
    return w;
}

namespace {

void check_formats(const PipelineConfig& config) {
    // No annotator backends are wired into the pipeline, so only formats
    // without payload prerequisites can be produced.
    try {
        const Layout probe{"", {}, std::nullopt};
        assemble(CandidateImage{"probe", 1, 1, "", 0}, probe, AnnotationExtras{}, config.formats);
    } catch (const UnavailableAnnotation& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

StatsTable load_stats_for(const PipelineConfig& config) {
    try {
        return load_stats(config.stats_path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot load stats: ") + e.what());
    }
}

class ClientProposer final : public LayoutProposer {
public:
    explicit ClientProposer(BackendClient& client) : client_(client) {}
    Layout propose(const LayoutRequest& request) override { return client_.propose(request); }

private:
    BackendClient& client_;
};

std::string image_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", index);
    return buf;
}

struct Outcome {
    ImageRecord record;
    std::optional<AnnotationDocument> document;
    std::string scratch_image;
};

struct RunContext {
    const PipelineConfig& config;
    const StatsTable& stats;
    fs::path scratch;
};

Outcome process_image(const RunContext& ctx, std::size_t index, WorkerBackends& w) {
    const auto& cfg = ctx.config;
    Outcome out;
    out.record.index = index;
    const LayoutRequest base_request = sample_request(cfg, index);
    const auto schedule = expand(cfg.style);

    for (int attempt = 0; attempt <= cfg.max_regenerations; ++attempt) {
        const auto a = static_cast<std::uint64_t>(attempt);
        LayoutRequest request = base_request;
        request.seed = derive_seed(cfg.master_seed, {kLayoutStream, index, a});

        Layout layout;
        if (w.proposer) {
            ClientProposer proposer(*w.proposer);
            layout = propose_layout(request, proposer, cfg.proposer_retries, cfg.max_instances);
        } else {
            FallbackProposer proposer(ctx.stats, cfg.max_instances);
            layout = propose_layout(request, proposer, cfg.proposer_retries, cfg.max_instances);
        }
        Rng adjust_rng(derive_seed(cfg.master_seed, {kAdjustStream, index, a}));
        const Layout adjusted = adjust_layout(layout, ctx.stats, adjust_rng);
        out.record.layout = adjusted;

        std::vector<std::string> vocabulary;
        for (const auto& inst : adjusted.instances) {
            if (std::none_of(vocabulary.begin(), vocabulary.end(),
                             [&](const std::string& v) { return iequals(v, inst.cate); })) {
                vocabulary.push_back(inst.cate);
            }
        }

        std::vector<ScoredCandidate> candidates;
        std::vector<std::vector<Detection>> refiner_detections;
        for (int k = 0; k < cfg.candidates; ++k) {
            protocol::GenerationRequest gen;
            gen.layout = adjusted;
            gen.style_ref = adjusted.style_ref;
            for (const auto& inst : adjusted.instances) {
                if (inst.ref) gen.instance_refs.emplace(inst.id, *inst.ref);
            }
            gen.seed = derive_seed(cfg.master_seed, {kGenerateStream, index, a, static_cast<std::uint64_t>(k)});
            gen.style_schedule = schedule;
            gen.output_path =
                (ctx.scratch / (image_stem(index) + "_" + std::to_string(attempt) + "_" + std::to_string(k) + ".ppm"))
                    .string();
            gen.width = cfg.image_width;
            gen.height = cfg.image_height;
            auto image = w.generator->generate(gen);

            std::vector<MatchReport> reports;
            for (std::size_t d = 0; d < w.detectors.size(); ++d) {
                auto dets = w.detectors[d]->detect(image.path, vocabulary);
                reports.push_back(match_detections(adjusted, dets, w.detectors[d]->hello().name));
                if (d == cfg.refiner_index()) refiner_detections.push_back(std::move(dets));
            }
            const bool accepted = accept_candidate(reports);
            const double quality = accepted ? w.scorer->score(image.path) : 0.0;
            candidates.push_back(score_candidate(std::move(image), std::move(reports), quality));
        }
        out.record.attempted_candidates += candidates.size();
        out.record.accepted_candidates +=
            static_cast<std::size_t>(std::count_if(candidates.begin(), candidates.end(),
                                                   [](const ScoredCandidate& c) { return c.accepted; }));

        const auto best = select_best(candidates, cfg.score_mode);
        if (!best) {
            if (attempt < cfg.max_regenerations) ++out.record.regenerations;
            continue;
        }
        const auto& chosen = candidates[*best];
        const Layout refined = post_refine(adjusted, refiner_detections[*best]);
        CandidateImage final_image = chosen.image;
        out.record.image_file = "images/" + image_stem(index) + ".ppm";
        final_image.path = out.record.image_file;
        out.document = assemble(final_image, refined, AnnotationExtras{}, cfg.formats);
        out.scratch_image = chosen.image.path;
        out.record.emitted = true;
        out.record.selected = *best;
        out.record.quality = chosen.quality;
        out.record.position = chosen.position;
        return out;
    }
    return out;
}

void write_outputs(const PipelineConfig& cfg, const std::vector<Outcome*>& done, RunReport& report) {
    const fs::path root = cfg.output_dir;
    fs::create_directories(root / "images");
    fs::create_directories(root / "layouts");
    fs::create_directories(root / "annotations" / "yolo");

    CategoryRegistry registry(cfg.categories);
    std::vector<AnnotationDocument> documents;
    std::string records;
    for (auto* o : done) {
        if (!o->document) continue;
        const auto stem = image_stem(o->record.index);
        fs::rename(o->scratch_image, root / o->record.image_file);
        write_file_atomic(root / "layouts" / (stem + ".json"), serialize_layout(*o->record.layout));
        for (const auto& inst : o->document->instances) registry.add(inst.cate);
        documents.push_back(*o->document);
    }
    for (const auto& doc : documents) {
        const auto stem = fs::path(doc.image.path).stem().string();
        write_file_atomic(root / "annotations" / "yolo" / (stem + ".txt"), yolo_file(emit_yolo(doc, registry)));
        records += document_record(doc).dump() + "\n";
    }
    write_file_atomic(root / "annotations" / "yolo" / "classes.txt", registry.classes_txt());
    write_file_atomic(root / "annotations" / "coco.json", emit_coco(documents, registry));
    write_file_atomic(root / "annotations" / "documents.jsonl", records);
    write_file_atomic(root / "report.json", serialize_report(report));
}

}  // namespace

void validate_setup(const PipelineConfig& config) {
    config.validate();
    check_formats(config);
    load_stats_for(config);
    auto w = connect_worker(config);
}

RunReport run_pipeline(const PipelineConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    check_formats(config);
    const StatsTable stats = load_stats_for(config);

    const fs::path scratch = config.output_dir / ".scratch";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const auto workers_needed = static_cast<std::size_t>(std::min(config.parallelism, config.images));
    std::vector<WorkerBackends> workers;
    workers.reserve(workers_needed);
    for (std::size_t i = 0; i < workers_needed; ++i) workers.push_back(connect_worker(config));

    const RunContext ctx{config, stats, scratch};
    const auto n = static_cast<std::size_t>(config.images);
    std::vector<std::optional<Outcome>> outcomes(n);
    std::atomic<bool> abort{false};
    std::mutex reason_mutex;
    std::string abort_reason;

    auto run_one = [&](std::size_t index, WorkerBackends& w) {
        if (abort.load()) return;
        try {
            outcomes[index] = process_image(ctx, index, w);
        } catch (const std::exception& e) {
            abort.store(true);
            std::lock_guard lock(reason_mutex);
            if (abort_reason.empty()) abort_reason = "image " + std::to_string(index) + ": " + e.what();
        }
    };

    if (workers_needed == 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i, workers.front());
    } else {
        const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for num_threads(static_cast<int>(workers_needed)) schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            run_one(static_cast<std::size_t>(i), workers[static_cast<std::size_t>(omp_get_thread_num())]);
        }
    }

    RunReport report;
    report.partial = abort.load();
    report.abort_reason = abort_reason;
    std::vector<Outcome*> done;
    for (auto& o : outcomes) {
        if (!o) continue;
        done.push_back(&*o);
        ++report.attempted;
        if (o->record.emitted) {
            ++report.emitted;
        } else {
            ++report.abandoned;
        }
        report.candidate_attempts += o->record.attempted_candidates;
        report.images.push_back(o->record);
    }
    write_outputs(config, done, report);
    fs::remove_all(scratch);

    // Best effort: a backend that already died has nothing left to flush.
    auto stop = [](BackendClient* c) {
        if (!c) return;
        try {
            c->shutdown();
        } catch (const Error&) {
        }
    };
    for (auto& w : workers) {
        for (auto* c : {w.proposer.get(), w.generator.get(), w.scorer.get()}) stop(c);
        for (auto& d : w.detectors) stop(d.get());
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace lsynth

// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsynth/backend.hpp"
#include "lsynth/coco.hpp"
#include "lsynth/conformance.hpp"
#include "lsynth/error.hpp"
#include "lsynth/layout.hpp"
#include "lsynth/pipeline.hpp"
#include "lsynth/simulators.hpp"
#include "lsynth/stats.hpp"
#include "lsynth/text.hpp"

namespace {

using namespace lsynth;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kPartial = 2;

int stats_fit(const std::string& annotations, const std::string& out, const std::string& categories) {
    std::vector<std::string> only;
    for (const auto& c : split(categories, ',')) {
        if (auto t = trim(c); !t.empty()) only.push_back(t);
    }
    const auto dataset = coco::load(annotations);
    const auto fit = fit_category_stats(dataset, annotations, only);
    write_file_atomic(out, serialize_stats(fit.table));
    std::fprintf(stderr, "fitted %zu categories, rejected %zu records\n", fit.table.entries().size(),
                 fit.rejected_records);
    return kOk;
}

int layout_gen(const std::string& request_path, const std::string& stats_path, std::uint64_t seed,
               const std::string& out, const std::string& proposer_spec) {
    auto request = parse_request(read_file(request_path));
    request.seed = seed;
    const auto stats = load_stats(stats_path);
    Layout layout;
    if (proposer_spec.empty() || proposer_spec == "fallback") {
        FallbackProposer proposer(stats);
        layout = propose_layout(request, proposer);
    } else {
        auto client = connect_backend(proposer_spec, protocol::Role::Proposer, "proposer", kDefaultBackendTimeout);
        struct Adapter final : LayoutProposer {
            BackendClient& c;
            explicit Adapter(BackendClient& client) : c(client) {}
            Layout propose(const LayoutRequest& r) override { return c.propose(r); }
        } proposer(*client);
        layout = propose_layout(request, proposer);
    }
    Rng rng(derive_seed(seed, {1}));
    write_file_atomic(out, serialize_layout(adjust_layout(layout, stats, rng)));
    return kOk;
}

int pipeline_run(const std::string& config_path) {
    const auto config = load_config(config_path);
    const auto report = run_pipeline(config);
    std::fprintf(stderr, "attempted %zu, emitted %zu, abandoned %zu, %.2f s\n", report.attempted, report.emitted,
                 report.abandoned, report.wall_seconds);
    if (report.partial) {
        std::fprintf(stderr, "partial run: %s\n", report.abort_reason.c_str());
        return kPartial;
    }
    return kOk;
}

int validate(const std::string& config_path) {
    validate_setup(load_config(config_path));
    std::fprintf(stderr, "configuration ok\n");
    return kOk;
}

int serve_sim(const std::vector<std::string>& words) {
    std::string spec;
    for (const auto& w : words) spec += (spec.empty() ? "" : " ") + w;
    auto server = sim::make_sim_server(spec);
    serve(*server, std::cin, std::cout);
    return kOk;
}

int coco_check(const std::string& path) {
    const auto problems = coco::check(read_file(path));
    for (const auto& p : problems) std::printf("%s\n", p.c_str());
    std::fprintf(stderr, "%zu problems\n", problems.size());
    return problems.empty() ? kOk : kFailure;
}

int conformance_run(const std::vector<std::string>& transcripts, const std::string& backend,
                    const std::string& fixtures, const std::string& workdir) {
    std::size_t total = 0;
    for (const auto& path : transcripts) {
        const auto steps = conformance::load_transcript(read_file(path), {{"FIXTURES", fixtures}, {"WORKDIR", workdir}});
        std::unique_ptr<Endpoint> endpoint;
        if (backend.starts_with("sim:")) {
            endpoint = std::make_unique<LoopbackEndpoint>(sim::make_sim_server(backend.substr(4)));
        } else {
            endpoint = std::make_unique<ProcessEndpoint>(backend);
        }
        const auto violations = conformance::replay(*endpoint, steps);
        for (const auto& v : violations) std::printf("%s: %s\n", path.c_str(), v.c_str());
        total += violations.size();
    }
    std::fprintf(stderr, "%zu violations\n", total);
    return total == 0 ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layout-guided synthetic dataset engine"};
    app.require_subcommand(1);
    int code = kOk;

    auto* stats = app.add_subcommand("stats", "Category size statistics");
    stats->require_subcommand(1);
    auto* fit = stats->add_subcommand("fit", "Fit per-category width/aspect statistics");
    std::string annotations, stats_out, categories;
    fit->add_option("--annotations", annotations, "COCO instance file")->required();
    fit->add_option("--out", stats_out, "Stats file to write")->required();
    fit->add_option("--categories", categories, "Comma-separated category filter");
    fit->callback([&] { code = stats_fit(annotations, stats_out, categories); });

    auto* layout = app.add_subcommand("layout", "Layouts");
    layout->require_subcommand(1);
    auto* gen = layout->add_subcommand("gen", "Propose and adjust one layout");
    std::string request, layout_stats, layout_out, proposer;
    std::uint64_t seed = 0;
    gen->add_option("--request", request, "Layout request file")->required();
    gen->add_option("--stats", layout_stats, "Stats file")->required();
    gen->add_option("--seed", seed, "Seed")->required();
    gen->add_option("--out", layout_out, "Layout file to write")->required();
    gen->add_option("--proposer", proposer, "Proposer backend command, or 'fallback'");
    gen->callback([&] { code = layout_gen(request, layout_stats, seed, layout_out, proposer); });

    auto* pipeline = app.add_subcommand("pipeline", "Dataset generation");
    pipeline->require_subcommand(1);
    auto* run = pipeline->add_subcommand("run", "Run the full pipeline");
    std::string run_config;
    run->add_option("--config", run_config, "Pipeline config")->required();
    run->callback([&] { code = pipeline_run(run_config); });

    auto* check = app.add_subcommand("validate", "Check a config: backend handshakes and schemas only");
    std::string check_config;
    check->add_option("--config", check_config, "Pipeline config")->required();
    check->callback([&] { code = validate(check_config); });

    auto* serve_cmd = app.add_subcommand("serve-sim", "Serve a built-in simulator backend on stdin/stdout");
    std::vector<std::string> sim_spec;
    serve_cmd->add_option("spec", sim_spec, "<role> [key=value ...]")->required();
    serve_cmd->callback([&] { code = serve_sim(sim_spec); });

    auto* coco_cmd = app.add_subcommand("coco-check", "Check a COCO instance file");
    std::string coco_path;
    coco_cmd->add_option("path", coco_path, "COCO file")->required();
    coco_cmd->callback([&] { code = coco_check(coco_path); });

    auto* conf = app.add_subcommand("conformance", "Replay protocol transcripts against a backend");
    std::vector<std::string> transcripts;
    std::string backend, fixtures = ".", workdir = ".";
    conf->add_option("--backend", backend, "Backend command or sim:<spec>")->required();
    conf->add_option("--fixtures", fixtures, "Directory substituted for $FIXTURES");
    conf->add_option("--workdir", workdir, "Directory substituted for $WORKDIR");
    conf->add_option("transcripts", transcripts, "Transcript files")->required();
    conf->callback([&] { code = conformance_run(transcripts, backend, fixtures, workdir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
    return code;
}

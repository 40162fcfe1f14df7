// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "lsynth/error.hpp"
#include "lsynth/layout_json.hpp"
#include "lsynth/text.hpp"

namespace lsynth::sim {

using nlohmann::json;
using protocol::Op;
using protocol::Role;

// ---- PPM ------------------------------------------------------------------------

std::string encode_ppm(const RgbImage& image) {
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    return out;
}

RgbImage decode_ppm(std::string_view bytes) {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        const auto start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return std::string(bytes.substr(start, pos - start));
    };
    if (token() != "P6") throw ParseError("image: not a binary PPM");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw ParseError("image: bad PPM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255) throw ParseError("image: unsupported PPM header");
    ++pos;  // single whitespace before the raster
    RgbImage img(w, h);
    if (bytes.size() < pos + img.pixels.size()) throw ParseError("image: truncated PPM raster");
    std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data() + pos), img.pixels.size(),
                img.pixels.begin());
    return img;
}

void write_ppm(const std::string& path, const RgbImage& image) {
    write_file_atomic(path, encode_ppm(image));
}

RgbImage read_ppm(const std::string& path) {
    return decode_ppm(read_file(path));
}

// ---- rendering ----------------------------------------------------------------------

namespace {

std::uint16_t category_key(std::string_view cate) {
    return static_cast<std::uint16_t>(hash_bytes(to_lower(cate)) >> 48);
}

std::pair<int, int> pixel_span(double lo, double hi, int size) {
    const int a = std::clamp(static_cast<int>(std::lround(lo * size)), 0, size - 1);
    const int b = std::clamp(static_cast<int>(std::lround(hi * size)), a + 1, size);
    return {a, b};
}

BBox perturb(const BBox& b, double sigma, Rng& rng) {
    if (sigma <= 0.0) return b;
    std::normal_distribution<double> n(0.0, sigma);
    double x0 = b.x_min() + n(rng);
    double y0 = b.y_min() + n(rng);
    double x1 = b.x_max() + n(rng);
    double y1 = b.y_max() + n(rng);
    constexpr double kMinExtent = 1e-3;
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    if (x1 - x0 < kMinExtent) x1 = x0 + kMinExtent;
    if (y1 - y0 < kMinExtent) y1 = y0 + kMinExtent;
    return clamp_to_canvas(BBox(x0, y0, x1, y1));
}

}  // namespace

std::array<std::uint8_t, 3> instance_color(std::string_view cate, std::size_t slot) {
    const auto key = category_key(cate);
    return {static_cast<std::uint8_t>(key >> 8), static_cast<std::uint8_t>(key & 0xff),
            static_cast<std::uint8_t>(slot % 255 + 1)};
}

RgbImage render(std::span<const Placement> placements, int width, int height) {
    RgbImage img(width, height);
    std::vector<std::size_t> order(placements.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return placements[a].bbox.area() > placements[b].bbox.area();
    });
    for (const auto slot : order) {
        const auto& p = placements[slot];
        const auto color = instance_color(p.cate, slot);
        const auto [x0, x1] = pixel_span(p.bbox.x_min(), p.bbox.x_max(), width);
        const auto [y0, y1] = pixel_span(p.bbox.y_min(), p.bbox.y_max(), height);
        for (int y = y0; y < y1; ++y) {
            auto* row = img.pixels.data() + (static_cast<std::size_t>(y) * width) * 3;
            for (int x = x0; x < x1; ++x) {
                std::copy(color.begin(), color.end(), row + x * 3);
            }
        }
    }
    return img;
}

std::vector<Placement> decode_placements(const RgbImage& image,
                                         const std::vector<std::string>& vocabulary) {
    struct Extent {
        int x0, y0, x1, y1;
    };
    std::map<std::uint32_t, Extent> found;  // keyed by B<<16 | R<<8 | G, so slot order
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const auto* px = image.pixels.data() + (static_cast<std::size_t>(y) * image.width + x) * 3;
            if (px[2] == 0) continue;  // background
            const std::uint32_t key = (std::uint32_t{px[2]} << 16) | (std::uint32_t{px[0]} << 8) | px[1];
            auto [it, fresh] = found.try_emplace(key, Extent{x, y, x, y});
            if (!fresh) {
                auto& e = it->second;
                e.x0 = std::min(e.x0, x);
                e.y0 = std::min(e.y0, y);
                e.x1 = std::max(e.x1, x);
                e.y1 = std::max(e.y1, y);
            }
        }
    }
    std::vector<Placement> out;
    for (const auto& [key, e] : found) {
        const auto cate_key = static_cast<std::uint16_t>(key & 0xffff);
        auto word = std::find_if(vocabulary.begin(), vocabulary.end(),
                                 [&](const std::string& v) { return category_key(v) == cate_key; });
        if (word == vocabulary.end()) continue;
        const double w = image.width;
        const double h = image.height;
        out.push_back({static_cast<int>(key >> 16) - 1, *word,
                       BBox(e.x0 / w, e.y0 / h, (e.x1 + 1) / w, (e.y1 + 1) / h)});
    }
    return out;
}

std::pair<CandidateImage, std::vector<Placement>> simulate_generate(
    const protocol::GenerationRequest& request, const GeneratorConfig& config, Rng& rng) {
    request.validate();
    std::vector<Placement> placements;
    placements.reserve(request.layout.instances.size());
    for (const auto& inst : request.layout.instances) {
        placements.push_back({inst.id, inst.cate, perturb(inst.bbox, config.placement_noise, rng)});
    }
    try {
        write_ppm(request.output_path, render(placements, request.width, request.height));
    } catch (const Error& e) {
        throw Error(std::string("generator cannot write output: ") + e.what());
    }
    CandidateImage image{request.output_path, request.width, request.height, config.name, request.seed};
    return {std::move(image), std::move(placements)};
}

void DetectorConfig::validate() const {
    if (!(miss_rate >= 0.0 && miss_rate <= 1.0)) throw ConfigError("detector miss_rate outside [0,1]");
    if (jitter < 0.0) throw ConfigError("detector jitter must be >= 0");
    if (!(confidence_min >= 0.0 && confidence_min <= confidence_max && confidence_max <= 1.0)) {
        throw ConfigError("detector confidence range must satisfy 0 <= min <= max <= 1");
    }
}

std::vector<Detection> simulate_detect(std::span<const Placement> placements,
                                       const DetectorConfig& config, Rng& rng) {
    config.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Detection> out;
    for (const auto& p : placements) {
        if (unit(rng) < config.miss_rate) continue;
        const BBox box = perturb(p.bbox, config.jitter, rng);
        const double conf =
            config.confidence_min + (config.confidence_max - config.confidence_min) * unit(rng);
        out.push_back({p.cate, box, std::clamp(conf, 0.0, 1.0), config.name});
    }
    return out;
}

std::uint64_t content_seed(std::string_view image_bytes, std::string_view backend_name) {
    return mix64(hash_bytes(image_bytes) ^ mix64(hash_bytes(backend_name)));
}

// ---- server ---------------------------------------------------------------------------

SimServer::SimServer(GeneratorConfig config) : role_(Role::Generator), generator_(std::move(config)) {}
SimServer::SimServer(DetectorConfig config) : role_(Role::Detector), detector_(std::move(config)) {
    detector_.validate();
}
SimServer::SimServer(ScorerConfig config) : role_(Role::Scorer), scorer_(std::move(config)) {
    if (!(scorer_.score_max > scorer_.score_min)) throw ConfigError("scorer range needs max > min");
}
SimServer::SimServer(ProposerConfig config) : role_(Role::Proposer), proposer_(std::move(config)) {
    stats_ = std::make_shared<const StatsTable>(
        proposer_.stats_path.empty() ? StatsTable() : load_stats(proposer_.stats_path));
}

std::string SimServer::handle_line(const std::string& line) {
    json msg;
    try {
        msg = json::parse(line);
    } catch (const json::parse_error&) {
        return protocol::error_reply(0, "request is not JSON").dump();
    }
    const std::uint64_t id =
        msg.is_object() && msg.contains("id") && json_codec::is_uint(msg["id"]) ? msg["id"].get<std::uint64_t>() : 0;
    if (auto problems = protocol::validate_request(msg); !problems.empty()) {
        return protocol::error_reply(id, "invalid request: " + problems.front()).dump();
    }
    const auto op = *protocol::parse_op(msg["op"].get<std::string>());
    if (auto role = protocol::role_for(op); role && *role != role_) {
        return protocol::error_reply(id, "this backend is a " + std::string(to_string(role_))).dump();
    }
    try {
        return dispatch(op, msg, id).dump();
    } catch (const std::exception& e) {
        return protocol::error_reply(id, e.what()).dump();
    }
}

json SimServer::dispatch(Op op, const json& msg, std::uint64_t id) {
    json reply = protocol::ok_reply(id);
    switch (op) {
        case Op::Hello: {
            protocol::Hello h;
            h.role = role_;
            switch (role_) {
                case Role::Generator: h.name = generator_.name; break;
                case Role::Detector: h.name = detector_.name; break;
                case Role::Scorer:
                    h.name = scorer_.name;
                    h.score_range = std::make_pair(scorer_.score_min, scorer_.score_max);
                    break;
                case Role::Proposer: h.name = proposer_.name; break;
            }
            reply.update(protocol::encode(h));
            break;
        }
        case Op::Shutdown:
            finished_ = true;
            break;
        case Op::ProposeLayout: {
            const auto req = json_codec::decode_request(msg["request"]);
            Rng rng(req.seed);
            reply["layout"] = json_codec::encode(fallback_propose(req, *stats_, rng));
            break;
        }
        case Op::Generate: {
            const auto req = protocol::decode_generation_request(msg["request"]);
            Rng rng(req.seed);
            reply["image"] = protocol::encode(simulate_generate(req, generator_, rng).first);
            break;
        }
        case Op::Detect: {
            const auto bytes = read_file(msg["image"].get<std::string>());
            const auto vocabulary = msg["vocabulary"].get<std::vector<std::string>>();
            const auto placements = decode_placements(decode_ppm(bytes), vocabulary);
            Rng rng(content_seed(bytes, detector_.name));
            reply["detections"] = json::array();
            for (const auto& d : simulate_detect(placements, detector_, rng)) {
                reply["detections"].push_back(protocol::encode(d));
            }
            break;
        }
        case Op::Score: {
            const auto bytes = read_file(msg["image"].get<std::string>());
            Rng rng(content_seed(bytes, scorer_.name));
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            reply["score"] = scorer_.score_min + (scorer_.score_max - scorer_.score_min) * u;
            break;
        }
    }
    return reply;
}

namespace {

double to_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("simulator option " + key + ": '" + value + "' is not a number");
    }
}

}  // namespace

std::unique_ptr<SimServer> make_sim_server(const std::string& spec) {
    std::istringstream in(spec);
    std::string role_text;
    in >> role_text;
    std::map<std::string, std::string> opts;
    for (std::string tok; in >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ConfigError("simulator option '" + tok + "' is not key=value");
        opts[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = opts.find(key);
        if (it == opts.end()) return std::nullopt;
        auto v = it->second;
        opts.erase(it);
        return v;
    };
    auto num = [&](const char* key, double fallback) {
        auto v = take(key);
        return v ? to_number(key, *v) : fallback;
    };

    Role role;
    try {
        role = protocol::parse_role(role_text);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("simulator: ") + e.what());
    }

    std::unique_ptr<SimServer> server;
    switch (role) {
        case Role::Generator: {
            GeneratorConfig c;
            c.name = take("name").value_or(c.name);
            c.placement_noise = num("noise", c.placement_noise);
            server = std::make_unique<SimServer>(c);
            break;
        }
        case Role::Detector: {
            DetectorConfig c;
            c.name = take("name").value_or(c.name);
            c.miss_rate = num("miss_rate", c.miss_rate);
            c.jitter = num("jitter", c.jitter);
            c.confidence_min = num("conf_min", c.confidence_min);
            c.confidence_max = num("conf_max", c.confidence_max);
            server = std::make_unique<SimServer>(c);
            break;
        }
        case Role::Scorer: {
            ScorerConfig c;
            c.name = take("name").value_or(c.name);
            c.score_min = num("min", c.score_min);
            c.score_max = num("max", c.score_max);
            server = std::make_unique<SimServer>(c);
            break;
        }
        case Role::Proposer: {
            ProposerConfig c;
            c.name = take("name").value_or(c.name);
            c.stats_path = take("stats").value_or("");
            server = std::make_unique<SimServer>(c);
            break;
        }
    }
    if (!opts.empty()) throw ConfigError("unknown simulator option '" + opts.begin()->first + "'");
    return server;
}

}  // namespace lsynth::sim

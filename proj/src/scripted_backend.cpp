// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/scripted_backend.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace streamvad::backend {

namespace {

using nlohmann::json;

std::optional<BackendErrorKind> parse_failure(const std::string& s) {
    if (s == "timeout") return BackendErrorKind::kTimeout;
    if (s == "network") return BackendErrorKind::kNetwork;
    if (s == "protocol") return BackendErrorKind::kProtocol;
    if (s == "unavailable") return BackendErrorKind::kUnavailable;
    throw IoError("unknown scripted failure kind '" + s + "'");
}

constexpr hsm::CacheGeometry kGeometry{1, 1, 4, 10000.0};

void write_row(hsm::SegmentedKVCache& cache, std::array<double, 4> raw, hsm::Segment segment) {
    const auto pos = cache.next_position();
    const std::size_t row = cache.append_row(pos, segment);
    auto key = cache.mutable_key(0, row);
    auto value = cache.mutable_value(0, row);
    for (std::size_t c = 0; c < 4; ++c) {
        key[c] = raw[c];
        value[c] = raw[c];
    }
    hsm::rope_rotate_inplace(key, pos, kGeometry.rope_base);
}

std::array<double, 4> text_embedding(int token) {
    const double t = static_cast<double>(token) + 1.0;
    return {std::cos(t), std::sin(t), std::cos(0.5 * t), std::sin(0.5 * t)};
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
    Scenario scenario;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json j = json::parse(line);
            if (j.contains("scenario")) {
                const auto& h = j.at("scenario");
                scenario.total_frames = h.value("total_frames", std::size_t{0});
                scenario.grid.rows = h.value("rows", scenario.grid.rows);
                scenario.grid.cols = h.value("cols", scenario.grid.cols);
                scenario.grid.channels = h.value("channels", scenario.grid.channels);
                scenario.seed = h.value("seed", scenario.seed);
                if (h.contains("normalization_response")) {
                    scenario.normalization_response = h.at("normalization_response").get<std::string>();
                }
                continue;
            }
            ScriptedWindow w;
            w.window_index = j.at("window_index").get<std::size_t>();
            w.text = j.at("text").get<std::string>();
            for (const auto& iv : j.value("intervals", json::array())) {
                w.intervals.push_back(Interval{iv.at(0).get<std::size_t>(), iv.at(1).get<std::size_t>()});
            }
            w.category = j.value("category", std::string(Category::kNormalLabel));
            for (const auto& p : j.value("probability_pairs", json::array())) {
                w.token_probs.push_back(ProbabilityPair{p.at(0).get<double>(), p.at(1).get<double>()});
            }
            if (j.contains("failure")) {
                w.failure = parse_failure(j.at("failure").get<std::string>());
            }
            if (!scenario.windows.emplace(w.window_index, std::move(w)).second) {
                throw IoError("duplicate window_index");
            }
        } catch (const json::exception& e) {
            throw IoError("scenario line " + std::to_string(line_no) + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError("scenario line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scenario file: " + path.string());
    }
    return parse_scenario(in);
}

void write_scenario(std::ostream& out, const Scenario& scenario) {
    json header{{"total_frames", scenario.total_frames},
                {"rows", scenario.grid.rows},
                {"cols", scenario.grid.cols},
                {"channels", scenario.grid.channels},
                {"seed", scenario.seed}};
    if (scenario.normalization_response) {
        header["normalization_response"] = *scenario.normalization_response;
    }
    out << json{{"scenario", header}}.dump() << "\n";
    for (const auto& [index, w] : scenario.windows) {
        json intervals = json::array();
        for (const auto& iv : w.intervals) {
            intervals.push_back({iv.start, iv.end});
        }
        json probs = json::array();
        for (const auto& p : w.token_probs) {
            probs.push_back({p.top1, p.top2});
        }
        json record{{"window_index", index},
                    {"text", w.text},
                    {"intervals", intervals},
                    {"category", w.category},
                    {"probability_pairs", probs}};
        if (w.failure) {
            record["failure"] = error_kind_name(*w.failure);
        }
        out << record.dump() << "\n";
    }
}

ScriptedBackend::ScriptedBackend(Scenario scenario) : m_scenario(std::move(scenario)) {}

hsm::CacheGeometry ScriptedBackend::cache_geometry() const {
    return kGeometry;
}

void ScriptedBackend::prefill_text(hsm::SegmentedKVCache& cache, std::string_view text, hsm::Segment segment) {
    for (int token : tokenize(text)) {
        write_row(cache, text_embedding(token), segment);
    }
}

void ScriptedBackend::prefill_visual(hsm::SegmentedKVCache& cache, std::span<const iim::VisualToken> tokens) {
    for (const auto& token : tokens) {
        std::array<double, 4> raw{};
        for (std::size_t c = 0; c < raw.size() && c < token.feature.size(); ++c) {
            raw[c] = token.feature[c];
        }
        write_row(cache, raw, hsm::Segment::kVisual);
    }
}

GenerationResult ScriptedBackend::decode(hsm::SegmentedKVCache& cache, const DecodeRequest& request) {
    const auto started = std::chrono::steady_clock::now();
    GenerationResult result;
    auto it = m_scenario.windows.find(request.window_index);
    if (it == m_scenario.windows.end()) {
        result.text = "CATEGORY: NORMAL";
    } else {
        if (it->second.failure) {
            throw BackendError(*it->second.failure, "scripted " + std::string(error_kind_name(*it->second.failure)) +
                                                        " in window " + std::to_string(request.window_index));
        }
        result.text = it->second.text;
        result.token_probs = it->second.token_probs;
    }
    const auto tokens = tokenize(result.text);
    for (int token : tokens) {
        write_row(cache, text_embedding(token), hsm::Segment::kGenerated);
    }
    result.token_count = tokens.size();
    result.wall_time = std::chrono::steady_clock::now() - started;
    return result;
}

GenerationResult ScriptedBackend::complete(std::string_view) {
    if (!m_scenario.normalization_response) {
        throw BackendError(BackendErrorKind::kUnavailable, "scenario carries no normalization response");
    }
    GenerationResult result;
    result.text = *m_scenario.normalization_response;
    result.token_count = result.text.size();
    return result;
}

}  // namespace streamvad::backend

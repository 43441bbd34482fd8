// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamvad/backend.hpp"

namespace streamvad::backend {

/// One scripted window answer. `intervals` and `category` document the intended answer; the
/// backend returns `text` and `token_probs` verbatim.
struct ScriptedWindow {
    std::size_t window_index = 0;
    std::string text;
    std::vector<Interval> intervals;
    std::string category;
    std::vector<ProbabilityPair> token_probs;
    /// Injected failure for this window.
    std::optional<BackendErrorKind> failure;
};

struct Scenario {
    /// Synthetic stream geometry used when no feature file accompanies the scenario.
    std::size_t total_frames = 0;
    GridShape grid{0, 2, 2, 8};
    std::uint64_t seed = 7;
    std::optional<std::string> normalization_response;
    std::map<std::size_t, ScriptedWindow> windows;
};

/// Line-delimited JSON: an optional {"scenario": {...}} header record, then one record per window
/// with fields window_index, text, intervals, category, probability_pairs (and optional failure).
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(std::istream& in);
void write_scenario(std::ostream& out, const Scenario& scenario);

/// Deterministic playback backend: a pure function of (window index, scenario). It keeps a real
/// SegmentedKVCache with small synthetic keys so cache bookkeeping is exercised end to end.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(Scenario scenario);

    std::string_view name() const override {
        return "scripted";
    }
    BackendCapabilities capabilities() const override {
        return {true, true};
    }
    hsm::CacheGeometry cache_geometry() const override;
    void prefill_text(hsm::SegmentedKVCache& cache, std::string_view text, hsm::Segment segment) override;
    void prefill_visual(hsm::SegmentedKVCache& cache, std::span<const iim::VisualToken> tokens) override;
    GenerationResult decode(hsm::SegmentedKVCache& cache, const DecodeRequest& request) override;
    GenerationResult complete(std::string_view prompt) override;

    const Scenario& scenario() const noexcept {
        return m_scenario;
    }

private:
    Scenario m_scenario;
};

}  // namespace streamvad::backend

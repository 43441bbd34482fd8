// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamvad/backend.hpp"
#include "streamvad/config.hpp"
#include "streamvad/dn.hpp"
#include "streamvad/feature_grid.hpp"
#include "streamvad/ps.hpp"
#include "streamvad/types.hpp"

namespace streamvad::pipeline {

struct WindowPlan {
    std::size_t index = 0;
    std::size_t start = 0;
    /// One past the last frame covered, padding included (start + window_len).
    std::size_t end = 0;
    /// Frames [overlap_begin, overlap_end) are shared with the previous window; empty for window 0.
    std::size_t overlap_begin = 0;
    std::size_t overlap_end = 0;
    /// Frames of this window that exist in the stream; fewer than window_len means padded.
    std::size_t real_frames = 0;

    bool padded(const StreamConfig& cfg) const noexcept {
        return real_frames < cfg.window_len;
    }
    friend bool operator==(const WindowPlan&, const WindowPlan&) = default;
};

/// Windows at stride window_len - overlap covering every frame; the last one may be padded.
std::vector<WindowPlan> schedule(std::size_t total_frames, const StreamConfig& cfg);

struct ParsedPrediction {
    Category category = Category::normal();
    std::vector<Interval> intervals;  // window-local frames
    bool structured = false;
};

/// Reads the `CATEGORY:` / `INTERVAL: a-b` answer schema (seconds, window-relative). Falls back
/// to scanning for a parenthesized option letter, then to NORMAL.
ParsedPrediction parse_prediction(std::string_view text, const dn::NormalizedDefinition& ndef,
                                  const StreamConfig& cfg);

/// Random-access frame supplier. `window` returns [begin, end) with frames past the stream end
/// filled by repeating the last frame.
class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual GridShape shape() const = 0;
    virtual FrameFeatureGrid window(std::size_t begin, std::size_t end) = 0;
};

class InMemorySource : public FeatureSource {
public:
    explicit InMemorySource(FrameFeatureGrid grid) : m_grid(std::move(grid)) {}
    GridShape shape() const override {
        return m_grid.shape();
    }
    FrameFeatureGrid window(std::size_t begin, std::size_t end) override;

private:
    FrameFeatureGrid m_grid;
};

/// One EFG1 file, read window by window.
class EfgFileSource : public FeatureSource {
public:
    explicit EfgFileSource(std::filesystem::path path);
    GridShape shape() const override {
        return m_shape;
    }
    FrameFeatureGrid window(std::size_t begin, std::size_t end) override;

private:
    std::filesystem::path m_path;
    GridShape m_shape;
};

/// Directory of EFG1 chunk files (*.efg), concatenated along frames in file-name order.
class ChunkDirectorySource : public FeatureSource {
public:
    explicit ChunkDirectorySource(const std::filesystem::path& dir);
    GridShape shape() const override {
        return m_shape;
    }
    FrameFeatureGrid window(std::size_t begin, std::size_t end) override;

private:
    struct Chunk {
        std::filesystem::path path;
        std::size_t first = 0;
        std::size_t frames = 0;
    };
    std::vector<Chunk> m_chunks;
    GridShape m_shape;
};

/// Deterministic pseudo-features: each frame depends only on (seed, frame index), so any prefix
/// of a long synthetic stream equals the shorter stream.
class SyntheticSource : public FeatureSource {
public:
    SyntheticSource(GridShape shape, std::uint64_t seed) : m_shape(shape), m_seed(seed) {}
    GridShape shape() const override {
        return m_shape;
    }
    FrameFeatureGrid window(std::size_t begin, std::size_t end) override;

private:
    GridShape m_shape;
    std::uint64_t m_seed;
};

struct Prompts {
    /// Placeholders: {DEFINITION_TABLE}, {WINDOW_SECONDS}.
    std::string system;
    /// Placeholders: {RAW_DEFINITION}, {CATEGORIES}.
    std::string normalization;
    /// Placeholders: {MEMORY}, {WINDOW_SECONDS}.
    std::string memory;
    /// Rendered in place of {MEMORY} before any window has been described.
    std::string empty_memory = "No prior observations.";

    static Prompts defaults();
    /// Defaults overridden by system.txt, normalization.txt and memory.txt found in `dir`.
    static Prompts load(const std::filesystem::path& dir);
};

enum class NormalizationMode { kModel, kLocal };

/// Normalizes each distinct definition once; later requests hit the cache.
class DefinitionNormalizer {
public:
    DefinitionNormalizer(backend::Backend& backend, std::string prompt_template, NormalizationMode mode)
        : m_backend(backend), m_template(std::move(prompt_template)), m_mode(mode) {}

    struct Result {
        dn::NormalizedDefinition definition;
        bool degraded = false;
        std::string note;
    };

    const Result& normalize(const AnomalyDefinition& def);
    std::size_t invocations() const noexcept {
        return m_invocations;
    }

private:
    backend::Backend& m_backend;
    std::string m_template;
    NormalizationMode m_mode;
    std::map<std::uint64_t, Result> m_cache;
    std::size_t m_invocations = 0;
};

struct PipelineOptions {
    bool enable_iim = true;
    bool enable_kv_reuse = true;
    bool enable_long_term_memory = true;
    NormalizationMode normalization = NormalizationMode::kModel;
    ps::Normalization score_normalization = ps::Normalization::kFixedZ;
    std::size_t max_new_tokens = 48;
    /// Remote backends only: image URL per sampled frame, "{frame}" replaced by the global index.
    std::string frame_url_template;
    Prompts prompts = Prompts::defaults();
};

struct RowStats {
    std::size_t prefix = 0;
    std::size_t reused_visual = 0;
    std::size_t new_visual = 0;
    std::size_t text = 0;
    std::size_t generated = 0;
    std::size_t shift = 0;
    /// Visual rows the window would hold uncompressed (window_len * rows * cols).
    std::size_t uncompressed_visual = 0;
};

struct WindowRecord {
    WindowPlan plan;
    WindowPrediction prediction;
    bool failed = false;
    std::string failure;
    bool definition_changed = false;
    bool reused = false;
    /// Local curve clipped to the stream (padded frames dropped).
    ps::LocalCurve curve;
    RowStats rows;
    double compress_seconds = 0.0;
    double model_seconds = 0.0;
    double window_seconds = 0.0;
    ScoreSeries scores;
};

struct RunSummary {
    ScoreSeries scores;
    std::vector<WindowPrediction> predictions;
    std::size_t windows = 0;
    std::size_t failed_windows = 0;
    std::size_t normalizations = 0;
    double processing_seconds = 0.0;
    double video_seconds = 0.0;
    double rtf = 0.0;
    std::vector<std::string> notes;
};

/// Definitions in force from a window index onward; the first entry must start at window 0.
using DefinitionSchedule = std::vector<std::pair<std::size_t, AnomalyDefinition>>;

using WindowCallback = std::function<void(const WindowRecord&)>;

RunSummary run_stream(FeatureSource& source, const DefinitionSchedule& definitions, const StreamConfig& cfg,
                      backend::Backend& backend, const PipelineOptions& options, const WindowCallback& on_window);

RunSummary run_stream(FeatureSource& source, const AnomalyDefinition& definition, const StreamConfig& cfg,
                      backend::Backend& backend, const PipelineOptions& options, const WindowCallback& on_window);

/// Processing wall time over video duration. Throws std::invalid_argument if duration <= 0.
double measure_rtf(double processing_seconds, double video_seconds);
double mean_rtf(std::span<const double> rtfs);

/// Stream-level answer: the category with the largest summed confidence over anomalous windows,
/// NORMAL when no window flagged one.
Category video_category(std::span<const WindowPrediction> predictions);

}  // namespace streamvad::pipeline

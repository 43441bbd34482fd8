// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "streamvad/config.hpp"
#include "streamvad/feature_grid.hpp"

// Inter-frame-matched intra-frame token merging.
//
// A window is cut into groups of frames (GoFs) with codec-style roles. I-frames are kept whole.
// P- and B-frames score every patch by its minimum cosine distance to a spatial neighborhood in
// their reference frames, keep the top fraction, and fold the remaining patches into their most
// similar retained patch.
namespace streamvad::iim {

enum class FrameRole : std::uint8_t { kI, kP, kB };

char role_letter(FrameRole role) noexcept;

struct GoFPlan {
    std::vector<FrameRole> roles;
    /// Window-local reference frames per frame; empty for I-frames.
    std::vector<std::vector<std::size_t>> references;
    /// [begin, end) window-local frame runs, one per group.
    std::vector<std::pair<std::size_t, std::size_t>> groups;

    std::size_t frame_count() const noexcept {
        return roles.size();
    }
};

/// Roles depend only on (window_start + j) mod gof_size, so windows starting at multiples of the
/// stride agree on every shared frame.
GoFPlan plan_gofs(std::size_t window_start, const StreamConfig& cfg);
GoFPlan plan_gofs(std::size_t window_start, std::size_t frame_count, const StreamConfig& cfg);

struct ImportanceMap {
    std::vector<FrameRole> roles;
    /// Per frame, one score per patch in raster order; empty for I-frames.
    std::vector<std::vector<double>> scores;
};

ImportanceMap importance_scores(const FrameFeatureGrid& grid, const GoFPlan& plan, const StreamConfig& cfg);

struct VisualToken {
    std::uint32_t frame = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    std::vector<float> feature;

    friend bool operator==(const VisualToken&, const VisualToken&) = default;
};

struct CompressedWindow {
    GridShape shape;  // of the source grid
    std::vector<VisualToken> tokens;
    std::vector<FrameRole> roles;
    std::vector<std::size_t> retained_per_frame;
    /// Index of the first token of each frame, plus a final sentinel equal to tokens.size().
    std::vector<std::size_t> frame_offsets;

    std::span<const VisualToken> frame_tokens(std::size_t begin_frame, std::size_t end_frame) const {
        return std::span<const VisualToken>(tokens).subspan(
            frame_offsets[begin_frame], frame_offsets[end_frame] - frame_offsets[begin_frame]);
    }
    std::size_t token_count(std::size_t begin_frame, std::size_t end_frame) const {
        return frame_offsets[end_frame] - frame_offsets[begin_frame];
    }
    double retained_fraction() const noexcept;

    friend bool operator==(const CompressedWindow&, const CompressedWindow&) = default;
};

/// Retained token count for one frame: floor(gamma * h * w), clamped to at least one token.
std::size_t retained_count(FrameRole role, std::size_t patches_per_frame, const StreamConfig& cfg);

CompressedWindow merge_window(const FrameFeatureGrid& grid, const ImportanceMap& scores, const StreamConfig& cfg);

/// plan_gofs + importance_scores + merge_window for a window starting at global frame
/// `window_start`.
CompressedWindow compress_window(const FrameFeatureGrid& grid, std::size_t window_start, const StreamConfig& cfg);

/// Every patch kept verbatim (compression disabled).
CompressedWindow passthrough_window(const FrameFeatureGrid& grid);

/// Analytic retained fraction of one group: (gamma_I n_I + gamma_P n_P + gamma_B n_B) / gof_size.
double token_accounting(const StreamConfig& cfg);
/// Same with floor-and-clamp semantics at patch granularity for frames of `patches_per_frame`.
double token_accounting(const StreamConfig& cfg, std::size_t patches_per_frame);

/// Tokens retained over global frames [begin, end) for frames with `patches_per_frame` patches.
std::size_t retained_tokens(std::size_t begin, std::size_t end, std::size_t patches_per_frame,
                            const StreamConfig& cfg);

}  // namespace streamvad::iim

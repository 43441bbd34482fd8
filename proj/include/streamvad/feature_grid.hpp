// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "streamvad/error.hpp"

namespace streamvad {

struct GridShape {
    std::size_t frames = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 0;

    std::size_t patches_per_frame() const noexcept {
        return rows * cols;
    }
    std::size_t element_count() const noexcept {
        return frames * rows * cols * channels;
    }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Per-window patch features, frame-major, row-major, channel-last.
///
/// Construction rejects non-finite values and all-zero patch vectors, so cosine similarity is
/// defined for every pair of patches in a valid grid.
class FrameFeatureGrid {
public:
    FrameFeatureGrid(GridShape shape, std::vector<float> data);

    const GridShape& shape() const noexcept {
        return m_shape;
    }
    std::size_t frames() const noexcept {
        return m_shape.frames;
    }
    std::size_t rows() const noexcept {
        return m_shape.rows;
    }
    std::size_t cols() const noexcept {
        return m_shape.cols;
    }
    std::size_t channels() const noexcept {
        return m_shape.channels;
    }

    std::span<const float> patch(std::size_t frame, std::size_t row, std::size_t col) const {
        return {m_data.data() + offset(frame, row, col), m_shape.channels};
    }
    std::span<const float> frame(std::size_t frame) const {
        const std::size_t n = m_shape.patches_per_frame() * m_shape.channels;
        return {m_data.data() + frame * n, n};
    }
    std::span<const float> data() const noexcept {
        return m_data;
    }

    /// Frames [begin, end); frames at or past `frames()` repeat the last frame.
    FrameFeatureGrid slice_padded(std::size_t begin, std::size_t end) const;

private:
    std::size_t offset(std::size_t frame, std::size_t row, std::size_t col) const noexcept {
        return ((frame * m_shape.rows + row) * m_shape.cols + col) * m_shape.channels;
    }

    GridShape m_shape;
    std::vector<float> m_data;
};

// EFG1 container: magic "EFG1", five little-endian u32 (version=1, T, h, w, d), then T*h*w*d
// little-endian f32 values.
inline constexpr std::uint32_t kEfgVersion = 1;
inline constexpr std::size_t kEfgHeaderBytes = 4 + 5 * 4;

GridShape read_efg_shape(const std::filesystem::path& path);
FrameFeatureGrid read_efg(const std::filesystem::path& path);
/// Reads frames [begin, end) only; requires end <= T.
FrameFeatureGrid read_efg_frames(const std::filesystem::path& path, std::size_t begin, std::size_t end);
void write_efg(const std::filesystem::path& path, const FrameFeatureGrid& grid);

}  // namespace streamvad

// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "streamvad/config.hpp"
#include "streamvad/error.hpp"

// Hybrid streaming memory: KV-cache bookkeeping with rotary re-indexing of the rows shared by
// consecutive windows, plus a bounded textual memory of earlier window descriptions.
namespace streamvad::hsm {

enum class HsmErrorKind { kOddDimension, kUnderflowShift, kMisalignedOverlap, kGeometryMismatch, kNonContiguous };
using HsmError = KindedError<HsmErrorKind>;

/// Rotates channel pairs (2i, 2i+1) by position * base^(-2i/d), d = v.size().
std::vector<double> rope_rotate(std::span<const double> v, std::int64_t position, double base = 10000.0);
void rope_rotate_inplace(std::span<double> v, std::int64_t position, double base = 10000.0);

enum class Segment : std::uint8_t { kPrefix, kVisual, kMemory, kGenerated };

const char* segment_name(Segment segment) noexcept;

struct CacheGeometry {
    std::size_t layers = 1;
    std::size_t heads = 1;
    std::size_t head_dim = 2;
    double rope_base = 10000.0;

    std::size_t width() const noexcept {
        return heads * head_dim;
    }
    friend bool operator==(const CacheGeometry&, const CacheGeometry&) = default;
};

/// Per-layer key/value rows tagged with absolute positions and segments.
///
/// Keys are stored with RoPE already applied at the row's position; values are unrotated.
/// Positions must be strictly increasing.
class SegmentedKVCache {
public:
    explicit SegmentedKVCache(CacheGeometry geometry);

    const CacheGeometry& geometry() const noexcept {
        return m_geometry;
    }
    std::size_t size() const noexcept {
        return m_positions.size();
    }
    bool empty() const noexcept {
        return m_positions.empty();
    }

    std::int64_t position(std::size_t row) const {
        return m_positions[row];
    }
    Segment segment(std::size_t row) const {
        return m_segments[row];
    }
    /// Position for the next appended row (0 for an empty cache).
    std::int64_t next_position() const noexcept {
        return m_positions.empty() ? 0 : m_positions.back() + 1;
    }

    std::span<const double> key(std::size_t layer, std::size_t row) const {
        return {m_keys[layer].data() + row * width(), width()};
    }
    std::span<const double> value(std::size_t layer, std::size_t row) const {
        return {m_values[layer].data() + row * width(), width()};
    }
    std::span<double> mutable_key(std::size_t layer, std::size_t row) {
        return {m_keys[layer].data() + row * width(), width()};
    }
    std::span<double> mutable_value(std::size_t layer, std::size_t row) {
        return {m_values[layer].data() + row * width(), width()};
    }
    /// Key of one head, pre-rotated.
    std::span<const double> head_key(std::size_t layer, std::size_t row, std::size_t head) const {
        return key(layer, row).subspan(head * m_geometry.head_dim, m_geometry.head_dim);
    }
    std::span<const double> head_value(std::size_t layer, std::size_t row, std::size_t head) const {
        return value(layer, row).subspan(head * m_geometry.head_dim, m_geometry.head_dim);
    }

    /// Appends a zero-filled row and returns its index. Throws if `position` does not increase.
    std::size_t append_row(std::int64_t position, Segment segment);
    /// Appends every row of `other` (same geometry, positions continuing upward).
    void append_rows(const SegmentedKVCache& other);

    SegmentedKVCache slice(std::size_t begin, std::size_t end) const;
    void truncate(std::size_t rows);

    std::size_t count(Segment segment) const noexcept;
    /// [begin, end) rows of a segment; the rows of one segment must be contiguous.
    std::pair<std::size_t, std::size_t> segment_rows(Segment segment) const;

    /// Overwrites positions (used by shift_cache); keys are not touched.
    void set_position(std::size_t row, std::int64_t position) {
        m_positions[row] = position;
    }

private:
    std::size_t width() const noexcept {
        return m_geometry.width();
    }

    CacheGeometry m_geometry;
    std::vector<std::int64_t> m_positions;
    std::vector<Segment> m_segments;
    std::vector<std::vector<double>> m_keys;    // per layer, rows * width
    std::vector<std::vector<double>> m_values;  // per layer, rows * width
};

/// Re-indexes rows `shift` positions backward: keys get R_{-shift} per head, values stay, and
/// positions drop by `shift`. Throws UnderflowShift if a row would land inside the prefix
/// [0, prefix_len).
SegmentedKVCache shift_cache(SegmentedKVCache rows, std::size_t shift, std::size_t prefix_len);

struct ContextBuild {
    SegmentedKVCache cache;
    /// Backward shift applied to the reused rows (0 without reuse).
    std::size_t shift = 0;
    std::size_t reused_rows = 0;
    /// Positions [visual_begin, visual_begin + reserved_visual) are left for new visual tokens.
    std::int64_t visual_begin = 0;
    std::size_t reserved_visual = 0;
};

/// Context for a window without reusable rows: the prefix alone.
ContextBuild build_context(const SegmentedKVCache& prefix, std::size_t new_visual_tokens);

/// Context reusing `overlap`, the contiguous VISUAL tail of the previous window that covers the
/// overlapped frames. `expected_overlap_rows` is the token count those frames retain; any other
/// row count raises MisalignedOverlap.
ContextBuild build_context(const SegmentedKVCache& prefix, const SegmentedKVCache& overlap,
                           std::size_t expected_overlap_rows, std::size_t new_visual_tokens);

struct MemoryEntry {
    std::size_t window_index = 0;
    std::string summary;
    friend bool operator==(const MemoryEntry&, const MemoryEntry&) = default;
};

/// Descriptions of the most recent windows, oldest first.
class LongTermMemory {
public:
    LongTermMemory() = default;

    const std::deque<MemoryEntry>& entries() const noexcept {
        return m_entries;
    }
    bool empty() const noexcept {
        return m_entries.empty();
    }
    std::size_t size() const noexcept {
        return m_entries.size();
    }

    /// One line per entry with the window's time span in seconds; empty when no entries.
    std::string render(const StreamConfig& cfg) const;
    static std::string render_entry(const MemoryEntry& entry, const StreamConfig& cfg);

    friend LongTermMemory update_memory(LongTermMemory mem, std::string summary, std::size_t window_index,
                                        std::size_t capacity);

private:
    std::deque<MemoryEntry> m_entries;
};

/// Appends (window_index, summary) and evicts the oldest entries beyond `capacity`.
/// Throws std::invalid_argument if window_index does not exceed every stored index.
LongTermMemory update_memory(LongTermMemory mem, std::string summary, std::size_t window_index, std::size_t capacity);

}  // namespace streamvad::hsm

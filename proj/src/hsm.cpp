// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/hsm.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace streamvad::hsm {

void rope_rotate_inplace(std::span<double> v, std::int64_t position, double base) {
    if (v.size() % 2 != 0) {
        throw HsmError(HsmErrorKind::kOddDimension, "rotary embedding needs an even dimension, got " +
                                                        std::to_string(v.size()));
    }
    if (position == 0) {
        return;
    }
    const double d = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size() / 2; ++i) {
        const double theta = static_cast<double>(position) * std::pow(base, -2.0 * static_cast<double>(i) / d);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double x = v[2 * i];
        const double y = v[2 * i + 1];
        v[2 * i] = x * c - y * s;
        v[2 * i + 1] = x * s + y * c;
    }
}

std::vector<double> rope_rotate(std::span<const double> v, std::int64_t position, double base) {
    std::vector<double> out(v.begin(), v.end());
    rope_rotate_inplace(out, position, base);
    return out;
}

const char* segment_name(Segment segment) noexcept {
    switch (segment) {
        case Segment::kPrefix: return "PREFIX";
        case Segment::kVisual: return "VISUAL";
        case Segment::kMemory: return "MEMORY";
        case Segment::kGenerated: return "GENERATED";
    }
    return "?";
}

SegmentedKVCache::SegmentedKVCache(CacheGeometry geometry)
    : m_geometry(geometry),
      m_keys(geometry.layers),
      m_values(geometry.layers) {
    if (geometry.head_dim % 2 != 0) {
        throw HsmError(HsmErrorKind::kOddDimension, "head_dim must be even");
    }
}

std::size_t SegmentedKVCache::append_row(std::int64_t position, Segment segment) {
    if (!m_positions.empty() && position <= m_positions.back()) {
        throw HsmError(HsmErrorKind::kNonContiguous, "cache positions must be strictly increasing");
    }
    m_positions.push_back(position);
    m_segments.push_back(segment);
    for (std::size_t l = 0; l < m_geometry.layers; ++l) {
        m_keys[l].resize(m_keys[l].size() + width(), 0.0);
        m_values[l].resize(m_values[l].size() + width(), 0.0);
    }
    return m_positions.size() - 1;
}

void SegmentedKVCache::append_rows(const SegmentedKVCache& other) {
    if (!(other.m_geometry == m_geometry)) {
        throw HsmError(HsmErrorKind::kGeometryMismatch, "cannot concatenate caches of different geometry");
    }
    if (!other.empty() && !empty() && other.m_positions.front() <= m_positions.back()) {
        throw HsmError(HsmErrorKind::kNonContiguous, "appended rows must continue upward in position");
    }
    m_positions.insert(m_positions.end(), other.m_positions.begin(), other.m_positions.end());
    m_segments.insert(m_segments.end(), other.m_segments.begin(), other.m_segments.end());
    for (std::size_t l = 0; l < m_geometry.layers; ++l) {
        m_keys[l].insert(m_keys[l].end(), other.m_keys[l].begin(), other.m_keys[l].end());
        m_values[l].insert(m_values[l].end(), other.m_values[l].begin(), other.m_values[l].end());
    }
}

SegmentedKVCache SegmentedKVCache::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) {
        throw std::out_of_range("cache slice out of range");
    }
    SegmentedKVCache out(m_geometry);
    out.m_positions.assign(m_positions.begin() + static_cast<std::ptrdiff_t>(begin),
                           m_positions.begin() + static_cast<std::ptrdiff_t>(end));
    out.m_segments.assign(m_segments.begin() + static_cast<std::ptrdiff_t>(begin),
                          m_segments.begin() + static_cast<std::ptrdiff_t>(end));
    const auto w = static_cast<std::ptrdiff_t>(width());
    for (std::size_t l = 0; l < m_geometry.layers; ++l) {
        out.m_keys[l].assign(m_keys[l].begin() + static_cast<std::ptrdiff_t>(begin) * w,
                             m_keys[l].begin() + static_cast<std::ptrdiff_t>(end) * w);
        out.m_values[l].assign(m_values[l].begin() + static_cast<std::ptrdiff_t>(begin) * w,
                               m_values[l].begin() + static_cast<std::ptrdiff_t>(end) * w);
    }
    return out;
}

void SegmentedKVCache::truncate(std::size_t rows) {
    if (rows >= size()) {
        return;
    }
    m_positions.resize(rows);
    m_segments.resize(rows);
    for (std::size_t l = 0; l < m_geometry.layers; ++l) {
        m_keys[l].resize(rows * width());
        m_values[l].resize(rows * width());
    }
}

std::size_t SegmentedKVCache::count(Segment segment) const noexcept {
    std::size_t n = 0;
    for (Segment s : m_segments) {
        n += s == segment ? 1 : 0;
    }
    return n;
}

std::pair<std::size_t, std::size_t> SegmentedKVCache::segment_rows(Segment segment) const {
    std::size_t begin = size();
    std::size_t end = size();
    for (std::size_t i = 0; i < size(); ++i) {
        if (m_segments[i] == segment) {
            begin = i;
            break;
        }
    }
    end = begin;
    while (end < size() && m_segments[end] == segment) {
        ++end;
    }
    for (std::size_t i = end; i < size(); ++i) {
        if (m_segments[i] == segment) {
            throw HsmError(HsmErrorKind::kNonContiguous,
                           std::string("segment ") + segment_name(segment) + " is not contiguous");
        }
    }
    return {begin, end};
}

SegmentedKVCache shift_cache(SegmentedKVCache rows, std::size_t shift, std::size_t prefix_len) {
    const auto delta = static_cast<std::int64_t>(shift);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows.position(i) - delta < static_cast<std::int64_t>(prefix_len)) {
            throw HsmError(HsmErrorKind::kUnderflowShift,
                           "shifting row at position " + std::to_string(rows.position(i)) + " by " +
                               std::to_string(shift) + " collides with the prefix [0, " +
                               std::to_string(prefix_len) + ")");
        }
    }
    if (shift == 0) {
        return rows;
    }
    const auto& geo = rows.geometry();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t l = 0; l < geo.layers; ++l) {
            auto key = rows.mutable_key(l, i);
            for (std::size_t h = 0; h < geo.heads; ++h) {
                rope_rotate_inplace(key.subspan(h * geo.head_dim, geo.head_dim), -delta, geo.rope_base);
            }
        }
        rows.set_position(i, rows.position(i) - delta);
    }
    return rows;
}

namespace {

void check_prefix(const SegmentedKVCache& prefix) {
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (prefix.segment(i) != Segment::kPrefix || prefix.position(i) != static_cast<std::int64_t>(i)) {
            throw HsmError(HsmErrorKind::kNonContiguous, "prefix rows must be PREFIX rows at positions [0, n)");
        }
    }
}

}  // namespace

ContextBuild build_context(const SegmentedKVCache& prefix, std::size_t new_visual_tokens) {
    check_prefix(prefix);
    ContextBuild out{prefix, 0, 0, static_cast<std::int64_t>(prefix.size()), new_visual_tokens};
    return out;
}

ContextBuild build_context(const SegmentedKVCache& prefix, const SegmentedKVCache& overlap,
                           std::size_t expected_overlap_rows, std::size_t new_visual_tokens) {
    check_prefix(prefix);
    if (!(overlap.geometry() == prefix.geometry())) {
        throw HsmError(HsmErrorKind::kGeometryMismatch, "overlap rows and prefix differ in geometry");
    }
    if (overlap.size() != expected_overlap_rows) {
        throw HsmError(HsmErrorKind::kMisalignedOverlap,
                       "overlap holds " + std::to_string(overlap.size()) + " rows, overlapped frames retain " +
                           std::to_string(expected_overlap_rows));
    }
    if (overlap.empty()) {
        return build_context(prefix, new_visual_tokens);
    }
    for (std::size_t i = 0; i < overlap.size(); ++i) {
        if (overlap.segment(i) != Segment::kVisual ||
            overlap.position(i) != overlap.position(0) + static_cast<std::int64_t>(i)) {
            throw HsmError(HsmErrorKind::kMisalignedOverlap, "overlap rows must be a contiguous VISUAL run");
        }
    }
    const auto prefix_len = static_cast<std::int64_t>(prefix.size());
    if (overlap.position(0) < prefix_len) {
        throw HsmError(HsmErrorKind::kMisalignedOverlap, "overlap rows start inside the prefix");
    }
    const auto shift = static_cast<std::size_t>(overlap.position(0) - prefix_len);

    ContextBuild out{prefix, shift, overlap.size(), 0, new_visual_tokens};
    out.cache.append_rows(shift_cache(overlap, shift, prefix.size()));
    out.visual_begin = out.cache.next_position();
    return out;
}

std::string LongTermMemory::render_entry(const MemoryEntry& entry, const StreamConfig& cfg) {
    const double start = static_cast<double>(entry.window_index * cfg.stride()) / cfg.sample_fps;
    const double end = start + cfg.window_seconds();
    char stamp[64];
    std::snprintf(stamp, sizeof(stamp), "[%.1fs-%.1fs] ", start, end);
    return stamp + entry.summary + "\n";
}

std::string LongTermMemory::render(const StreamConfig& cfg) const {
    std::string out;
    for (const auto& entry : m_entries) {
        out += render_entry(entry, cfg);
    }
    return out;
}

LongTermMemory update_memory(LongTermMemory mem, std::string summary, std::size_t window_index,
                             std::size_t capacity) {
    if (!mem.m_entries.empty() && window_index <= mem.m_entries.back().window_index) {
        throw std::invalid_argument("memory updates must arrive in increasing window order");
    }
    mem.m_entries.push_back(MemoryEntry{window_index, std::move(summary)});
    while (mem.m_entries.size() > capacity) {
        mem.m_entries.pop_front();
    }
    return mem;
}

}  // namespace streamvad::hsm

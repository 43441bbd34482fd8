// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/feature_grid.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace streamvad {

FrameFeatureGrid::FrameFeatureGrid(GridShape shape, std::vector<float> data)
    : m_shape(shape),
      m_data(std::move(data)) {
    if (shape.frames == 0 || shape.rows == 0 || shape.cols == 0 || shape.channels == 0) {
        throw FeatureError(FeatureErrorKind::kShapeMismatch, "feature grid dimensions must all be >= 1");
    }
    if (m_data.size() != shape.element_count()) {
        throw FeatureError(FeatureErrorKind::kShapeMismatch,
                           "feature grid holds " + std::to_string(m_data.size()) + " values, expected " +
                               std::to_string(shape.element_count()));
    }
    const std::size_t d = shape.channels;
    for (std::size_t base = 0; base < m_data.size(); base += d) {
        bool all_zero = true;
        for (std::size_t c = 0; c < d; ++c) {
            const float v = m_data[base + c];
            if (!std::isfinite(v)) {
                throw FeatureError(FeatureErrorKind::kNonFinite, "feature grid contains a non-finite value");
            }
            all_zero = all_zero && v == 0.0f;
        }
        if (all_zero) {
            const std::size_t patch = base / d;
            throw FeatureError(FeatureErrorKind::kDegenerateFeature,
                               "all-zero patch feature at frame " +
                                   std::to_string(patch / shape.patches_per_frame()) + ", patch " +
                                   std::to_string(patch % shape.patches_per_frame()));
        }
    }
}

FrameFeatureGrid FrameFeatureGrid::slice_padded(std::size_t begin, std::size_t end) const {
    if (end <= begin) {
        throw FeatureError(FeatureErrorKind::kShapeMismatch, "empty frame range");
    }
    const std::size_t per_frame = m_shape.patches_per_frame() * m_shape.channels;
    std::vector<float> out;
    out.reserve((end - begin) * per_frame);
    for (std::size_t f = begin; f < end; ++f) {
        auto src = frame(std::min(f, m_shape.frames - 1));
        out.insert(out.end(), src.begin(), src.end());
    }
    GridShape shape = m_shape;
    shape.frames = end - begin;
    return FrameFeatureGrid(shape, std::move(out));
}

namespace {

std::uint32_t load_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

GridShape read_header(std::ifstream& in, const std::filesystem::path& path) {
    std::array<unsigned char, kEfgHeaderBytes> header{};
    if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
        throw IoError("truncated EFG1 header: " + path.string());
    }
    if (std::memcmp(header.data(), "EFG1", 4) != 0) {
        throw IoError("bad EFG1 magic: " + path.string());
    }
    const std::uint32_t version = load_u32_le(header.data() + 4);
    if (version != kEfgVersion) {
        throw IoError("unsupported EFG1 version " + std::to_string(version) + ": " + path.string());
    }
    GridShape shape;
    shape.frames = load_u32_le(header.data() + 8);
    shape.rows = load_u32_le(header.data() + 12);
    shape.cols = load_u32_le(header.data() + 16);
    shape.channels = load_u32_le(header.data() + 20);
    return shape;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open feature file: " + path.string());
    }
    return in;
}

}  // namespace

GridShape read_efg_shape(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_header(in, path);
}

FrameFeatureGrid read_efg_frames(const std::filesystem::path& path, std::size_t begin, std::size_t end) {
    auto in = open_input(path);
    GridShape shape = read_header(in, path);
    if (begin >= end || end > shape.frames) {
        throw IoError("frame range [" + std::to_string(begin) + ", " + std::to_string(end) +
                      ") outside feature file with " + std::to_string(shape.frames) + " frames");
    }
    const std::size_t per_frame = shape.patches_per_frame() * shape.channels;
    const std::size_t count = (end - begin) * per_frame;
    in.seekg(static_cast<std::streamoff>(kEfgHeaderBytes + begin * per_frame * 4));
    std::vector<unsigned char> raw(count * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw IoError("truncated EFG1 payload: " + path.string());
    }
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        values[i] = std::bit_cast<float>(load_u32_le(raw.data() + 4 * i));
    }
    shape.frames = end - begin;
    return FrameFeatureGrid(shape, std::move(values));
}

FrameFeatureGrid read_efg(const std::filesystem::path& path) {
    const GridShape shape = read_efg_shape(path);
    if (shape.frames == 0) {
        throw IoError("feature file has no frames: " + path.string());
    }
    return read_efg_frames(path, 0, shape.frames);
}

void write_efg(const std::filesystem::path& path, const FrameFeatureGrid& grid) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write feature file: " + path.string());
    }
    std::array<unsigned char, kEfgHeaderBytes> header{};
    std::memcpy(header.data(), "EFG1", 4);
    const auto& s = grid.shape();
    store_u32_le(header.data() + 4, kEfgVersion);
    store_u32_le(header.data() + 8, static_cast<std::uint32_t>(s.frames));
    store_u32_le(header.data() + 12, static_cast<std::uint32_t>(s.rows));
    store_u32_le(header.data() + 16, static_cast<std::uint32_t>(s.cols));
    store_u32_le(header.data() + 20, static_cast<std::uint32_t>(s.channels));
    out.write(reinterpret_cast<const char*>(header.data()), header.size());
    std::vector<unsigned char> raw(grid.data().size() * 4);
    for (std::size_t i = 0; i < grid.data().size(); ++i) {
        store_u32_le(raw.data() + 4 * i, std::bit_cast<std::uint32_t>(grid.data()[i]));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw IoError("failed writing feature file: " + path.string());
    }
}

}  // namespace streamvad

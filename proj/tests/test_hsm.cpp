// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "streamvad/hsm.hpp"

using namespace streamvad;
using namespace streamvad::hsm;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v) {
        x = dist(rng);
    }
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Rows at the given positions with keys rotated from `raw` at their position.
SegmentedKVCache rotated_rows(const CacheGeometry& geo, std::int64_t first, std::size_t n, Segment seg,
                              std::vector<std::vector<double>>& raw, std::mt19937_64& rng) {
    SegmentedKVCache cache(geo);
    for (std::size_t i = 0; i < n; ++i) {
        const auto pos = first + static_cast<std::int64_t>(i);
        const std::size_t row = cache.append_row(pos, seg);
        raw.push_back(random_vec(geo.width(), rng));
        for (std::size_t l = 0; l < geo.layers; ++l) {
            auto key = cache.mutable_key(l, row);
            for (std::size_t h = 0; h < geo.heads; ++h) {
                const auto part = std::span<const double>(raw.back()).subspan(h * geo.head_dim, geo.head_dim);
                const auto rotated = rope_rotate(part, pos, geo.rope_base);
                std::copy(rotated.begin(), rotated.end(), key.begin() + static_cast<std::ptrdiff_t>(h * geo.head_dim));
            }
        }
    }
    return cache;
}

SegmentedKVCache prefix_rows(const CacheGeometry& geo, std::size_t n) {
    SegmentedKVCache cache(geo);
    for (std::size_t i = 0; i < n; ++i) {
        cache.append_row(static_cast<std::int64_t>(i), Segment::kPrefix);
    }
    return cache;
}

}  // namespace

TEST(Rope, PositionZeroIsIdentity) {
    std::mt19937_64 rng(1);
    const auto v = random_vec(16, rng);
    EXPECT_EQ(rope_rotate(v, 0), v);
}

TEST(Rope, PreservesNorm) {
    std::mt19937_64 rng(2);
    const auto v = random_vec(32, rng);
    const auto r = rope_rotate(v, 1234);
    EXPECT_NEAR(dot(r, r), dot(v, v), 1e-9);
}

TEST(Rope, FirstPairRotatesByPosition) {
    const std::vector<double> v = {1.0, 0.0, 1.0, 0.0};
    const auto r = rope_rotate(v, 3);
    EXPECT_NEAR(r[0], std::cos(3.0), 1e-12);
    EXPECT_NEAR(r[1], std::sin(3.0), 1e-12);
    // Second pair: theta = 3 * 10000^(-2/4) = 0.03
    EXPECT_NEAR(r[2], std::cos(0.03), 1e-12);
    EXPECT_NEAR(r[3], std::sin(0.03), 1e-12);
}

TEST(Rope, Composes) {
    std::mt19937_64 rng(3);
    const auto v = random_vec(16, rng);
    const auto two_step = rope_rotate(rope_rotate(v, 17), 25);
    const auto one_step = rope_rotate(v, 42);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_NEAR(two_step[i], one_step[i], 1e-9);
    }
    const auto back = rope_rotate(rope_rotate(v, 500), -500);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_NEAR(back[i], v[i], 1e-9);
    }
}

TEST(Rope, DotProductDependsOnlyOnOffset) {
    std::mt19937_64 rng(4);
    const auto q = random_vec(16, rng);
    const auto k = random_vec(16, rng);
    const double a = dot(rope_rotate(q, 300), rope_rotate(k, 250));
    const double b = dot(rope_rotate(q, 60), rope_rotate(k, 10));
    EXPECT_NEAR(a, b, 1e-9);
}

TEST(Rope, OddDimensionThrows) {
    const std::vector<double> v = {1.0, 2.0, 3.0};
    try {
        rope_rotate(v, 1);
        FAIL();
    } catch (const HsmError& e) {
        EXPECT_EQ(e.kind(), HsmErrorKind::kOddDimension);
    }
    EXPECT_THROW(SegmentedKVCache(CacheGeometry{1, 1, 3}), HsmError);
}

TEST(Cache, PositionsMustIncrease) {
    SegmentedKVCache cache(CacheGeometry{1, 1, 2});
    cache.append_row(0, Segment::kPrefix);
    cache.append_row(4, Segment::kVisual);
    EXPECT_EQ(cache.next_position(), 5);
    EXPECT_THROW(cache.append_row(4, Segment::kVisual), HsmError);
}

TEST(Cache, SliceTruncateAndSegments) {
    std::mt19937_64 rng(5);
    const CacheGeometry geo{2, 2, 4};
    std::vector<std::vector<double>> raw;
    auto cache = prefix_rows(geo, 3);
    cache.append_rows(rotated_rows(geo, 3, 5, Segment::kVisual, raw, rng));
    cache.append_row(8, Segment::kMemory);
    EXPECT_EQ(cache.count(Segment::kVisual), 5u);
    EXPECT_EQ(cache.segment_rows(Segment::kVisual), std::make_pair(std::size_t{3}, std::size_t{8}));
    EXPECT_EQ(cache.segment_rows(Segment::kGenerated), std::make_pair(cache.size(), cache.size()));

    const auto mid = cache.slice(4, 6);
    EXPECT_EQ(mid.size(), 2u);
    EXPECT_EQ(mid.position(0), 4);
    EXPECT_EQ(std::vector<double>(mid.key(1, 1).begin(), mid.key(1, 1).end()),
              std::vector<double>(cache.key(1, 5).begin(), cache.key(1, 5).end()));
    EXPECT_THROW(cache.slice(5, 20), std::out_of_range);

    cache.append_row(9, Segment::kVisual);
    EXPECT_THROW(cache.segment_rows(Segment::kVisual), HsmError);
    cache.truncate(8);
    EXPECT_EQ(cache.size(), 8u);
    EXPECT_EQ(cache.next_position(), 8);
}

TEST(Cache, AppendRowsChecksGeometryAndOrder) {
    SegmentedKVCache a(CacheGeometry{1, 1, 2});
    a.append_row(5, Segment::kVisual);
    SegmentedKVCache b(CacheGeometry{1, 2, 2});
    b.append_row(6, Segment::kVisual);
    EXPECT_THROW(a.append_rows(b), HsmError);
    SegmentedKVCache c(CacheGeometry{1, 1, 2});
    c.append_row(3, Segment::kVisual);
    EXPECT_THROW(a.append_rows(c), HsmError);
}

TEST(Shift, MatchesFreshRotationAtNewPosition) {
    std::mt19937_64 rng(6);
    const CacheGeometry geo{2, 4, 16};
    std::vector<std::vector<double>> raw;
    const auto rows = rotated_rows(geo, 1000, 40, Segment::kVisual, raw, rng);
    const std::size_t shift = 937;
    const auto shifted = shift_cache(rows, shift, 50);
    std::vector<std::vector<double>> raw_again;
    std::mt19937_64 rng_again(6);
    const auto fresh = rotated_rows(geo, 1000 - static_cast<std::int64_t>(shift), 40, Segment::kVisual, raw_again, rng_again);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(shifted.position(i), fresh.position(i));
        for (std::size_t l = 0; l < geo.layers; ++l) {
            for (std::size_t c = 0; c < geo.width(); ++c) {
                EXPECT_NEAR(shifted.key(l, i)[c], fresh.key(l, i)[c], 1e-9);
            }
        }
    }
}

TEST(Shift, ValuesUntouched) {
    const CacheGeometry geo{1, 1, 2};
    SegmentedKVCache rows(geo);
    rows.append_row(10, Segment::kVisual);
    rows.mutable_value(0, 0)[0] = 7.0;
    rows.mutable_key(0, 0)[0] = 1.0;
    const auto shifted = shift_cache(rows, 4, 2);
    EXPECT_EQ(shifted.value(0, 0)[0], 7.0);
    EXPECT_EQ(shifted.position(0), 6);
}

TEST(Shift, IntoPrefixThrows) {
    SegmentedKVCache rows(CacheGeometry{1, 1, 2});
    rows.append_row(10, Segment::kVisual);
    EXPECT_NO_THROW(shift_cache(rows, 6, 4));
    try {
        shift_cache(rows, 7, 4);
        FAIL();
    } catch (const HsmError& e) {
        EXPECT_EQ(e.kind(), HsmErrorKind::kUnderflowShift);
    }
}

TEST(Context, WithoutReuseHoldsOnlyPrefix) {
    const CacheGeometry geo{1, 1, 2};
    const auto prefix = prefix_rows(geo, 12);
    const auto ctx = build_context(prefix, 30);
    EXPECT_EQ(ctx.cache.size(), 12u);
    EXPECT_EQ(ctx.visual_begin, 12);
    EXPECT_EQ(ctx.reserved_visual, 30u);
    EXPECT_EQ(ctx.shift, 0u);
}

TEST(Context, ReuseShiftsOverlapDirectlyAfterPrefix) {
    std::mt19937_64 rng(7);
    const CacheGeometry geo{2, 2, 4};
    const auto prefix = prefix_rows(geo, 12);
    std::vector<std::vector<double>> raw;
    // Previous window: prefix [0,12), visual [12, 112); the overlap is its tail [52, 112).
    const auto overlap = rotated_rows(geo, 52, 60, Segment::kVisual, raw, rng);
    const auto ctx = build_context(prefix, overlap, 60, 40);
    EXPECT_EQ(ctx.shift, 40u);
    EXPECT_EQ(ctx.reused_rows, 60u);
    ASSERT_EQ(ctx.cache.size(), 72u);
    for (std::size_t i = 0; i < ctx.cache.size(); ++i) {
        EXPECT_EQ(ctx.cache.position(i), static_cast<std::int64_t>(i));
    }
    EXPECT_EQ(ctx.visual_begin, 72);
    // Reused keys equal keys rotated fresh at their new positions.
    for (std::size_t i = 0; i < 60; ++i) {
        const auto fresh = rope_rotate(std::span<const double>(raw[i]).subspan(0, 4), static_cast<std::int64_t>(12 + i));
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_NEAR(ctx.cache.key(0, 12 + i)[c], fresh[c], 1e-9);
        }
    }
}

TEST(Context, OffByOneOverlapIsMisaligned) {
    std::mt19937_64 rng(8);
    const CacheGeometry geo{1, 1, 2};
    const auto prefix = prefix_rows(geo, 4);
    std::vector<std::vector<double>> raw;
    const auto overlap = rotated_rows(geo, 20, 10, Segment::kVisual, raw, rng);
    for (std::size_t expected : {9u, 11u}) {
        try {
            build_context(prefix, overlap, expected, 5);
            FAIL();
        } catch (const HsmError& e) {
            EXPECT_EQ(e.kind(), HsmErrorKind::kMisalignedOverlap);
        }
    }
}

TEST(Context, RejectsGappedOrNonVisualOverlap) {
    const CacheGeometry geo{1, 1, 2};
    const auto prefix = prefix_rows(geo, 4);
    SegmentedKVCache gapped(geo);
    gapped.append_row(10, Segment::kVisual);
    gapped.append_row(12, Segment::kVisual);
    EXPECT_THROW(build_context(prefix, gapped, 2, 1), HsmError);
    SegmentedKVCache memory(geo);
    memory.append_row(10, Segment::kMemory);
    EXPECT_THROW(build_context(prefix, memory, 1, 1), HsmError);
    SegmentedKVCache bad_prefix(geo);
    bad_prefix.append_row(0, Segment::kVisual);
    EXPECT_THROW(build_context(bad_prefix, 3), HsmError);
}

TEST(Memory, ZeroCapacityStaysEmpty) {
    LongTermMemory mem;
    mem = update_memory(mem, "a person walks", 0, 0);
    EXPECT_TRUE(mem.empty());
    EXPECT_EQ(mem.render(StreamConfig{}), "");
}

TEST(Memory, KeepsMostRecentEntries) {
    LongTermMemory mem;
    for (std::size_t i = 1; i <= 6; ++i) {
        mem = update_memory(mem, "window " + std::to_string(i), i, 4);
    }
    ASSERT_EQ(mem.size(), 4u);
    std::vector<std::size_t> ids;
    for (const auto& e : mem.entries()) {
        ids.push_back(e.window_index);
    }
    EXPECT_EQ(ids, (std::vector<std::size_t>{3, 4, 5, 6}));
}

TEST(Memory, RejectsNonIncreasingIndex) {
    LongTermMemory mem;
    mem = update_memory(mem, "x", 2, 4);
    EXPECT_THROW(update_memory(mem, "y", 2, 4), std::invalid_argument);
    EXPECT_THROW(update_memory(mem, "y", 1, 4), std::invalid_argument);
}

TEST(Memory, RendersTimeSpans) {
    StreamConfig cfg;
    LongTermMemory mem;
    mem = update_memory(mem, "car parks", 0, 4);
    mem = update_memory(mem, "car leaves", 1, 4);
    // stride 64 frames at 4 fps = 16 s; window 56 s
    EXPECT_EQ(mem.render(cfg), "[0.0s-56.0s] car parks\n[16.0s-72.0s] car leaves\n");
}

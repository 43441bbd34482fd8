// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "streamvad/ps.hpp"

using namespace streamvad;
using namespace streamvad::ps;

namespace {

StreamConfig small_cfg() {
    StreamConfig cfg;
    cfg.window_len = 32;
    cfg.overlap = 16;
    return cfg;
}

// Log-normal density written from the textbook form, peak placed via mode = exp(mu - sigma^2).
double lognormal_density(double x, double mode, double sigma) {
    if (x <= 0.0) {
        return 0.0;
    }
    const double mu = std::log(mode) + sigma * sigma;
    const double z = (std::log(x) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma);
}

// Direct O(n * taps) convolution with zero padding and taps normalized over [-3 sigma, 3 sigma].
std::vector<double> naive_smooth(const std::vector<double>& k, double sigma) {
    const int r = static_cast<int>(std::floor(3 * sigma));
    double norm = 0.0;
    for (int i = -r; i <= r; ++i) {
        norm += std::exp(-0.5 * (i / sigma) * (i / sigma));
    }
    std::vector<double> out(k.size(), 0.0);
    for (int x = 0; x < static_cast<int>(k.size()); ++x) {
        for (int y = 0; y < static_cast<int>(k.size()); ++y) {
            const int d = x - y;
            if (std::abs(d) <= r) {
                out[x] += std::exp(-0.5 * (d / sigma) * (d / sigma)) / norm * k[y];
            }
        }
    }
    return out;
}

}  // namespace

TEST(Kernel, ZeroAtOriginAndPeaksNearTarget) {
    const StreamConfig cfg;
    for (const Interval iv : {Interval{40, 140}, Interval{0, 10}, Interval{100, 223}, Interval{5, 5}}) {
        const auto k = lognormal_kernel(iv, cfg);
        ASSERT_EQ(k.size(), cfg.window_len);
        EXPECT_EQ(k[0], 0.0);
        const double target = std::max(1.0, iv.start + cfg.peak_position * (iv.end - iv.start));
        const auto argmax = static_cast<double>(std::max_element(k.begin(), k.end()) - k.begin());
        EXPECT_LE(std::abs(argmax - target), 1.0) << iv.start << "-" << iv.end;
    }
}

TEST(Kernel, MatchesTextbookDensity) {
    const StreamConfig cfg;
    const auto k = lognormal_kernel(Interval{40, 140}, cfg);
    for (std::size_t x = 1; x < k.size(); x += 7) {
        EXPECT_NEAR(k[x], lognormal_density(static_cast<double>(x), 60.0, cfg.sigma_k), 1e-12);
    }
}

TEST(Kernel, RejectsIntervalOutsideWindow) {
    const StreamConfig cfg;
    EXPECT_THROW(lognormal_kernel(Interval{10, 224}, cfg), PsError);
    EXPECT_THROW(lognormal_kernel(Interval{20, 10}, cfg), PsError);
}

TEST(Kernel, SingleIntervalKeepsFirstOnly) {
    StreamConfig cfg;
    const std::vector<Interval> ivs = {{10, 30}, {150, 200}};
    EXPECT_EQ(interval_kernel(ivs, cfg), lognormal_kernel(ivs[0], cfg));
    cfg.single_interval = false;
    const auto both = interval_kernel(ivs, cfg);
    const auto a = lognormal_kernel(ivs[0], cfg);
    const auto b = lognormal_kernel(ivs[1], cfg);
    for (std::size_t x = 0; x < both.size(); ++x) {
        EXPECT_NEAR(both[x], a[x] + b[x], 1e-15);
    }
    EXPECT_EQ(interval_kernel({}, cfg), std::vector<double>(cfg.window_len, 0.0));
}

TEST(Confidence, MeanMarginAndEdgeCases) {
    const std::vector<ProbabilityPair> probs = {{0.9, 0.05}, {0.6, 0.3}, {0.5, 0.5}};
    EXPECT_NEAR(confidence(probs), (0.85 + 0.3 + 0.0) / 3.0, 1e-12);
    EXPECT_EQ(confidence({}), 1.0);
    for (const ProbabilityPair bad : {ProbabilityPair{1.2, 0.1}, ProbabilityPair{0.3, 0.4}, ProbabilityPair{0.5, -0.1},
                                      ProbabilityPair{std::nan(""), 0.0}}) {
        const std::vector<ProbabilityPair> one = {bad};
        try {
            confidence(one);
            FAIL();
        } catch (const PsError& e) {
            EXPECT_EQ(e.kind(), PsErrorKind::kInvalidProbability);
        }
    }
}

TEST(Smoothing, TapsNormalizedAndSymmetric) {
    for (double sigma : {0.5, 1.0, 4.0, 7.3}) {
        const auto taps = gaussian_taps(sigma);
        EXPECT_EQ(taps.size(), 2 * static_cast<std::size_t>(std::floor(3 * sigma)) + 1);
        double total = 0.0;
        for (double t : taps) {
            total += t;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        for (std::size_t i = 0; i < taps.size(); ++i) {
            EXPECT_DOUBLE_EQ(taps[i], taps[taps.size() - 1 - i]);
        }
    }
}

TEST(Smoothing, MatchesNaiveConvolutionAndScalesLinearly) {
    const StreamConfig cfg;
    const auto k = lognormal_kernel(Interval{30, 90}, cfg);
    const auto expected = naive_smooth(k, cfg.sigma_g);
    const auto got = smooth_and_scale(k, 0.4, cfg.sigma_g);
    for (std::size_t x = 0; x < k.size(); ++x) {
        EXPECT_NEAR(got[x], 0.4 * expected[x], 1e-12);
    }
    EXPECT_EQ(smooth_and_scale(k, 0.0, cfg.sigma_g), std::vector<double>(k.size(), 0.0));
}

TEST(FixedZ, MatchesBruteForceBound) {
    const auto cfg = small_cfg();
    // Windows covering any frame: window / stride = 2 for this geometry.
    const std::size_t stride = cfg.stride();
    std::size_t cover = 0;
    for (std::size_t m = 0; m < 10 * cfg.window_len; ++m) {
        std::size_t c = 0;
        for (std::size_t s = 0; s <= m; s += stride) {
            c += (m < s + cfg.window_len) ? 1 : 0;
        }
        cover = std::max(cover, c);
    }
    double height = 0.0;
    for (std::size_t s = 0; s < cfg.window_len; ++s) {
        for (std::size_t e = s; e < cfg.window_len; ++e) {
            const double mode = std::max(1.0, s + cfg.peak_position * (e - s));
            std::vector<double> k(cfg.window_len);
            for (std::size_t x = 0; x < k.size(); ++x) {
                k[x] = lognormal_density(static_cast<double>(x), mode, cfg.sigma_k);
            }
            const auto sm = naive_smooth(k, cfg.sigma_g);
            height = std::max(height, *std::max_element(sm.begin(), sm.end()));
        }
    }
    EXPECT_EQ(cover, 2u);
    EXPECT_NEAR(fixed_normalizer(cfg), static_cast<double>(cover) * height, 1e-12);
}

TEST(FixedZ, BoundsWorstCaseStream) {
    const auto cfg = small_cfg();
    const double z = fixed_normalizer(cfg);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pos(0, cfg.window_len - 1);
    const std::size_t windows = 20;
    const std::size_t frames = (windows - 1) * cfg.stride() + cfg.window_len;
    Accumulator acc(frames, z);
    for (std::size_t w = 0; w < windows; ++w) {
        std::size_t a = pos(rng);
        std::size_t b = pos(rng);
        const std::vector<Interval> iv = {{std::min(a, b), std::max(a, b)}};
        acc.accumulate(window_curve(w, iv, 1.0, cfg), w * cfg.stride());
    }
    for (double s : acc.sums()) {
        EXPECT_LE(s, z + 1e-12);
    }
}

TEST(Accumulator, StreamingEqualsBatchAndIsCausal) {
    const auto cfg = small_cfg();
    const std::size_t windows = 6;
    const std::size_t frames = (windows - 1) * cfg.stride() + cfg.window_len;
    std::vector<LocalCurve> curves;
    for (std::size_t w = 0; w < windows; ++w) {
        const std::vector<Interval> iv = {{w % 5, 10 + w}};
        curves.push_back(window_curve(w, iv, 0.2 + 0.1 * static_cast<double>(w), cfg));
    }
    Accumulator stream(frames, fixed_normalizer(cfg));
    std::vector<ScoreSeries> snapshots;
    for (std::size_t w = 0; w < windows; ++w) {
        stream.accumulate(curves[w], w * cfg.stride());
        snapshots.push_back(stream.finalize(Normalization::kFixedZ));
    }
    Accumulator reversed(frames, fixed_normalizer(cfg));
    for (std::size_t w = windows; w-- > 0;) {
        reversed.accumulate(curves[w], w * cfg.stride());
    }
    const auto a = stream.finalize(Normalization::kFixedZ);
    const auto b = reversed.finalize(Normalization::kFixedZ);
    for (std::size_t m = 0; m < frames; ++m) {
        EXPECT_NEAR(a[m], b[m], 1e-12);
    }
    // Frames before window w+1 starts are final once window w has been accumulated.
    for (std::size_t w = 0; w + 1 < windows; ++w) {
        for (std::size_t m = 0; m < (w + 1) * cfg.stride(); ++m) {
            EXPECT_NEAR(snapshots[w][m], a[m], 1e-12);
        }
    }
}

TEST(Accumulator, RunningMaxPeaksAtOne) {
    const auto cfg = small_cfg();
    Accumulator acc(64, fixed_normalizer(cfg));
    const std::vector<Interval> iv = {{4, 20}};
    acc.accumulate(window_curve(0, iv, 0.3, cfg), 0);
    acc.accumulate(window_curve(1, iv, 0.7, cfg), 16);
    const auto s = acc.finalize(Normalization::kRunningMax);
    EXPECT_DOUBLE_EQ(s.max(), 1.0);
    const auto f = acc.finalize(Normalization::kFixedZ);
    EXPECT_LT(f.max(), 1.0);
    EXPECT_GT(f.max(), 0.0);
}

TEST(Accumulator, AllNormalGivesZeros) {
    const auto cfg = small_cfg();
    Accumulator acc(48, fixed_normalizer(cfg));
    acc.accumulate(window_curve(0, {}, 1.0, cfg), 0);
    acc.accumulate(window_curve(1, {}, 1.0, cfg), 16);
    for (auto mode : {Normalization::kFixedZ, Normalization::kRunningMax}) {
        const auto s = acc.finalize(mode);
        EXPECT_EQ(s.values(), std::vector<double>(48, 0.0));
    }
}

TEST(Accumulator, ErrorPaths) {
    const auto cfg = small_cfg();
    Accumulator acc(40, 1.0);
    try {
        acc.finalize(Normalization::kFixedZ);
        FAIL();
    } catch (const PsError& e) {
        EXPECT_EQ(e.kind(), PsErrorKind::kNoContribution);
    }
    try {
        acc.accumulate(window_curve(1, {}, 1.0, cfg), 16);
        FAIL();
    } catch (const PsError& e) {
        EXPECT_EQ(e.kind(), PsErrorKind::kOutOfRange);
    }
    EXPECT_THROW(Accumulator(10, 0.0), std::invalid_argument);
}

TEST(ScoresCsv, RoundTripAndErrors) {
    const ScoreSeries s({0.0, 0.5, 0.1234567, 1.0});
    std::stringstream buf;
    write_scores(buf, s);
    EXPECT_EQ(buf.str(), "frame_index,score\n0,0.000000\n1,0.500000\n2,0.123457\n3,1.000000\n");
    const auto back = read_scores(buf);
    ASSERT_EQ(back.size(), 4u);
    EXPECT_NEAR(back[2], 0.123457, 1e-12);

    std::stringstream empty;
    EXPECT_THROW(read_scores(empty), IoError);
    std::stringstream header_only("frame_index,score\n");
    EXPECT_THROW(read_scores(header_only), IoError);
    std::stringstream bad("frame_index,score\n0;0.5\n");
    EXPECT_THROW(read_scores(bad), IoError);
    std::stringstream gap("frame_index,score\n0,0.5\n2,0.5\n");
    EXPECT_THROW(read_scores(gap), IoError);
    std::stringstream junk("frame_index,score\n0,abc\n");
    EXPECT_THROW(read_scores(junk), IoError);
}

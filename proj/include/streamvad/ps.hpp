// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "streamvad/config.hpp"
#include "streamvad/error.hpp"
#include "streamvad/types.hpp"

// Probabilistic scoring: window-level interval predictions become a global frame-level score.
namespace streamvad::ps {

enum class PsErrorKind { kInvalidProbability, kOutOfRange, kInvalidInterval, kNoContribution };
using PsError = KindedError<PsErrorKind>;

/// Non-negative local curve over the frames of one window.
struct LocalCurve {
    std::size_t window_index = 0;
    std::vector<double> values;
};

/// Log-normal kernel over x = 0 .. window_len-1 peaking at start + r * (end - start)
/// (clamped to >= 1 frame). The 1/sqrt(2*pi) constant is omitted; normalization absorbs it.
std::vector<double> lognormal_kernel(const Interval& interval, const StreamConfig& cfg);

/// Kernel of all parsed intervals: zero for none, the first one when cfg.single_interval,
/// otherwise the sum over intervals.
std::vector<double> interval_kernel(std::span<const Interval> intervals, const StreamConfig& cfg);

/// Mean of (top1 - top2) over all generated tokens; 1.0 when there are none.
double confidence(std::span<const ProbabilityPair> token_probs);

/// Discrete Gaussian taps for offsets -R..R, R = floor(3 sigma), normalized to sum 1.
std::vector<double> gaussian_taps(double sigma);

/// alpha * (g * k), zero-padded at the window borders.
std::vector<double> smooth_and_scale(std::span<const double> kernel, double alpha, double sigma_g);

/// Full local curve for one window prediction.
LocalCurve window_curve(std::size_t window_index, std::span<const Interval> intervals, double alpha,
                        const StreamConfig& cfg);

enum class Normalization { kRunningMax, kFixedZ };

/// Upper bound on any frame's accumulated score under `cfg` with alpha <= 1 and one interval per
/// window: (max windows covering a frame) x (largest smoothed kernel value any interval can produce).
double fixed_normalizer(const StreamConfig& cfg);

/// Running per-frame sums of placed local curves.
class Accumulator {
public:
    Accumulator(std::size_t total_frames, double fixed_z);

    /// Adds `curve` at global frames [start, start + size). Throws OutOfRange past the stream end.
    void accumulate(const LocalCurve& curve, std::size_t start);

    const std::vector<double>& sums() const noexcept {
        return m_sums;
    }
    double fixed_z() const noexcept {
        return m_fixed_z;
    }
    std::size_t contributions() const noexcept {
        return m_contributions;
    }

    /// running_max divides by the current maximum sum; fixed_z by the precomputed constant
    /// (values clipped to 1 when superposed intervals exceed the bound). An all-zero accumulator
    /// yields an all-zero series. Throws NoContribution before the first accumulate call.
    ScoreSeries finalize(Normalization mode) const;

private:
    std::vector<double> m_sums;
    double m_fixed_z;
    std::size_t m_contributions = 0;
};

/// "frame_index,score" header then one row per frame, scores with 6 decimals.
void write_scores(std::ostream& out, const ScoreSeries& scores);
/// Parses the format written by write_scores. Throws IoError on malformed input.
std::vector<double> read_scores(std::istream& in);

}  // namespace streamvad::ps

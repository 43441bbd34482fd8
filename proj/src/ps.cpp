// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/ps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace streamvad::ps {

namespace {

double kernel_peak(const Interval& interval, double r) {
    const double span = static_cast<double>(interval.end - interval.start);
    return std::max(1.0, span * r + static_cast<double>(interval.start));
}

std::vector<double> kernel_for_peak(double peak, std::size_t length, double sigma_k) {
    const double mu = std::log(peak) + sigma_k * sigma_k;
    std::vector<double> k(length, 0.0);
    for (std::size_t x = 1; x < length; ++x) {
        const double lx = std::log(static_cast<double>(x));
        k[x] = std::exp(-(lx - mu) * (lx - mu) / (2.0 * sigma_k * sigma_k)) / (static_cast<double>(x) * sigma_k);
    }
    return k;
}

}  // namespace

std::vector<double> lognormal_kernel(const Interval& interval, const StreamConfig& cfg) {
    if (interval.start > interval.end || interval.end >= cfg.window_len) {
        throw PsError(PsErrorKind::kInvalidInterval, "interval [" + std::to_string(interval.start) + ", " +
                                                         std::to_string(interval.end) + "] outside the window");
    }
    return kernel_for_peak(kernel_peak(interval, cfg.peak_position), cfg.window_len, cfg.sigma_k);
}

std::vector<double> interval_kernel(std::span<const Interval> intervals, const StreamConfig& cfg) {
    std::vector<double> k(cfg.window_len, 0.0);
    if (intervals.empty()) {
        return k;
    }
    const std::size_t n = cfg.single_interval ? 1 : intervals.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto part = lognormal_kernel(intervals[i], cfg);
        for (std::size_t x = 0; x < k.size(); ++x) {
            k[x] += part[x];
        }
    }
    return k;
}

double confidence(std::span<const ProbabilityPair> token_probs) {
    if (token_probs.empty()) {
        return 1.0;
    }
    double sum = 0.0;
    for (const auto& p : token_probs) {
        if (!(p.top1 <= 1.0 && p.top1 >= p.top2 && p.top2 >= 0.0)) {
            throw PsError(PsErrorKind::kInvalidProbability,
                          "token probabilities must satisfy 1 >= top1 >= top2 >= 0");
        }
        sum += p.top1 - p.top2;
    }
    return sum / static_cast<double>(token_probs.size());
}

std::vector<double> gaussian_taps(double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::floor(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double x = static_cast<double>(i) / sigma;
        taps[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * x * x);
        total += taps[static_cast<std::size_t>(i + radius)];
    }
    for (double& t : taps) {
        t /= total;
    }
    return taps;
}

std::vector<double> smooth_and_scale(std::span<const double> kernel, double alpha, double sigma_g) {
    const auto taps = gaussian_taps(sigma_g);
    const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(kernel.size());
    std::vector<double> out(kernel.size(), 0.0);
    if (alpha == 0.0) {
        return out;
    }
    for (std::ptrdiff_t x = 0; x < n; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
            const std::ptrdiff_t src = x - i;
            if (src >= 0 && src < n) {
                acc += taps[static_cast<std::size_t>(i + radius)] * kernel[static_cast<std::size_t>(src)];
            }
        }
        out[static_cast<std::size_t>(x)] = alpha * acc;
    }
    return out;
}

LocalCurve window_curve(std::size_t window_index, std::span<const Interval> intervals, double alpha,
                        const StreamConfig& cfg) {
    const auto k = interval_kernel(intervals, cfg);
    return LocalCurve{window_index, smooth_and_scale(k, alpha, cfg.sigma_g)};
}

double fixed_normalizer(const StreamConfig& cfg) {
    const std::size_t window = cfg.window_len;
    const std::size_t stride = cfg.stride();

    // Windows start at multiples of the stride; the cover count is periodic after the first window.
    std::size_t max_cover = 0;
    for (std::size_t m = window; m < window + stride; ++m) {
        std::size_t cover = 0;
        for (std::size_t s = 0; s <= m; s += stride) {
            cover += m < s + window ? 1 : 0;
        }
        max_cover = std::max(max_cover, cover);
    }

    std::set<double> peaks;
    for (std::size_t s = 0; s < window; ++s) {
        for (std::size_t e = s; e < window; ++e) {
            peaks.insert(kernel_peak(Interval{s, e}, cfg.peak_position));
        }
    }
    double max_height = 0.0;
    for (double peak : peaks) {
        const auto curve = smooth_and_scale(kernel_for_peak(peak, window, cfg.sigma_k), 1.0, cfg.sigma_g);
        max_height = std::max(max_height, *std::max_element(curve.begin(), curve.end()));
    }
    return static_cast<double>(max_cover) * max_height;
}

Accumulator::Accumulator(std::size_t total_frames, double fixed_z)
    : m_sums(total_frames, 0.0),
      m_fixed_z(fixed_z) {
    if (!(fixed_z > 0.0)) {
        throw std::invalid_argument("fixed normalizer must be > 0");
    }
}

void Accumulator::accumulate(const LocalCurve& curve, std::size_t start) {
    if (start + curve.values.size() > m_sums.size()) {
        throw PsError(PsErrorKind::kOutOfRange, "curve of window " + std::to_string(curve.window_index) +
                                                    " placed at frame " + std::to_string(start) +
                                                    " runs past the stream end (" + std::to_string(m_sums.size()) +
                                                    " frames)");
    }
    for (std::size_t x = 0; x < curve.values.size(); ++x) {
        m_sums[start + x] += curve.values[x];
    }
    ++m_contributions;
}

ScoreSeries Accumulator::finalize(Normalization mode) const {
    if (m_contributions == 0) {
        throw PsError(PsErrorKind::kNoContribution, "finalize called before any window was accumulated");
    }
    const double peak = *std::max_element(m_sums.begin(), m_sums.end());
    std::vector<double> values(m_sums.size(), 0.0);
    if (peak <= 0.0) {
        return ScoreSeries(std::move(values));
    }
    const double z = mode == Normalization::kRunningMax ? peak : m_fixed_z;
    for (std::size_t m = 0; m < values.size(); ++m) {
        values[m] = std::min(1.0, m_sums[m] / z);
    }
    return ScoreSeries(std::move(values));
}

void write_scores(std::ostream& out, const ScoreSeries& scores) {
    out << "frame_index,score\n";
    char buf[48];
    for (std::size_t m = 0; m < scores.size(); ++m) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", m, scores[m]);
        out << buf;
    }
}

std::vector<double> read_scores(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("score file is empty");
    }
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw IoError("malformed score row at line " + std::to_string(line_no));
        }
        try {
            const auto index = std::stoull(line.substr(0, comma));
            if (index != values.size()) {
                throw IoError("score rows out of order at line " + std::to_string(line_no));
            }
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::logic_error&) {
            throw IoError("malformed score row at line " + std::to_string(line_no));
        }
    }
    if (values.empty()) {
        throw IoError("score file has no rows");
    }
    return values;
}

}  // namespace streamvad::ps

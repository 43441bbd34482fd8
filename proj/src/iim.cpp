// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/iim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace streamvad::iim {

namespace {

struct Slot {
    FrameRole role = FrameRole::kI;
    std::vector<std::size_t> anchors;  // in-group positions of reference frames
};

// Role and references of in-group position `pos`. Anchors (I and P frames) sit at multiples of
// the P-interval; a P-frame references the previous anchor, a B-frame the anchors around it.
Slot slot_for(std::size_t pos, const StreamConfig& cfg) {
    if (pos == 0 || cfg.gof_size < 2) {
        return {};
    }
    const std::size_t step = cfg.effective_p_interval();
    if (pos % step == 0) {
        return {FrameRole::kP, {pos - step}};
    }
    const std::size_t before = pos / step * step;
    return {FrameRole::kB, {before, before + step}};
}

double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

// Patch norms for every patch of a grid, raster order within frame-major order.
std::vector<double> patch_norms(const FrameFeatureGrid& grid) {
    const std::size_t d = grid.channels();
    const auto data = grid.data();
    std::vector<double> norms(data.size() / d);
    for (std::size_t p = 0; p < norms.size(); ++p) {
        auto v = data.subspan(p * d, d);
        norms[p] = std::sqrt(dot(v, v));
        if (!(norms[p] > 0.0)) {
            throw FeatureError(FeatureErrorKind::kDegenerateFeature, "zero-norm patch feature");
        }
    }
    return norms;
}

}  // namespace

char role_letter(FrameRole role) noexcept {
    switch (role) {
        case FrameRole::kI: return 'I';
        case FrameRole::kP: return 'P';
        case FrameRole::kB: return 'B';
    }
    return '?';
}

GoFPlan plan_gofs(std::size_t window_start, const StreamConfig& cfg) {
    return plan_gofs(window_start, cfg.window_len, cfg);
}

GoFPlan plan_gofs(std::size_t window_start, std::size_t frame_count, const StreamConfig& cfg) {
    GoFPlan plan;
    plan.roles.resize(frame_count);
    plan.references.resize(frame_count);
    for (std::size_t j = 0; j < frame_count; ++j) {
        const std::size_t pos = (window_start + j) % cfg.gof_size;
        if (pos == 0 || j == 0) {
            plan.groups.emplace_back(j, j);
        }
        plan.groups.back().second = j + 1;

        Slot slot = slot_for(pos, cfg);
        for (std::size_t anchor : slot.anchors) {
            // Anchors outside the window (partial groups) are skipped.
            if (anchor > pos && j + (anchor - pos) >= frame_count) {
                continue;
            }
            if (anchor < pos && j < pos - anchor) {
                continue;
            }
            plan.references[j].push_back(j + anchor - pos);
        }
        plan.roles[j] = plan.references[j].empty() ? FrameRole::kI : slot.role;
    }
    return plan;
}

ImportanceMap importance_scores(const FrameFeatureGrid& grid, const GoFPlan& plan, const StreamConfig& cfg) {
    if (plan.frame_count() != grid.frames()) {
        throw FeatureError(FeatureErrorKind::kShapeMismatch,
                           "GoF plan covers " + std::to_string(plan.frame_count()) + " frames, grid has " +
                               std::to_string(grid.frames()));
    }
    const std::size_t h = grid.rows();
    const std::size_t w = grid.cols();
    const std::size_t hw = h * w;
    const auto radius = static_cast<std::ptrdiff_t>(cfg.neighborhood_radius);
    const std::vector<double> norms = patch_norms(grid);

    ImportanceMap map;
    map.roles = plan.roles;
    map.scores.resize(grid.frames());
    for (std::size_t j = 0; j < grid.frames(); ++j) {
        if (plan.roles[j] == FrameRole::kI) {
            continue;
        }
        auto& scores = map.scores[j];
        scores.assign(hw, 2.0);
        for (std::size_t u = 0; u < h; ++u) {
            for (std::size_t v = 0; v < w; ++v) {
                auto g = grid.patch(j, u, v);
                const double g_norm = norms[j * hw + u * w + v];
                double best = 2.0;
                for (std::size_t r : plan.references[j]) {
                    const std::size_t u0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, std::ptrdiff_t(u) - radius));
                    const std::size_t u1 = std::min(h - 1, u + cfg.neighborhood_radius);
                    const std::size_t v0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, std::ptrdiff_t(v) - radius));
                    const std::size_t v1 = std::min(w - 1, v + cfg.neighborhood_radius);
                    for (std::size_t uu = u0; uu <= u1; ++uu) {
                        for (std::size_t vv = v0; vv <= v1; ++vv) {
                            const double cos = dot(g, grid.patch(r, uu, vv)) / (g_norm * norms[r * hw + uu * w + vv]);
                            best = std::min(best, 1.0 - cos);
                        }
                    }
                }
                scores[u * w + v] = std::clamp(best, 0.0, 2.0);
            }
        }
    }
    return map;
}

std::size_t retained_count(FrameRole role, std::size_t patches_per_frame, const StreamConfig& cfg) {
    double gamma = cfg.gamma_i;
    if (role == FrameRole::kP) {
        gamma = cfg.gamma_p;
    } else if (role == FrameRole::kB) {
        gamma = cfg.gamma_b;
    }
    // The epsilon absorbs representation error such as 0.6 * 15 = 8.999...
    const auto kept = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(patches_per_frame) + 1e-9));
    return std::clamp<std::size_t>(kept, 1, patches_per_frame);
}

double CompressedWindow::retained_fraction() const noexcept {
    const std::size_t total = shape.frames * shape.patches_per_frame();
    return total == 0 ? 0.0 : static_cast<double>(tokens.size()) / static_cast<double>(total);
}

CompressedWindow merge_window(const FrameFeatureGrid& grid, const ImportanceMap& scores, const StreamConfig& cfg) {
    if (scores.roles.size() != grid.frames() || scores.scores.size() != grid.frames()) {
        throw FeatureError(FeatureErrorKind::kShapeMismatch, "importance map does not cover the grid");
    }
    const std::size_t h = grid.rows();
    const std::size_t w = grid.cols();
    const std::size_t hw = h * w;
    const std::size_t d = grid.channels();
    const std::vector<double> norms = patch_norms(grid);

    CompressedWindow out;
    out.shape = grid.shape();
    out.roles = scores.roles;
    out.retained_per_frame.resize(grid.frames());
    out.frame_offsets.reserve(grid.frames() + 1);

    auto emit = [&](std::size_t j, std::size_t p, std::vector<float> feature) {
        out.tokens.push_back(VisualToken{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(p / w),
                                         static_cast<std::uint32_t>(p % w), std::move(feature)});
    };

    for (std::size_t j = 0; j < grid.frames(); ++j) {
        out.frame_offsets.push_back(out.tokens.size());
        const FrameRole role = scores.roles[j];
        const std::size_t keep = retained_count(role, hw, cfg);
        out.retained_per_frame[j] = keep;
        auto frame = grid.frame(j);
        auto patch = [&](std::size_t p) { return frame.subspan(p * d, d); };

        if (role == FrameRole::kI || keep >= hw) {
            for (std::size_t p = 0; p < hw; ++p) {
                auto g = patch(p);
                emit(j, p, std::vector<float>(g.begin(), g.end()));
            }
            continue;
        }
        const auto& o = scores.scores[j];
        if (o.size() != hw) {
            throw FeatureError(FeatureErrorKind::kShapeMismatch,
                               "missing importance scores for frame " + std::to_string(j));
        }

        // Highest scores first; stable sort keeps raster order among ties.
        std::vector<std::size_t> order(hw);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return o[a] > o[b]; });
        std::vector<std::size_t> high(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
        std::sort(high.begin(), high.end());
        std::vector<bool> is_high(hw, false);
        for (std::size_t p : high) {
            is_high[p] = true;
        }

        auto cosine = [&](std::size_t a, std::size_t b) {
            return dot(patch(a), patch(b)) / (norms[j * hw + a] * norms[j * hw + b]);
        };

        // assignees[k]: (low patch, cosine to high[k])
        std::vector<std::vector<std::pair<std::size_t, double>>> assignees(high.size());
        for (std::size_t p = 0; p < hw; ++p) {
            if (is_high[p]) {
                continue;
            }
            std::size_t best = 0;
            double best_cos = cosine(p, high[0]);
            for (std::size_t k = 1; k < high.size(); ++k) {
                const double c = cosine(p, high[k]);
                if (c > best_cos) {
                    best = k;
                    best_cos = c;
                }
            }
            assignees[best].emplace_back(p, best_cos);
        }

        for (std::size_t k = 0; k < high.size(); ++k) {
            auto g = patch(high[k]);
            const auto& members = assignees[k];
            if (members.empty()) {
                emit(j, high[k], std::vector<float>(g.begin(), g.end()));
                continue;
            }
            double max_logit = members.front().second;
            for (const auto& m : members) {
                max_logit = std::max(max_logit, m.second);
            }
            std::vector<double> weights(members.size());
            double total = 0.0;
            for (std::size_t i = 0; i < members.size(); ++i) {
                weights[i] = std::exp(members[i].second - max_logit);
                total += weights[i];
            }
            std::vector<double> merged(d, 0.0);
            for (std::size_t i = 0; i < members.size(); ++i) {
                auto src = patch(members[i].first);
                const double a = weights[i] / total;
                for (std::size_t c = 0; c < d; ++c) {
                    merged[c] += a * static_cast<double>(src[c]);
                }
            }
            std::vector<float> feature(d);
            for (std::size_t c = 0; c < d; ++c) {
                feature[c] = static_cast<float>(0.5 * static_cast<double>(g[c]) + 0.5 * merged[c]);
            }
            emit(j, high[k], std::move(feature));
        }
    }
    out.frame_offsets.push_back(out.tokens.size());
    return out;
}

CompressedWindow compress_window(const FrameFeatureGrid& grid, std::size_t window_start, const StreamConfig& cfg) {
    const GoFPlan plan = plan_gofs(window_start, grid.frames(), cfg);
    return merge_window(grid, importance_scores(grid, plan, cfg), cfg);
}

CompressedWindow passthrough_window(const FrameFeatureGrid& grid) {
    CompressedWindow out;
    out.shape = grid.shape();
    const std::size_t hw = grid.rows() * grid.cols();
    out.roles.assign(grid.frames(), FrameRole::kI);
    out.retained_per_frame.assign(grid.frames(), hw);
    out.tokens.reserve(grid.frames() * hw);
    for (std::size_t j = 0; j < grid.frames(); ++j) {
        out.frame_offsets.push_back(out.tokens.size());
        for (std::size_t u = 0; u < grid.rows(); ++u) {
            for (std::size_t v = 0; v < grid.cols(); ++v) {
                auto g = grid.patch(j, u, v);
                out.tokens.push_back(VisualToken{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(u),
                                                 static_cast<std::uint32_t>(v), std::vector<float>(g.begin(), g.end())});
            }
        }
    }
    out.frame_offsets.push_back(out.tokens.size());
    return out;
}

double token_accounting(const StreamConfig& cfg) {
    double sum = 0.0;
    for (std::size_t pos = 0; pos < cfg.gof_size; ++pos) {
        switch (slot_for(pos, cfg).role) {
            case FrameRole::kI: sum += cfg.gamma_i; break;
            case FrameRole::kP: sum += cfg.gamma_p; break;
            case FrameRole::kB: sum += cfg.gamma_b; break;
        }
    }
    return sum / static_cast<double>(cfg.gof_size);
}

double token_accounting(const StreamConfig& cfg, std::size_t patches_per_frame) {
    const std::size_t kept = retained_tokens(0, cfg.gof_size, patches_per_frame, cfg);
    return static_cast<double>(kept) / static_cast<double>(cfg.gof_size * patches_per_frame);
}

std::size_t retained_tokens(std::size_t begin, std::size_t end, std::size_t patches_per_frame,
                            const StreamConfig& cfg) {
    std::size_t total = 0;
    for (std::size_t f = begin; f < end; ++f) {
        total += retained_count(slot_for(f % cfg.gof_size, cfg).role, patches_per_frame, cfg);
    }
    return total;
}

}  // namespace streamvad::iim

// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "json.hpp"

#include "streamvad/error.hpp"

namespace streamvad {

/// Stream-level parameters shared by every stage of the engine.
///
/// Window geometry (`window_len`, `overlap`, `gof_size`) must keep GoF partitions aligned
/// across windows: both the stride and the window length are multiples of `gof_size`, so a
/// frame receives the same I/P/B role in every window that contains it.
struct StreamConfig {
    double sample_fps = 4.0;
    std::size_t window_len = 224;
    std::size_t overlap = 160;

    std::size_t gof_size = 8;
    /// Distance between consecutive anchor frames (I or P) inside a group.
    /// 0 selects a single P-frame at the last slot of the group.
    std::size_t p_interval = 0;
    double gamma_i = 1.0;
    double gamma_p = 0.6;
    double gamma_b = 0.2;
    std::size_t neighborhood_radius = 1;

    double peak_position = 0.2;  // relative peak location inside a predicted interval
    double sigma_k = 1.2;        // log-normal shape
    double sigma_g = 4.0;        // Gaussian smoothing std, frames
    /// Keep only the first parsed interval of a window; otherwise kernels are superposed.
    bool single_interval = true;

    std::size_t mem_windows = 4;

    std::size_t stride() const noexcept {
        return window_len - overlap;
    }

    std::size_t effective_p_interval() const noexcept {
        if (gof_size < 2) {
            return 1;
        }
        return p_interval == 0 ? gof_size - 1 : p_interval;
    }

    double window_seconds() const noexcept {
        return static_cast<double>(window_len) / sample_fps;
    }
};

/// Returns `cfg` unchanged when every invariant holds; throws ConfigError naming the first
/// violation otherwise.
StreamConfig validate_config(const StreamConfig& cfg);

/// Reads a (possibly partial) JSON object on top of the defaults and validates the result.
/// Unknown keys are rejected as config_format.
StreamConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const StreamConfig& cfg);
StreamConfig load_config_file(const std::string& path);

}  // namespace streamvad

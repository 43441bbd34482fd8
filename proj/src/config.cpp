// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

namespace streamvad {

namespace {

void require(bool ok, const char* invariant, const std::string& message) {
    if (!ok) {
        throw ConfigError(invariant, message);
    }
}

}  // namespace

StreamConfig validate_config(const StreamConfig& cfg) {
    require(std::isfinite(cfg.sample_fps) && cfg.sample_fps > 0.0, "sample_fps_positive",
            "sample_fps must be > 0");
    require(cfg.window_len >= 1, "window_len_positive", "window_len must be >= 1");
    require(cfg.overlap > 0 && cfg.overlap < cfg.window_len, "overlap_range",
            "overlap must satisfy 0 < overlap < window_len (got " + std::to_string(cfg.overlap) + " of " +
                std::to_string(cfg.window_len) + ")");
    require(cfg.gof_size >= 1, "gof_size_positive", "gof_size must be >= 1");
    require(cfg.stride() % cfg.gof_size == 0, "stride_gof_alignment",
            "window_len - overlap (" + std::to_string(cfg.stride()) + ") must be a multiple of gof_size (" +
                std::to_string(cfg.gof_size) + ")");
    require(cfg.window_len % cfg.gof_size == 0, "window_gof_alignment",
            "window_len must be a multiple of gof_size");
    if (cfg.gof_size >= 2) {
        const std::size_t interval = cfg.effective_p_interval();
        require(interval >= 1 && interval < cfg.gof_size && (cfg.gof_size - 1) % interval == 0,
                "p_interval_alignment", "p_interval must divide gof_size - 1");
    }
    require(cfg.gamma_i == 1.0, "gamma_i_unity", "gamma_I must equal 1");
    require(cfg.gamma_p > 0.0 && cfg.gamma_p <= 1.0 && cfg.gamma_b > 0.0 && cfg.gamma_b <= 1.0, "gamma_range",
            "retention fractions must lie in (0, 1]");
    require(cfg.gamma_b <= cfg.gamma_p && cfg.gamma_p <= cfg.gamma_i, "gamma_order",
            "retention fractions must satisfy gamma_B <= gamma_P <= gamma_I");
    require(cfg.peak_position > 0.0 && cfg.peak_position < 1.0, "peak_position_range",
            "r must lie in the open interval (0, 1)");
    require(std::isfinite(cfg.sigma_k) && cfg.sigma_k > 0.0, "sigma_k_positive", "sigma_k must be > 0");
    require(std::isfinite(cfg.sigma_g) && cfg.sigma_g > 0.0, "sigma_g_positive", "sigma_g must be > 0");
    return cfg;
}

StreamConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config_format", "config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "sample_fps", "window_len", "overlap",       "gof_size", "p_interval",      "gamma_i",
        "gamma_p",    "gamma_b",    "neighborhood_radius", "r", "sigma_k",         "sigma_g",
        "single_interval", "mem_windows"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw ConfigError("config_format", "unknown config key '" + key + "'");
        }
    }
    StreamConfig cfg;
    try {
        cfg.sample_fps = j.value("sample_fps", cfg.sample_fps);
        cfg.window_len = j.value("window_len", cfg.window_len);
        cfg.overlap = j.value("overlap", cfg.overlap);
        cfg.gof_size = j.value("gof_size", cfg.gof_size);
        cfg.p_interval = j.value("p_interval", cfg.p_interval);
        cfg.gamma_i = j.value("gamma_i", cfg.gamma_i);
        cfg.gamma_p = j.value("gamma_p", cfg.gamma_p);
        cfg.gamma_b = j.value("gamma_b", cfg.gamma_b);
        cfg.neighborhood_radius = j.value("neighborhood_radius", cfg.neighborhood_radius);
        cfg.peak_position = j.value("r", cfg.peak_position);
        cfg.sigma_k = j.value("sigma_k", cfg.sigma_k);
        cfg.sigma_g = j.value("sigma_g", cfg.sigma_g);
        cfg.single_interval = j.value("single_interval", cfg.single_interval);
        cfg.mem_windows = j.value("mem_windows", cfg.mem_windows);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config_format", e.what());
    }
    return validate_config(cfg);
}

nlohmann::json config_to_json(const StreamConfig& cfg) {
    return nlohmann::json{{"sample_fps", cfg.sample_fps},
                          {"window_len", cfg.window_len},
                          {"overlap", cfg.overlap},
                          {"gof_size", cfg.gof_size},
                          {"p_interval", cfg.p_interval},
                          {"gamma_i", cfg.gamma_i},
                          {"gamma_p", cfg.gamma_p},
                          {"gamma_b", cfg.gamma_b},
                          {"neighborhood_radius", cfg.neighborhood_radius},
                          {"r", cfg.peak_position},
                          {"sigma_k", cfg.sigma_k},
                          {"sigma_g", cfg.sigma_g},
                          {"single_interval", cfg.single_interval},
                          {"mem_windows", cfg.mem_windows}};
}

StreamConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config_format", e.what());
    }
    return config_from_json(j);
}

}  // namespace streamvad

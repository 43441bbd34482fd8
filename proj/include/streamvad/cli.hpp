// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "streamvad/pipeline.hpp"
#include "streamvad/types.hpp"

namespace streamvad::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitBackend = 3 };

struct RunArgs {
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> scenario;
    std::filesystem::path definition;
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> prompts;
    /// scripted, toy or remote; empty picks scripted with a scenario and toy otherwise.
    std::string backend;
    std::filesystem::path out;
    std::string sample_id;
    std::string normalization = "fixed_z";
    std::string definition_mode = "model";
    bool no_iim = false;
    bool no_kv_reuse = false;
    bool no_memory = false;
    std::size_t max_new_tokens = 48;
    std::uint64_t toy_seed = 20240601;
    std::size_t timeout_ms = 30000;
    std::size_t max_retries = 3;
    std::string frame_url_template;
};

struct EvalArgs {
    std::filesystem::path runs;
    std::filesystem::path benchmark;
    std::string protocol = "single";
    std::optional<std::filesystem::path> out;
};

struct CompressArgs {
    std::filesystem::path features;
    std::optional<std::filesystem::path> config;
    bool stats = false;
};

struct PlotArgs {
    std::filesystem::path scores;
    std::string gt;
    std::filesystem::path out;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_compress(const CompressArgs& args, std::ostream& out, std::ostream& err);
int cmd_plot(const PlotArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a command; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Definition file: {"text", "categories"} or {"schedule": [{"from_window", "text", "categories"}, ...]}.
pipeline::DefinitionSchedule load_definition_file(const std::filesystem::path& path);

/// "a-b,c-d" closed frame intervals, or a path to a JSON array of [start, end] pairs.
std::vector<Interval> parse_gt_intervals(const std::string& spec);

/// Static SVG line chart of `scores` with shaded ground-truth bands.
std::string render_svg(const std::vector<double>& scores, const std::vector<Interval>& gt);

std::string version();

}  // namespace streamvad::cli

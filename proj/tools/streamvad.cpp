// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "streamvad/cli.hpp"

int main(int argc, char** argv) {
    // Diagnostics go to stderr so stdout stays parseable.
    spdlog::set_default_logger(spdlog::stderr_color_mt("streamvad"));
    return streamvad::cli::run_cli(argc, argv, std::cout, std::cerr);
}

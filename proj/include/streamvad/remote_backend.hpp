// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "streamvad/backend.hpp"

namespace streamvad::backend {

struct RemoteConfig {
    /// Full URL of the chat-completion route, e.g. http://127.0.0.1:8000/v1/chat/completions.
    std::string endpoint;
    std::string model;
    std::string api_key;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_retries = 3;
    std::chrono::milliseconds backoff_initial{250};
    std::chrono::milliseconds backoff_cap{4000};

    /// Reads ESOM_ENDPOINT, ESOM_MODEL and ESOM_API_KEY. Missing variables stay empty.
    static RemoteConfig from_env();
};

/// Stateless HTTP client for a chat-completion server. Requests per-token log-probabilities
/// (two alternatives) and maps them to probability pairs. Transient failures (connection errors,
/// 429, 5xx) are retried with capped exponential backoff; timeouts and other 4xx are not.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteConfig config);

    std::string_view name() const override {
        return "remote";
    }
    BackendCapabilities capabilities() const override {
        return {false, true};
    }
    GenerationResult generate(const PromptRequest& request) override;
    GenerationResult complete(std::string_view prompt) override;

    const RemoteConfig& config() const noexcept {
        return m_config;
    }

    /// Called before each retry with (attempt number starting at 1, reason).
    std::function<void(std::size_t, const std::string&)> on_retry;

private:
    GenerationResult post(const std::string& body);

    RemoteConfig m_config;
    std::string m_base;
    std::string m_path;
};

/// Parses a chat-completion response body. Throws BackendError(kProtocol) on a malformed body.
GenerationResult parse_chat_response(const std::string& body);

}  // namespace streamvad::backend

// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/remote_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace streamvad::backend {

namespace {

using nlohmann::json;

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

ProbabilityPair pair_from_alternatives(const json& entry) {
    std::vector<double> probs;
    if (entry.contains("top_logprobs") && entry.at("top_logprobs").is_array()) {
        for (const auto& alt : entry.at("top_logprobs")) {
            probs.push_back(std::exp(alt.at("logprob").get<double>()));
        }
    }
    if (probs.empty() && entry.contains("logprob")) {
        probs.push_back(std::exp(entry.at("logprob").get<double>()));
    }
    std::sort(probs.begin(), probs.end(), std::greater<>());
    const double top1 = probs.empty() ? 0.0 : std::min(1.0, probs[0]);
    const double top2 = probs.size() < 2 ? 0.0 : std::min(top1, probs[1]);
    return {top1, top2};
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
    RemoteConfig config;
    config.endpoint = env_or_empty("ESOM_ENDPOINT");
    config.model = env_or_empty("ESOM_MODEL");
    config.api_key = env_or_empty("ESOM_API_KEY");
    return config;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : m_config(std::move(config)) {
    if (m_config.endpoint.empty()) {
        throw BackendError(BackendErrorKind::kUnavailable, "no remote endpoint configured (ESOM_ENDPOINT)");
    }
    const auto scheme_end = m_config.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw BackendError(BackendErrorKind::kUnavailable, "endpoint needs a scheme: " + m_config.endpoint);
    }
    if (m_config.endpoint.compare(0, scheme_end, "http") != 0) {
        // Built without TLS: only plain http endpoints are reachable.
        throw BackendError(BackendErrorKind::kUnavailable, "unsupported endpoint scheme: " + m_config.endpoint);
    }
    const auto path_begin = m_config.endpoint.find('/', scheme_end + 3);
    m_base = m_config.endpoint.substr(0, path_begin);
    m_path = path_begin == std::string::npos ? "/v1/chat/completions" : m_config.endpoint.substr(path_begin);
}

GenerationResult parse_chat_response(const std::string& body) {
    GenerationResult result;
    try {
        const json j = json::parse(body);
        const auto& choice = j.at("choices").at(0);
        result.text = choice.at("message").at("content").get<std::string>();
        if (choice.contains("finish_reason") && choice.at("finish_reason").is_string()) {
            result.truncated = choice.at("finish_reason").get<std::string>() == "length";
        }
        if (choice.contains("logprobs") && choice.at("logprobs").is_object() &&
            choice.at("logprobs").contains("content") && choice.at("logprobs").at("content").is_array()) {
            for (const auto& entry : choice.at("logprobs").at("content")) {
                result.token_probs.push_back(pair_from_alternatives(entry));
            }
        }
        if (j.contains("usage") && j.at("usage").contains("completion_tokens")) {
            result.token_count = j.at("usage").at("completion_tokens").get<std::size_t>();
        } else {
            result.token_count = result.token_probs.size();
        }
    } catch (const json::exception& e) {
        throw BackendError(BackendErrorKind::kProtocol, std::string("malformed chat response: ") + e.what());
    }
    return result;
}

GenerationResult RemoteBackend::post(const std::string& body) {
    const auto started = std::chrono::steady_clock::now();
    httplib::Client client(m_base);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(m_config.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(m_config.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers headers;
    if (!m_config.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + m_config.api_key);
    }

    std::size_t retries = 0;
    auto backoff = m_config.backoff_initial;
    while (true) {
        auto response = client.Post(m_path, headers, body, "application/json");
        std::string reason;
        if (!response) {
            const auto err = response.error();
            if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
                throw BackendError(BackendErrorKind::kTimeout, "remote request timed out: " + httplib::to_string(err));
            }
            reason = "network: " + httplib::to_string(err);
        } else if (response->status >= 200 && response->status < 300) {
            auto result = parse_chat_response(response->body);
            result.retries = retries;
            result.wall_time = std::chrono::steady_clock::now() - started;
            return result;
        } else if (retryable_status(response->status)) {
            reason = "HTTP " + std::to_string(response->status);
        } else {
            throw BackendError(BackendErrorKind::kProtocol, "remote returned HTTP " + std::to_string(response->status));
        }

        if (retries >= m_config.max_retries) {
            const auto kind = response ? BackendErrorKind::kProtocol : BackendErrorKind::kNetwork;
            throw BackendError(kind, "giving up after " + std::to_string(retries) + " retries: " + reason);
        }
        ++retries;
        if (on_retry) {
            on_retry(retries, reason);
        }
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, m_config.backoff_cap);
    }
}

GenerationResult RemoteBackend::generate(const PromptRequest& request) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", request.user_prompt}});
    for (const auto& url : request.image_urls) {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    json messages = json::array();
    if (!request.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", content}});
    const json body{{"model", m_config.model},     {"messages", messages},  {"max_tokens", request.max_new_tokens},
                    {"temperature", 0},            {"logprobs", true},      {"top_logprobs", 2}};
    return post(body.dump());
}

GenerationResult RemoteBackend::complete(std::string_view prompt) {
    const json body{{"model", m_config.model},
                    {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
                    {"temperature", 0}};
    return post(body.dump());
}

}  // namespace streamvad::backend

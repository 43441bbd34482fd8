// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamvad/error.hpp"
#include "streamvad/hsm.hpp"
#include "streamvad/iim.hpp"
#include "streamvad/types.hpp"

namespace streamvad::backend {

enum class BackendErrorKind {
    kCapability,
    kNetwork,
    kProtocol,
    kTimeout,
    kUnavailable,
};
using BackendError = KindedError<BackendErrorKind>;

const char* error_kind_name(BackendErrorKind kind) noexcept;

struct BackendCapabilities {
    bool cache_capable = false;
    bool reports_logprobs = false;
};

struct GenerationResult {
    std::string text;
    std::vector<ProbabilityPair> token_probs;
    std::size_t token_count = 0;
    std::chrono::duration<double> wall_time{0.0};
    /// Generation hit the length cap before a stop token.
    bool truncated = false;
    /// Transient failures retried before this result.
    std::size_t retries = 0;
};

struct DecodeRequest {
    std::size_t window_index = 0;
    std::size_t max_new_tokens = 48;
};

/// Stateless request for backends that cannot hold a KV cache.
struct PromptRequest {
    std::size_t window_index = 0;
    std::string system_prompt;
    std::string user_prompt;
    std::vector<std::string> image_urls;
    std::size_t max_new_tokens = 256;
};

/// Model boundary. Cache-capable backends prefill text/visual segments into a SegmentedKVCache
/// and decode from it; stateless backends answer whole prompts. A backend instance serves one
/// stream sequentially.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string_view name() const = 0;
    virtual BackendCapabilities capabilities() const = 0;

    virtual hsm::CacheGeometry cache_geometry() const;
    /// Appends rows for `text` at the next contiguous positions, tagged `segment`.
    virtual void prefill_text(hsm::SegmentedKVCache& cache, std::string_view text, hsm::Segment segment);
    /// Appends VISUAL rows for `tokens`, in order.
    virtual void prefill_visual(hsm::SegmentedKVCache& cache, std::span<const iim::VisualToken> tokens);
    /// Generates from the cache state left by the most recent prefill; appends GENERATED rows.
    virtual GenerationResult decode(hsm::SegmentedKVCache& cache, const DecodeRequest& request);

    virtual GenerationResult generate(const PromptRequest& request);
    /// Plain text completion, used for definition normalization.
    virtual GenerationResult complete(std::string_view prompt);
};

/// Character-level vocabulary shared by the in-process backends: a-z, A-Z, 0-9, space, newline.
inline constexpr std::size_t kVocabSize = 64;
inline constexpr int kNewlineToken = 63;
int token_for_char(char c) noexcept;
char char_for_token(int token) noexcept;
std::vector<int> tokenize(std::string_view text);

}  // namespace streamvad::backend

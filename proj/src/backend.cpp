// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/backend.hpp"

namespace streamvad::backend {

const char* error_kind_name(BackendErrorKind kind) noexcept {
    switch (kind) {
        case BackendErrorKind::kCapability: return "capability";
        case BackendErrorKind::kNetwork: return "network";
        case BackendErrorKind::kProtocol: return "protocol";
        case BackendErrorKind::kTimeout: return "timeout";
        case BackendErrorKind::kUnavailable: return "unavailable";
    }
    return "unknown";
}

namespace {

[[noreturn]] void unsupported(std::string_view backend, const char* what) {
    throw BackendError(BackendErrorKind::kCapability, std::string(backend) + " backend does not support " + what);
}

}  // namespace

hsm::CacheGeometry Backend::cache_geometry() const {
    unsupported(name(), "KV caches");
}

void Backend::prefill_text(hsm::SegmentedKVCache&, std::string_view, hsm::Segment) {
    unsupported(name(), "prefill");
}

void Backend::prefill_visual(hsm::SegmentedKVCache&, std::span<const iim::VisualToken>) {
    unsupported(name(), "prefill");
}

GenerationResult Backend::decode(hsm::SegmentedKVCache&, const DecodeRequest&) {
    unsupported(name(), "cached decoding");
}

GenerationResult Backend::generate(const PromptRequest&) {
    unsupported(name(), "stateless generation");
}

GenerationResult Backend::complete(std::string_view) {
    throw BackendError(BackendErrorKind::kUnavailable, std::string(name()) + " backend offers no text completion");
}

int token_for_char(char c) noexcept {
    if (c >= 'a' && c <= 'z') {
        return c - 'a';
    }
    if (c >= 'A' && c <= 'Z') {
        return 26 + (c - 'A');
    }
    if (c >= '0' && c <= '9') {
        return 52 + (c - '0');
    }
    if (c == '\n') {
        return kNewlineToken;
    }
    return 62;  // space and everything unmapped
}

char char_for_token(int token) noexcept {
    if (token < 26) {
        return static_cast<char>('a' + token);
    }
    if (token < 52) {
        return static_cast<char>('A' + token - 26);
    }
    if (token < 62) {
        return static_cast<char>('0' + token - 52);
    }
    return token == kNewlineToken ? '\n' : ' ';
}

std::vector<int> tokenize(std::string_view text) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (char c : text) {
        ids.push_back(token_for_char(c));
    }
    return ids;
}

}  // namespace streamvad::backend

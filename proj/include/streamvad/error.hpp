// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace streamvad {

/// Exception carrying a module-specific error kind next to the message.
template <typename Kind>
class KindedError : public std::runtime_error {
public:
    KindedError(Kind kind, const std::string& message) : std::runtime_error(message), m_kind(kind) {}

    Kind kind() const noexcept {
        return m_kind;
    }

private:
    Kind m_kind;
};

/// Raised by validate_config; `invariant()` names the first violated rule.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string invariant, const std::string& message)
        : std::invalid_argument(invariant + ": " + message),
          m_invariant(std::move(invariant)) {}

    const std::string& invariant() const noexcept {
        return m_invariant;
    }

private:
    std::string m_invariant;
};

/// File-system and format failures (missing files, bad magic, truncated payloads).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FeatureErrorKind { kDegenerateFeature, kNonFinite, kShapeMismatch };
using FeatureError = KindedError<FeatureErrorKind>;

}  // namespace streamvad

// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace streamvad {

/// A category from the active anomaly definition, or the distinguished NORMAL answer.
class Category {
public:
    static Category normal() {
        return Category{};
    }
    static Category named(std::string name);

    bool is_normal() const noexcept {
        return !m_name.has_value();
    }
    /// Original category name; "NORMAL" for the normal answer.
    std::string label() const {
        return m_name.value_or(std::string(kNormalLabel));
    }

    /// Parses a label; the literal NORMAL (any case) maps to the normal answer.
    static Category from_label(std::string_view label);

    friend bool operator==(const Category&, const Category&) = default;
    friend auto operator<=>(const Category&, const Category&) = default;

    static constexpr std::string_view kNormalLabel = "NORMAL";

private:
    Category() = default;
    explicit Category(std::string name) : m_name(std::move(name)) {}

    std::optional<std::string> m_name;
};

/// User-supplied anomaly definition: free-form text plus an ordered category set.
class AnomalyDefinition {
public:
    /// Throws std::invalid_argument when the category list is empty, has blank names, or has
    /// duplicates after whitespace normalization.
    AnomalyDefinition(std::string raw_text, std::vector<std::string> categories);

    const std::string& raw_text() const noexcept {
        return m_raw_text;
    }
    const std::vector<std::string>& categories() const noexcept {
        return m_categories;
    }
    std::size_t size() const noexcept {
        return m_categories.size();
    }

    friend bool operator==(const AnomalyDefinition&, const AnomalyDefinition&) = default;

private:
    std::string m_raw_text;
    std::vector<std::string> m_categories;
};

/// Closed frame interval [start, end].
struct Interval {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept {
        return end - start + 1;
    }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Top-1 / top-2 token probabilities of one generated token.
struct ProbabilityPair {
    double top1 = 1.0;
    double top2 = 0.0;
    friend bool operator==(const ProbabilityPair&, const ProbabilityPair&) = default;
};

struct WindowPrediction {
    std::size_t window_index = 0;
    std::string text;
    Category category = Category::normal();
    std::vector<Interval> intervals;  // window-local frames
    std::vector<ProbabilityPair> token_probs;
    double confidence = 1.0;
};

/// Frame-level anomaly scores over the whole stream, every value in [0, 1].
class ScoreSeries {
public:
    ScoreSeries() = default;
    /// Throws std::invalid_argument if any value is outside [0, 1] or not finite.
    explicit ScoreSeries(std::vector<double> values);

    std::size_t size() const noexcept {
        return m_values.size();
    }
    const std::vector<double>& values() const noexcept {
        return m_values;
    }
    double operator[](std::size_t m) const {
        return m_values[m];
    }
    double max() const noexcept;

    friend bool operator==(const ScoreSeries&, const ScoreSeries&) = default;

private:
    std::vector<double> m_values;
};

std::string normalize_whitespace(std::string_view text);

}  // namespace streamvad

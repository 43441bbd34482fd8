// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace streamvad {

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

Category Category::named(std::string name) {
    name = normalize_whitespace(name);
    if (name.empty()) {
        throw std::invalid_argument("category name must not be empty");
    }
    return Category(std::move(name));
}

Category Category::from_label(std::string_view label) {
    std::string norm = normalize_whitespace(label);
    std::string upper = norm;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) {
        return static_cast<char>(std::toupper(c));
    });
    if (upper == kNormalLabel) {
        return normal();
    }
    return named(norm);
}

AnomalyDefinition::AnomalyDefinition(std::string raw_text, std::vector<std::string> categories)
    : m_raw_text(std::move(raw_text)) {
    if (categories.empty()) {
        throw std::invalid_argument("anomaly definition needs at least one category");
    }
    std::set<std::string> seen;
    for (auto& name : categories) {
        std::string norm = normalize_whitespace(name);
        if (norm.empty()) {
            throw std::invalid_argument("anomaly definition contains an empty category name");
        }
        if (!seen.insert(norm).second) {
            throw std::invalid_argument("duplicate category name: " + norm);
        }
        m_categories.push_back(std::move(norm));
    }
}

ScoreSeries::ScoreSeries(std::vector<double> values) : m_values(std::move(values)) {
    for (double v : m_values) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw std::invalid_argument("score outside [0, 1]");
        }
    }
}

double ScoreSeries::max() const noexcept {
    double best = 0.0;
    for (double v : m_values) {
        best = std::max(best, v);
    }
    return best;
}

}  // namespace streamvad

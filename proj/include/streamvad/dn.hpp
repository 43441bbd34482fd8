// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "streamvad/error.hpp"
#include "streamvad/types.hpp"

// Definition normalization: turns a free-form anomaly definition into an anonymized table of
// positive, negative and boundary definitions per category.
namespace streamvad::dn {

enum class DefinitionErrorKind {
    kMissingPlaceholder,
    kTableNotFound,
    kRowCountMismatch,
    kDuplicateAnonId,
    kUnknownAnonId,
    kEmptyField,
};
using DefinitionError = KindedError<DefinitionErrorKind>;

struct DefinitionRow {
    std::string anon_id;
    std::string original_name;
    std::string positive_def;
    std::string negative_def;
    std::string start_boundary_def;
    std::string end_boundary_def;

    friend bool operator==(const DefinitionRow&, const DefinitionRow&) = default;
};

class NormalizedDefinition {
public:
    /// Validates unique ids assigned in category order and non-empty fields.
    explicit NormalizedDefinition(std::vector<DefinitionRow> rows);

    const std::vector<DefinitionRow>& rows() const noexcept {
        return m_rows;
    }
    std::size_t size() const noexcept {
        return m_rows.size();
    }
    /// Row for an anon id (exact, upper case), or nullptr.
    const DefinitionRow* find_anon(std::string_view anon_id) const;
    const DefinitionRow* find_name(std::string_view original_name) const;

    friend bool operator==(const NormalizedDefinition& a, const NormalizedDefinition& b) {
        return a.m_rows == b.m_rows;
    }

private:
    std::vector<DefinitionRow> m_rows;
    std::map<std::string, std::size_t, std::less<>> m_by_anon;
    std::map<std::string, std::size_t, std::less<>> m_by_name;
};

/// A, B, ..., Z, AA, AB, ...
std::string anon_id(std::size_t index);

/// Substitutes {RAW_DEFINITION} and {CATEGORIES} (one "<id>: <name>" line per category).
std::string build_norm_prompt(const AnomalyDefinition& def, std::string_view prompt_template);

/// Extracts the first markdown table of `response` and binds its rows to the categories of
/// `def` in order. The table needs a header, a separator line, and one row per category.
NormalizedDefinition parse_definition_table(std::string_view response, const AnomalyDefinition& def);

/// Maps an anon id (case-insensitive) or the literal NORMAL to a category.
Category deanonymize(std::string_view token, const NormalizedDefinition& ndef);
/// Inverse of deanonymize for named categories.
std::string anonymize(const Category& category, const NormalizedDefinition& ndef);

/// Markdown table. With names the output round-trips through parse_definition_table; without
/// names it is the anonymized form handed to the detection model.
std::string to_markdown(const NormalizedDefinition& ndef, bool include_names);

/// Local fallback used when the external normalizer is unavailable or answers unusably.
NormalizedDefinition degraded_definition(const AnomalyDefinition& def);

/// Content hash of raw text + categories (FNV-1a, 64-bit).
std::uint64_t definition_hash(const AnomalyDefinition& def);

}  // namespace streamvad::dn

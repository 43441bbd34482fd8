// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/dn.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

namespace streamvad::dn {

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    lines.push_back(current);
    return lines;
}

bool is_table_line(const std::string& line) {
    const std::string t = trim(line);
    return !t.empty() && t.front() == '|';
}

// Splits "| a | b \| c |" into {"a", "b | c"}.
std::vector<std::string> split_cells(const std::string& line) {
    std::string t = trim(line);
    if (!t.empty() && t.front() == '|') {
        t.erase(t.begin());
    }
    if (t.size() >= 2 && t.back() == '|' && t[t.size() - 2] != '\\') {
        t.pop_back();
    } else if (t.size() == 1 && t.back() == '|') {
        t.pop_back();
    }
    std::vector<std::string> cells;
    std::string cell;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == '\\' && i + 1 < t.size() && t[i + 1] == '|') {
            cell.push_back('|');
            ++i;
        } else if (t[i] == '|') {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(t[i]);
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

bool is_separator(const std::string& line) {
    if (!is_table_line(line)) {
        return false;
    }
    const auto cells = split_cells(line);
    for (const auto& c : cells) {
        if (c.empty() || c.find('-') == std::string::npos) {
            return false;
        }
        for (char ch : c) {
            if (ch != '-' && ch != ':' && ch != ' ') {
                return false;
            }
        }
    }
    return true;
}

std::string escape_cell(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n' || c == '\r') {
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

struct ColumnMap {
    std::optional<std::size_t> id;
    std::optional<std::size_t> name;
    std::size_t positive = 0;
    std::size_t negative = 0;
    std::size_t start = 0;
    std::size_t end = 0;
};

std::optional<ColumnMap> map_columns(const std::vector<std::string>& header) {
    ColumnMap map;
    std::optional<std::size_t> pos, neg, start, end;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string h = lower(header[i]);
        if (h.find("positive") != std::string::npos) {
            pos = i;
        } else if (h.find("negative") != std::string::npos) {
            neg = i;
        } else if (h.find("start") != std::string::npos || h.find("onset") != std::string::npos) {
            start = i;
        } else if (h.find("end") != std::string::npos || h.find("offset") != std::string::npos) {
            end = i;
        } else if (h == "id" || h.find("anon") != std::string::npos || h.find("option") != std::string::npos ||
                   h.find("letter") != std::string::npos) {
            map.id = i;
        } else if (h.find("categ") != std::string::npos || h.find("name") != std::string::npos ||
                   h.find("class") != std::string::npos) {
            map.name = i;
        }
    }
    if (pos && neg && start && end) {
        map.positive = *pos;
        map.negative = *neg;
        map.start = *start;
        map.end = *end;
        return map;
    }
    // Unlabeled headers: fall back to the positional layout the prompt asks for.
    if (header.size() == 6) {
        return ColumnMap{0, 1, 2, 3, 4, 5};
    }
    if (header.size() == 5) {
        return ColumnMap{0, std::nullopt, 1, 2, 3, 4};
    }
    return std::nullopt;
}

}  // namespace

std::string anon_id(std::size_t index) {
    std::string id;
    std::size_t n = index + 1;
    while (n > 0) {
        --n;
        id.insert(id.begin(), static_cast<char>('A' + n % 26));
        n /= 26;
    }
    return id;
}

NormalizedDefinition::NormalizedDefinition(std::vector<DefinitionRow> rows) : m_rows(std::move(rows)) {
    for (std::size_t i = 0; i < m_rows.size(); ++i) {
        const auto& row = m_rows[i];
        if (row.anon_id != anon_id(i)) {
            throw DefinitionError(DefinitionErrorKind::kDuplicateAnonId,
                                  "row " + std::to_string(i) + " must carry anon id " + anon_id(i));
        }
        for (const auto* field : {&row.original_name, &row.positive_def, &row.negative_def, &row.start_boundary_def,
                                  &row.end_boundary_def}) {
            if (trim(*field).empty()) {
                throw DefinitionError(DefinitionErrorKind::kEmptyField,
                                      "definition row " + row.anon_id + " has an empty field");
            }
        }
        m_by_anon.emplace(row.anon_id, i);
        if (!m_by_name.emplace(row.original_name, i).second) {
            throw DefinitionError(DefinitionErrorKind::kDuplicateAnonId, "duplicate category " + row.original_name);
        }
    }
}

const DefinitionRow* NormalizedDefinition::find_anon(std::string_view id) const {
    auto it = m_by_anon.find(id);
    return it == m_by_anon.end() ? nullptr : &m_rows[it->second];
}

const DefinitionRow* NormalizedDefinition::find_name(std::string_view name) const {
    auto it = m_by_name.find(name);
    return it == m_by_name.end() ? nullptr : &m_rows[it->second];
}

std::string build_norm_prompt(const AnomalyDefinition& def, std::string_view prompt_template) {
    static constexpr std::string_view kRaw = "{RAW_DEFINITION}";
    static constexpr std::string_view kCategories = "{CATEGORIES}";
    std::string prompt(prompt_template);
    for (auto placeholder : {kRaw, kCategories}) {
        if (prompt.find(placeholder) == std::string::npos) {
            throw DefinitionError(DefinitionErrorKind::kMissingPlaceholder,
                                  "prompt template lacks " + std::string(placeholder));
        }
    }
    std::string categories;
    for (std::size_t i = 0; i < def.size(); ++i) {
        categories += anon_id(i) + ": " + def.categories()[i] + "\n";
    }
    auto replace_all = [&prompt](std::string_view from, const std::string& to) {
        for (auto at = prompt.find(from); at != std::string::npos; at = prompt.find(from, at + to.size())) {
            prompt.replace(at, from.size(), to);
        }
    };
    const std::string raw = def.raw_text().empty() ? std::string("(none given; derive it from the category names)")
                                                    : def.raw_text();
    replace_all(kRaw, raw);
    replace_all(kCategories, categories);
    return prompt;
}

NormalizedDefinition parse_definition_table(std::string_view response, const AnomalyDefinition& def) {
    const auto lines = split_lines(response);
    std::size_t header_at = lines.size();
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        if (is_table_line(lines[i]) && !is_separator(lines[i]) && is_separator(lines[i + 1])) {
            header_at = i;
            break;
        }
    }
    if (header_at == lines.size()) {
        throw DefinitionError(DefinitionErrorKind::kTableNotFound, "no markdown table in normalizer response");
    }
    const auto header = split_cells(lines[header_at]);
    const auto columns = map_columns(header);
    if (!columns) {
        throw DefinitionError(DefinitionErrorKind::kTableNotFound,
                              "markdown table lacks positive/negative/start/end columns");
    }

    std::vector<std::vector<std::string>> body;
    for (std::size_t i = header_at + 2; i < lines.size() && is_table_line(lines[i]); ++i) {
        body.push_back(split_cells(lines[i]));
    }
    if (body.size() != def.size()) {
        throw DefinitionError(DefinitionErrorKind::kRowCountMismatch,
                              "table has " + std::to_string(body.size()) + " rows for " +
                                  std::to_string(def.size()) + " categories");
    }

    std::set<std::string> seen_ids;
    std::vector<DefinitionRow> rows;
    for (std::size_t i = 0; i < body.size(); ++i) {
        auto cell = [&](std::size_t column) -> std::string {
            return column < body[i].size() ? body[i][column] : std::string();
        };
        if (columns->id) {
            std::string id = upper(cell(*columns->id));
            id.erase(std::remove_if(id.begin(), id.end(), [](unsigned char c) { return !std::isalnum(c); }), id.end());
            if (!id.empty() && !seen_ids.insert(id).second) {
                throw DefinitionError(DefinitionErrorKind::kDuplicateAnonId, "anon id " + id + " appears twice");
            }
        }
        DefinitionRow row{anon_id(i),        def.categories()[i], cell(columns->positive),
                          cell(columns->negative), cell(columns->start), cell(columns->end)};
        for (const auto* field : {&row.positive_def, &row.negative_def, &row.start_boundary_def, &row.end_boundary_def}) {
            if (field->empty()) {
                throw DefinitionError(DefinitionErrorKind::kEmptyField,
                                      "row " + std::to_string(i + 1) + " of the definition table has an empty cell");
            }
        }
        rows.push_back(std::move(row));
    }
    return NormalizedDefinition(std::move(rows));
}

Category deanonymize(std::string_view token, const NormalizedDefinition& ndef) {
    const std::string key = upper(trim(token));
    if (key == Category::kNormalLabel) {
        return Category::normal();
    }
    if (const auto* row = ndef.find_anon(key)) {
        return Category::named(row->original_name);
    }
    throw DefinitionError(DefinitionErrorKind::kUnknownAnonId, "unknown category option '" + std::string(token) + "'");
}

std::string anonymize(const Category& category, const NormalizedDefinition& ndef) {
    if (category.is_normal()) {
        return std::string(Category::kNormalLabel);
    }
    if (const auto* row = ndef.find_name(category.label())) {
        return row->anon_id;
    }
    throw DefinitionError(DefinitionErrorKind::kUnknownAnonId, "category not in definition: " + category.label());
}

std::string to_markdown(const NormalizedDefinition& ndef, bool include_names) {
    std::ostringstream out;
    if (include_names) {
        out << "| ID | Category | Positive Definition | Negative Definition | Start Boundary | End Boundary |\n"
            << "|---|---|---|---|---|---|\n";
    } else {
        out << "| ID | Positive Definition | Negative Definition | Start Boundary | End Boundary |\n"
            << "|---|---|---|---|---|\n";
    }
    for (const auto& row : ndef.rows()) {
        out << "| " << row.anon_id << " | ";
        if (include_names) {
            out << escape_cell(row.original_name) << " | ";
        }
        out << escape_cell(row.positive_def) << " | " << escape_cell(row.negative_def) << " | "
            << escape_cell(row.start_boundary_def) << " | " << escape_cell(row.end_boundary_def) << " |\n";
    }
    return out.str();
}

NormalizedDefinition degraded_definition(const AnomalyDefinition& def) {
    std::vector<DefinitionRow> rows;
    for (std::size_t i = 0; i < def.size(); ++i) {
        const auto& name = def.categories()[i];
        rows.push_back(DefinitionRow{anon_id(i), name, name, "none",
                                     "The first moment an instance of this event becomes visible.",
                                     "The moment the event has visibly ended."});
    }
    return NormalizedDefinition(std::move(rows));
}

std::uint64_t definition_hash(const AnomalyDefinition& def) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;  // field separator
        h *= 1099511628211ULL;
    };
    mix(def.raw_text());
    for (const auto& c : def.categories()) {
        mix(c);
    }
    return h;
}

}  // namespace streamvad::dn

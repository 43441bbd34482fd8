// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

namespace streamvad::eval {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw EvalError(EvalErrorKind::kLengthMismatch,
                        "length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

std::optional<double> mean_of(const std::vector<double>& values) {
    if (values.empty()) {
        return std::nullopt;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

AggregateRow aggregate(std::string name, const std::vector<const SampleRow*>& rows) {
    AggregateRow out;
    out.name = std::move(name);
    out.samples = rows.size();
    std::vector<double> aucs;
    std::vector<double> aps;
    std::size_t correct = 0;
    for (const auto* row : rows) {
        if (row->auc) {
            aucs.push_back(*row->auc);
        }
        if (row->ap) {
            aps.push_back(*row->ap);
        }
        correct += row->correct ? 1 : 0;
    }
    out.auc = mean_of(aucs);
    out.ap = mean_of(aps);
    out.auc_samples = aucs.size();
    out.ap_samples = aps.size();
    out.accuracy = rows.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(rows.size());
    return out;
}

std::string fmt_metric(const std::optional<double>& v) {
    if (!v) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json aggregate_json(const AggregateRow& row) {
    return {{"name", row.name},
            {"auc", optional_json(row.auc)},
            {"ap", optional_json(row.ap)},
            {"accuracy", row.accuracy},
            {"samples", row.samples},
            {"auc_samples", row.auc_samples},
            {"ap_samples", row.ap_samples}};
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores.size(), labels.size());
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mid-ranks (1-based) so tied groups share the average rank.
    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                positive_rank_sum += mid;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw EvalError(EvalErrorKind::kSingleClass, "AUC needs both positive and negative frames");
    }
    const double p = static_cast<double>(positives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double ap(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores.size(), labels.size());
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0) {
        throw EvalError(EvalErrorKind::kNoPositive, "AP needs at least one positive frame");
    }
    return sum / static_cast<double>(hits);
}

double macro_f1(std::span<const Category> predicted, std::span<const Category> truth, std::span<const Category> classes,
                std::vector<Category>* absent) {
    check_lengths(predicted.size(), truth.size());
    if (predicted.empty() || classes.empty()) {
        spdlog::warn("macro-F1 over empty input is reported as 0");
        return 0.0;
    }
    double total = 0.0;
    for (const auto& c : classes) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            const bool p = predicted[i] == c;
            const bool t = truth[i] == c;
            tp += (p && t) ? 1 : 0;
            fp += (p && !t) ? 1 : 0;
            fn += (!p && t) ? 1 : 0;
        }
        if (tp + fp + fn == 0) {
            spdlog::info("class {} absent from predictions and ground truth; F1 counted as 0", c.label());
            if (absent) {
                absent->push_back(c);
            }
            continue;
        }
        total += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return total / static_cast<double>(classes.size());
}

double selection_accuracy(std::span<const Category> predicted, std::span<const Category> truth) {
    check_lengths(predicted.size(), truth.size());
    if (predicted.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        correct += predicted[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

std::string BenchmarkSample::key() const {
    return video_id + "#" + std::to_string(definition_set);
}

std::vector<std::uint8_t> BenchmarkSample::frame_labels() const {
    std::vector<std::uint8_t> labels(total_frames, 0);
    for (const auto& iv : gt_intervals) {
        for (std::size_t f = iv.start; f <= iv.end && f < total_frames; ++f) {
            labels[f] = 1;
        }
    }
    return labels;
}

std::vector<BenchmarkSample> parse_benchmark(std::istream& in) {
    static const std::set<std::string> kFields{"video_id",        "total_frames", "fps",        "categories",
                                               "definition_text", "gt_intervals", "gt_category"};
    std::vector<BenchmarkSample> samples;
    std::map<std::string, std::size_t> occurrences;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto parse_error = [&](const std::string& what) {
            return EvalError(EvalErrorKind::kParse, "benchmark line " + std::to_string(line_no) + ": " + what);
        };
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw parse_error(e.what());
        }
        if (!j.is_object()) {
            throw parse_error("record is not an object");
        }
        for (const auto& [key, value] : j.items()) {
            if (!kFields.contains(key)) {
                throw parse_error("unknown field '" + key + "'");
            }
        }
        std::string video_id;
        std::size_t total_frames = 0;
        double fps = 0.0;
        std::vector<std::string> categories;
        std::string definition_text;
        std::vector<std::pair<long long, long long>> raw_intervals;
        std::string gt_label;
        try {
            video_id = j.at("video_id").get<std::string>();
            total_frames = j.at("total_frames").get<std::size_t>();
            fps = j.at("fps").get<double>();
            categories = j.at("categories").get<std::vector<std::string>>();
            definition_text = j.at("definition_text").get<std::string>();
            for (const auto& iv : j.at("gt_intervals")) {
                if (!iv.is_array() || iv.size() != 2) {
                    throw parse_error("gt_intervals entries must be [start, end] pairs");
                }
                raw_intervals.emplace_back(iv.at(0).get<long long>(), iv.at(1).get<long long>());
            }
            gt_label = j.at("gt_category").get<std::string>();
        } catch (const json::exception& e) {
            throw parse_error(e.what());
        }

        const auto invariant_error = [&](const std::string& what) {
            return EvalError(EvalErrorKind::kInvariant, "sample " + video_id + " (line " + std::to_string(line_no) +
                                                            "): " + what);
        };
        if (total_frames == 0) {
            throw invariant_error("total_frames must be positive");
        }
        if (!(fps > 0.0)) {
            throw invariant_error("fps must be positive");
        }
        std::optional<AnomalyDefinition> definition;
        try {
            definition.emplace(definition_text, categories);
        } catch (const std::invalid_argument& e) {
            throw invariant_error(e.what());
        }
        std::vector<Interval> intervals;
        for (const auto& [s, e] : raw_intervals) {
            if (s < 0 || e < s || static_cast<unsigned long long>(e) >= total_frames) {
                throw invariant_error("interval [" + std::to_string(s) + ", " + std::to_string(e) +
                                      "] outside [0, total_frames)");
            }
            intervals.push_back(Interval{static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
        }
        const Category gt = Category::from_label(gt_label);
        if (!gt.is_normal() && std::find(definition->categories().begin(), definition->categories().end(),
                                         gt.label()) == definition->categories().end()) {
            throw invariant_error("gt_category '" + gt.label() + "' is not one of the categories");
        }
        if (gt.is_normal() != intervals.empty()) {
            throw invariant_error("gt_category is NORMAL exactly when gt_intervals is empty");
        }
        const std::size_t set = occurrences[video_id]++;
        samples.push_back(BenchmarkSample{video_id, total_frames, fps, std::move(*definition), std::move(intervals), gt,
                                          set});
    }
    return samples;
}

std::vector<BenchmarkSample> load_benchmark(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open benchmark file: " + path.string());
    }
    return parse_benchmark(in);
}

std::string benchmark_record(const BenchmarkSample& sample) {
    ordered_json intervals = ordered_json::array();
    for (const auto& iv : sample.gt_intervals) {
        intervals.push_back({iv.start, iv.end});
    }
    ordered_json record;
    record["video_id"] = sample.video_id;
    record["total_frames"] = sample.total_frames;
    record["fps"] = sample.fps;
    record["categories"] = sample.definition.categories();
    record["definition_text"] = sample.definition.raw_text();
    record["gt_intervals"] = intervals;
    record["gt_category"] = sample.gt_category.label();
    return record.dump();
}

EvalReport evaluate(const std::map<std::string, RunOutput>& outputs, std::span<const BenchmarkSample> samples,
                    Protocol protocol) {
    EvalReport report;
    report.protocol = protocol;
    std::vector<Category> predicted;
    std::vector<Category> truth;
    std::vector<double> rtfs;
    std::size_t missing_ap = 0;
    for (const auto& sample : samples) {
        const auto it = outputs.find(sample.key());
        if (it == outputs.end()) {
            throw EvalError(EvalErrorKind::kMissingOutput, "no run output for sample " + sample.key());
        }
        const RunOutput& out = it->second;
        if (out.scores.size() != sample.total_frames) {
            throw EvalError(EvalErrorKind::kLengthMismatch, "scores for " + sample.key() + " cover " +
                                                                std::to_string(out.scores.size()) + " of " +
                                                                std::to_string(sample.total_frames) + " frames");
        }
        SampleRow row;
        row.key = sample.key();
        row.definition_set = sample.definition_set;
        const auto labels = sample.frame_labels();
        try {
            row.auc = auc(out.scores.values(), labels);
        } catch (const EvalError&) {
            // single-class sample: AUC undefined
        }
        try {
            row.ap = ap(out.scores.values(), labels);
        } catch (const EvalError&) {
            ++missing_ap;
        }
        row.correct = out.predicted == sample.gt_category;
        row.predicted = out.predicted.label();
        row.truth = sample.gt_category.label();
        predicted.push_back(out.predicted);
        truth.push_back(sample.gt_category);
        if (out.rtf) {
            rtfs.push_back(*out.rtf);
        }
        report.samples.push_back(std::move(row));
    }
    if (missing_ap > 0) {
        report.notes.push_back(std::to_string(missing_ap) + " sample(s) without positive frames excluded from AP");
    }

    std::vector<const SampleRow*> all;
    for (const auto& row : report.samples) {
        all.push_back(&row);
    }
    report.overall = aggregate("all", all);

    if (protocol == Protocol::kMultiDefinition) {
        std::map<std::size_t, std::vector<const SampleRow*>> by_set;
        for (const auto& row : report.samples) {
            by_set[row.definition_set].push_back(&row);
        }
        for (const auto& [set, rows] : by_set) {
            report.per_set.push_back(aggregate("set " + std::to_string(set), rows));
        }
        AggregateRow mean;
        mean.name = "set mean";
        std::vector<double> aucs;
        std::vector<double> aps;
        double acc = 0.0;
        for (const auto& row : report.per_set) {
            if (row.auc) {
                aucs.push_back(*row.auc);
            }
            if (row.ap) {
                aps.push_back(*row.ap);
            }
            acc += row.accuracy;
            mean.samples += row.samples;
        }
        mean.auc = mean_of(aucs);
        mean.ap = mean_of(aps);
        mean.auc_samples = aucs.size();
        mean.ap_samples = aps.size();
        mean.accuracy = report.per_set.empty() ? 0.0 : acc / static_cast<double>(report.per_set.size());
        report.set_mean = mean;
    }

    const bool fixed_categories =
        !samples.empty() && std::all_of(samples.begin(), samples.end(), [&](const BenchmarkSample& s) {
            return s.definition.categories() == samples.front().definition.categories();
        });
    if (fixed_categories) {
        std::set<Category> seen(truth.begin(), truth.end());
        seen.insert(predicted.begin(), predicted.end());
        const std::vector<Category> classes(seen.begin(), seen.end());
        report.macro_f1 = macro_f1(predicted, truth, classes);
    }
    if (!rtfs.empty()) {
        report.rtf = mean_of(rtfs);
    }
    return report;
}

void print_report(std::ostream& out, const EvalReport& report) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-28s %8s %8s %8s\n", "sample", "AUC", "AP", "correct");
    out << line;
    for (const auto& row : report.samples) {
        std::snprintf(line, sizeof(line), "%-28s %8s %8s %8s\n", row.key.c_str(), fmt_metric(row.auc).c_str(),
                      fmt_metric(row.ap).c_str(), row.correct ? "yes" : "no");
        out << line;
    }
    out << "\n";
    std::snprintf(line, sizeof(line), "%-28s %8s %8s %8s %8s\n", "aggregate", "AUC", "AP", "Accuracy", "samples");
    out << line;
    const auto print_row = [&](const AggregateRow& row) {
        std::snprintf(line, sizeof(line), "%-28s %8s %8s %8.4f %8zu\n", row.name.c_str(), fmt_metric(row.auc).c_str(),
                      fmt_metric(row.ap).c_str(), row.accuracy, row.samples);
        out << line;
    };
    print_row(report.overall);
    for (const auto& row : report.per_set) {
        print_row(row);
    }
    if (report.set_mean) {
        print_row(*report.set_mean);
    }
    if (report.macro_f1) {
        out << "Macro-F1: " << fmt_metric(report.macro_f1) << "\n";
    }
    if (report.rtf) {
        out << "RTF: " << fmt_metric(report.rtf) << "\n";
    }
    for (const auto& note : report.notes) {
        out << "note: " << note << "\n";
    }
}

json report_to_json(const EvalReport& report) {
    json samples = json::array();
    for (const auto& row : report.samples) {
        samples.push_back({{"key", row.key},
                           {"definition_set", row.definition_set},
                           {"auc", optional_json(row.auc)},
                           {"ap", optional_json(row.ap)},
                           {"correct", row.correct},
                           {"predicted", row.predicted},
                           {"truth", row.truth}});
    }
    json per_set = json::array();
    for (const auto& row : report.per_set) {
        per_set.push_back(aggregate_json(row));
    }
    return {{"protocol", report.protocol == Protocol::kSingle ? "single" : "multi_definition"},
            {"samples", samples},
            {"overall", aggregate_json(report.overall)},
            {"per_set", per_set},
            {"set_mean", report.set_mean ? aggregate_json(*report.set_mean) : json(nullptr)},
            {"macro_f1", optional_json(report.macro_f1)},
            {"rtf", optional_json(report.rtf)},
            {"notes", report.notes}};
}

}  // namespace streamvad::eval

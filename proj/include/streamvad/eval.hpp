// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "streamvad/error.hpp"
#include "streamvad/types.hpp"

namespace streamvad::eval {

enum class EvalErrorKind { kParse, kInvariant, kMissingOutput, kSingleClass, kNoPositive, kLengthMismatch };
using EvalError = KindedError<EvalErrorKind>;

/// Rank-statistic AUC with ties counted one half. Throws kSingleClass unless both labels occur.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Non-interpolated AP: mean precision at the rank of each positive, ranking by descending score
/// with ties broken by original index. Throws kNoPositive without positives.
double ap(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Unweighted mean of per-class F1 over `classes`; a zero denominator gives F1 = 0. Classes that
/// appear in neither list are reported through `absent` when given.
double macro_f1(std::span<const Category> predicted, std::span<const Category> truth, std::span<const Category> classes,
                std::vector<Category>* absent = nullptr);

/// Exact-match fraction; NORMAL is an ordinary answer. 0 for empty input.
double selection_accuracy(std::span<const Category> predicted, std::span<const Category> truth);

struct BenchmarkSample {
    std::string video_id;
    std::size_t total_frames = 0;
    double fps = 0.0;
    AnomalyDefinition definition;
    /// Closed global-frame intervals.
    std::vector<Interval> gt_intervals;
    Category gt_category = Category::normal();
    /// Occurrence of this video_id among earlier samples; identifies the definition set.
    std::size_t definition_set = 0;

    /// "<video_id>#<definition_set>", the join key between samples and run outputs.
    std::string key() const;
    /// Per-frame 0/1 labels from the ground-truth intervals.
    std::vector<std::uint8_t> frame_labels() const;
};

/// Line-delimited records with fields video_id, total_frames, fps, categories, definition_text,
/// gt_intervals, gt_category. Throws kParse (with line number) or kInvariant (with video id).
std::vector<BenchmarkSample> load_benchmark(const std::filesystem::path& path);
std::vector<BenchmarkSample> parse_benchmark(std::istream& in);
/// Writes one sample in the fixed field order.
std::string benchmark_record(const BenchmarkSample& sample);

struct RunOutput {
    ScoreSeries scores;
    Category predicted = Category::normal();
    std::optional<double> rtf;
};

enum class Protocol { kSingle, kMultiDefinition };

struct SampleRow {
    std::string key;
    std::size_t definition_set = 0;
    std::optional<double> auc;
    std::optional<double> ap;
    bool correct = false;
    std::string predicted;
    std::string truth;
};

struct AggregateRow {
    std::string name;
    std::optional<double> auc;
    std::optional<double> ap;
    double accuracy = 0.0;
    std::size_t samples = 0;
    std::size_t auc_samples = 0;
    std::size_t ap_samples = 0;
};

struct EvalReport {
    Protocol protocol = Protocol::kSingle;
    std::vector<SampleRow> samples;
    AggregateRow overall;
    /// Multi-definition protocol: one row per definition set, then their mean.
    std::vector<AggregateRow> per_set;
    std::optional<AggregateRow> set_mean;
    /// Present when every sample shares one category set.
    std::optional<double> macro_f1;
    std::optional<double> rtf;
    std::vector<std::string> notes;
};

/// Pure function of its inputs. Throws kMissingOutput naming the first sample without output and
/// kLengthMismatch when a score series does not cover its sample's frames.
EvalReport evaluate(const std::map<std::string, RunOutput>& outputs, std::span<const BenchmarkSample> samples,
                    Protocol protocol);

void print_report(std::ostream& out, const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);

}  // namespace streamvad::eval

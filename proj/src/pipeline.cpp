// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "streamvad/hsm.hpp"
#include "streamvad/iim.hpp"

namespace streamvad::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
    }
    return text;
}

std::string format_seconds(double s) {
    std::ostringstream out;
    out << s;
    return out.str();
}

std::optional<Interval> seconds_to_frames(double a, double b, const StreamConfig& cfg) {
    if (!std::isfinite(a) || !std::isfinite(b)) {
        return std::nullopt;
    }
    if (a > b) {
        std::swap(a, b);
    }
    const double last = static_cast<double>(cfg.window_len - 1);
    const double start = std::clamp(std::round(a * cfg.sample_fps), 0.0, last);
    const double end = std::clamp(std::round(b * cfg.sample_fps), 0.0, last);
    return Interval{static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
}

const std::regex& interval_pattern() {
    static const std::regex re(R"((\d+(?:\.\d+)?)\s*s?\s*(?:-|to)\s*(\d+(?:\.\d+)?))", std::regex::icase);
    return re;
}

void collect_intervals(const std::string& text, const StreamConfig& cfg, std::vector<Interval>& out,
                       bool first_only) {
    const auto& re = interval_pattern();
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        if (auto iv = seconds_to_frames(std::stod((*it)[1]), std::stod((*it)[2]), cfg)) {
            out.push_back(*iv);
            if (first_only) {
                return;
            }
        }
    }
}

std::string trim_copy(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::vector<WindowPlan> schedule(std::size_t total_frames, const StreamConfig& cfg) {
    if (total_frames == 0) {
        throw std::invalid_argument("stream has no frames");
    }
    const std::size_t stride = cfg.stride();
    std::size_t count = 1;
    if (total_frames > cfg.window_len) {
        count += (total_frames - cfg.window_len + stride - 1) / stride;
    }
    std::vector<WindowPlan> plans;
    plans.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        WindowPlan plan;
        plan.index = t;
        plan.start = t * stride;
        plan.end = plan.start + cfg.window_len;
        if (t > 0) {
            plan.overlap_begin = plan.start;
            plan.overlap_end = plan.start + cfg.overlap;
        } else {
            plan.overlap_begin = plan.overlap_end = plan.start;
        }
        plan.real_frames = std::min(plan.end, total_frames) - plan.start;
        plans.push_back(plan);
    }
    return plans;
}

ParsedPrediction parse_prediction(std::string_view text, const dn::NormalizedDefinition& ndef,
                                  const StreamConfig& cfg) {
    ParsedPrediction out;
    std::istringstream lines{std::string(text)};
    std::string line;
    std::optional<Category> category;
    std::vector<Interval> intervals;
    while (std::getline(lines, line)) {
        const std::string trimmed = trim_copy(line);
        const std::string lower = lowercase(trimmed);
        if (lower.rfind("category:", 0) == 0 && !category) {
            try {
                category = dn::deanonymize(trim_copy(trimmed.substr(9)), ndef);
            } catch (const dn::DefinitionError&) {
                // leave unset; the fallback scan below may still recover an option
            }
        } else if (lower.rfind("interval:", 0) == 0) {
            collect_intervals(trimmed.substr(9), cfg, intervals, true);
        }
    }
    if (category) {
        out.structured = true;
        out.category = *category;
        if (!category->is_normal()) {
            out.intervals = std::move(intervals);
        }
        return out;
    }

    const std::string body(text);
    static const std::regex option(R"(\(([A-Za-z]{1,2})\))");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), option); it != std::sregex_iterator(); ++it) {
        std::string id = (*it)[1];
        std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::toupper(c); });
        if (const auto* row = ndef.find_anon(id)) {
            out.category = Category::named(row->original_name);
            collect_intervals(body, cfg, out.intervals, true);
            return out;
        }
    }
    return out;
}

FrameFeatureGrid InMemorySource::window(std::size_t begin, std::size_t end) {
    if (begin >= m_grid.frames()) {
        throw IoError("window starts past the end of the stream");
    }
    return m_grid.slice_padded(begin, end);
}

EfgFileSource::EfgFileSource(std::filesystem::path path) : m_path(std::move(path)), m_shape(read_efg_shape(m_path)) {}

FrameFeatureGrid EfgFileSource::window(std::size_t begin, std::size_t end) {
    const std::size_t real_end = std::min(end, m_shape.frames);
    if (begin >= real_end) {
        throw IoError("window starts past the end of " + m_path.string());
    }
    return read_efg_frames(m_path, begin, real_end).slice_padded(0, end - begin);
}

ChunkDirectorySource::ChunkDirectorySource(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("feature directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".efg") {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) {
        throw IoError("no .efg chunks in " + dir.string());
    }
    std::sort(files.begin(), files.end());
    std::size_t total = 0;
    for (const auto& file : files) {
        const GridShape shape = read_efg_shape(file);
        if (m_chunks.empty()) {
            m_shape = shape;
        } else if (shape.rows != m_shape.rows || shape.cols != m_shape.cols || shape.channels != m_shape.channels) {
            throw IoError("chunk " + file.string() + " has a different patch grid");
        }
        m_chunks.push_back(Chunk{file, total, shape.frames});
        total += shape.frames;
    }
    m_shape.frames = total;
}

FrameFeatureGrid ChunkDirectorySource::window(std::size_t begin, std::size_t end) {
    const std::size_t real_end = std::min(end, m_shape.frames);
    if (begin >= real_end) {
        throw IoError("window starts past the end of the chunk directory");
    }
    std::vector<float> data;
    for (const auto& chunk : m_chunks) {
        const std::size_t lo = std::max(begin, chunk.first);
        const std::size_t hi = std::min(real_end, chunk.first + chunk.frames);
        if (lo >= hi) {
            continue;
        }
        const auto part = read_efg_frames(chunk.path, lo - chunk.first, hi - chunk.first);
        data.insert(data.end(), part.data().begin(), part.data().end());
    }
    GridShape shape = m_shape;
    shape.frames = real_end - begin;
    return FrameFeatureGrid(shape, std::move(data)).slice_padded(0, end - begin);
}

FrameFeatureGrid SyntheticSource::window(std::size_t begin, std::size_t end) {
    if (begin >= m_shape.frames) {
        throw IoError("window starts past the end of the synthetic stream");
    }
    const std::size_t real_end = std::min(end, m_shape.frames);
    const std::size_t hw = m_shape.patches_per_frame();
    std::vector<float> data;
    data.reserve((real_end - begin) * hw * m_shape.channels);
    for (std::size_t f = begin; f < real_end; ++f) {
        // Slowly drifting per-patch patterns: neighboring frames stay similar, as in real video.
        const double scene = static_cast<double>(f / 40);
        for (std::size_t p = 0; p < hw; ++p) {
            for (std::size_t c = 0; c < m_shape.channels; ++c) {
                const double phase = static_cast<double>((m_seed * 131 + p * 17 + c * 7) % 101);
                const double v = std::sin(phase + 0.01 * static_cast<double>(f) * static_cast<double>(c + 1)) +
                                 0.3 * std::cos(0.7 * scene + static_cast<double>(p + c));
                data.push_back(static_cast<float>(c == 0 ? v + 2.5 : v));
            }
        }
    }
    GridShape shape = m_shape;
    shape.frames = real_end - begin;
    return FrameFeatureGrid(shape, std::move(data)).slice_padded(0, end - begin);
}

Prompts Prompts::defaults() {
    Prompts p;
    p.system =
        "You watch a surveillance video stream in windows of {WINDOW_SECONDS} seconds and report anomalies.\n"
        "Anomaly categories, identified by letter:\n"
        "{DEFINITION_TABLE}\n"
        "A window is anomalous only if an event matches a positive definition and none of the negative ones.\n"
        "Answer with exactly two lines:\n"
        "CATEGORY: <letter or NORMAL>\n"
        "INTERVAL: <start seconds>-<end seconds>, relative to the window start\n"
        "Omit the INTERVAL line when the answer is NORMAL.\n";
    p.normalization =
        "Rewrite the anomaly definition below as a markdown table with the columns\n"
        "| ID | Category | Positive Definition | Negative Definition | Start Boundary | End Boundary |\n"
        "Use one row per category, keep the given IDs, and describe observable visual evidence only.\n"
        "Definition:\n{RAW_DEFINITION}\n"
        "Categories:\n{CATEGORIES}\n";
    p.memory =
        "Earlier observations:\n{MEMORY}\n"
        "Describe the current window, then answer with the CATEGORY and INTERVAL lines.\n";
    return p;
}

Prompts Prompts::load(const std::filesystem::path& dir) {
    Prompts p = defaults();
    const auto read_if_present = [&](const char* name, std::string& slot) {
        const auto path = dir / name;
        if (!std::filesystem::exists(path)) {
            return;
        }
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot read prompt file: " + path.string());
        }
        std::ostringstream text;
        text << in.rdbuf();
        slot = text.str();
    };
    read_if_present("system.txt", p.system);
    read_if_present("normalization.txt", p.normalization);
    read_if_present("memory.txt", p.memory);
    return p;
}

const DefinitionNormalizer::Result& DefinitionNormalizer::normalize(const AnomalyDefinition& def) {
    const std::uint64_t key = dn::definition_hash(def);
    if (auto it = m_cache.find(key); it != m_cache.end()) {
        return it->second;
    }
    ++m_invocations;
    if (m_mode == NormalizationMode::kLocal) {
        return m_cache.emplace(key, Result{dn::degraded_definition(def), true, "local normalization"}).first->second;
    }
    try {
        const auto response = m_backend.complete(dn::build_norm_prompt(def, m_template));
        return m_cache.emplace(key, Result{dn::parse_definition_table(response.text, def), false, {}}).first->second;
    } catch (const backend::BackendError& e) {
        return m_cache.emplace(key, Result{dn::degraded_definition(def), true, e.what()}).first->second;
    } catch (const dn::DefinitionError& e) {
        return m_cache.emplace(key, Result{dn::degraded_definition(def), true, e.what()}).first->second;
    }
}

namespace {

struct StreamState {
    const dn::NormalizedDefinition* ndef = nullptr;
    std::string system_prompt;
    std::optional<hsm::SegmentedKVCache> prefix;
    /// VISUAL rows of the previous window for frames [start, end), with their frame offsets.
    std::optional<hsm::SegmentedKVCache> previous;
    std::vector<std::size_t> previous_offsets;
    std::size_t previous_visual_begin = 0;
    hsm::LongTermMemory memory;
};

std::string render_memory(const hsm::LongTermMemory& memory, const StreamConfig& cfg, const Prompts& prompts) {
    const std::string rendered = memory.empty() ? prompts.empty_memory : memory.render(cfg);
    return replace_all(prompts.memory, "{MEMORY}", rendered);
}

std::vector<std::string> frame_urls(const WindowPlan& plan, const StreamConfig& cfg, const std::string& tmpl) {
    std::vector<std::string> urls;
    if (tmpl.empty()) {
        return urls;
    }
    const std::size_t last = plan.start + plan.real_frames;
    for (std::size_t f = plan.start; f < last; f += cfg.gof_size) {
        urls.push_back(replace_all(tmpl, "{frame}", std::to_string(f)));
    }
    return urls;
}

}  // namespace

RunSummary run_stream(FeatureSource& source, const DefinitionSchedule& definitions, const StreamConfig& cfg,
                      backend::Backend& backend, const PipelineOptions& options, const WindowCallback& on_window) {
    if (definitions.empty() || definitions.front().first != 0) {
        throw std::invalid_argument("the definition schedule must start at window 0");
    }
    const auto run_started = Clock::now();
    const GridShape shape = source.shape();
    const std::size_t hw = shape.patches_per_frame();
    const auto plans = schedule(shape.frames, cfg);
    const bool cached = backend.capabilities().cache_capable;
    const std::size_t memory_capacity = options.enable_long_term_memory ? cfg.mem_windows : 0;

    RunSummary summary;
    if (!cached) {
        const std::string note = std::string(backend.name()) +
                                 " backend cannot hold a KV cache; memory falls back to window descriptions only";
        spdlog::warn("{}", note);
        summary.notes.push_back(note);
    }

    DefinitionNormalizer normalizer(backend, options.prompts.normalization, options.normalization);
    ps::Accumulator accumulator(shape.frames,
                                options.score_normalization == ps::Normalization::kFixedZ ? ps::fixed_normalizer(cfg)
                                                                                           : 1.0);
    StreamState state;
    std::size_t schedule_pos = 0;
    bool logged_degraded = false;

    for (const auto& plan : plans) {
        const auto window_started = Clock::now();
        WindowRecord record;
        record.plan = plan;
        record.rows.uncompressed_visual = cfg.window_len * hw;

        bool changed = false;
        while (schedule_pos < definitions.size() && definitions[schedule_pos].first <= plan.index) {
            const auto& result = normalizer.normalize(definitions[schedule_pos].second);
            if (result.degraded && !logged_degraded) {
                spdlog::info("definition normalization degraded to the local table: {}", result.note);
                summary.notes.push_back("definition normalization degraded: " + result.note);
                logged_degraded = true;
            }
            const bool differs = state.ndef == nullptr || !(*state.ndef == result.definition);
            state.ndef = &result.definition;
            changed = changed || (differs && plan.index > 0);
            if (differs) {
                state.system_prompt = replace_all(
                    replace_all(options.prompts.system, "{DEFINITION_TABLE}", dn::to_markdown(result.definition, false)),
                    "{WINDOW_SECONDS}", format_seconds(cfg.window_seconds()));
                state.prefix.reset();
                state.previous.reset();
            }
            ++schedule_pos;
        }
        record.definition_changed = changed;

        const FrameFeatureGrid grid = source.window(plan.start, plan.end);
        const std::string memory_text = render_memory(state.memory, cfg, options.prompts);
        std::string generated;
        try {
            backend::GenerationResult result;
            if (cached) {
                const auto compress_started = Clock::now();
                const iim::CompressedWindow compressed =
                    options.enable_iim ? iim::compress_window(grid, plan.start, cfg) : iim::passthrough_window(grid);
                record.compress_seconds = seconds_since(compress_started);

                const auto model_started = Clock::now();
                if (!state.prefix) {
                    state.prefix.emplace(backend.cache_geometry());
                    backend.prefill_text(*state.prefix, state.system_prompt, hsm::Segment::kPrefix);
                }
                record.rows.prefix = state.prefix->size();

                const bool reuse = options.enable_kv_reuse && state.previous && plan.index > 0;
                const std::size_t overlap_frames = reuse ? cfg.overlap : 0;
                const std::size_t new_tokens = compressed.token_count(overlap_frames, cfg.window_len);
                hsm::ContextBuild ctx = [&] {
                    if (!reuse) {
                        return hsm::build_context(*state.prefix, new_tokens);
                    }
                    const std::size_t expected = options.enable_iim
                                                     ? iim::retained_tokens(plan.start, plan.start + cfg.overlap, hw, cfg)
                                                     : cfg.overlap * hw;
                    const std::size_t begin = state.previous_visual_begin + state.previous_offsets[cfg.stride()];
                    const std::size_t end = state.previous_visual_begin + state.previous_offsets[cfg.window_len];
                    return hsm::build_context(*state.prefix, state.previous->slice(begin, end), expected, new_tokens);
                }();
                record.reused = reuse;
                record.rows.reused_visual = ctx.reused_rows;
                record.rows.shift = ctx.shift;

                const std::size_t visual_begin = ctx.cache.size() - ctx.reused_rows;
                backend.prefill_visual(ctx.cache, compressed.frame_tokens(overlap_frames, cfg.window_len));
                record.rows.new_visual = new_tokens;
                const std::size_t before_text = ctx.cache.size();
                backend.prefill_text(ctx.cache, memory_text, hsm::Segment::kMemory);
                record.rows.text = ctx.cache.size() - before_text;

                state.previous_visual_begin = visual_begin;
                state.previous_offsets = compressed.frame_offsets;
                state.previous = ctx.cache;

                result = backend.decode(ctx.cache, backend::DecodeRequest{plan.index, options.max_new_tokens});
                record.rows.generated = ctx.cache.size() - before_text - record.rows.text;
                record.model_seconds = seconds_since(model_started);
            } else {
                const auto model_started = Clock::now();
                backend::PromptRequest request;
                request.window_index = plan.index;
                request.system_prompt = state.system_prompt;
                request.user_prompt = memory_text;
                request.image_urls = frame_urls(plan, cfg, options.frame_url_template);
                request.max_new_tokens = options.max_new_tokens;
                result = backend.generate(request);
                record.rows.text = backend::tokenize(memory_text).size();
                record.rows.generated = result.token_count;
                record.model_seconds = seconds_since(model_started);
            }

            auto parsed = parse_prediction(result.text, *state.ndef, cfg);
            record.prediction.window_index = plan.index;
            record.prediction.text = result.text;
            record.prediction.category = parsed.category;
            record.prediction.intervals = std::move(parsed.intervals);
            record.prediction.token_probs = result.token_probs;
            record.prediction.confidence = ps::confidence(result.token_probs);
            generated = result.text;
        } catch (const backend::BackendError& e) {
            record.failed = true;
            record.failure = std::string(backend::error_kind_name(e.kind())) + ": " + e.what();
        } catch (const ps::PsError& e) {
            record.failed = true;
            record.failure = std::string("invalid probabilities: ") + e.what();
        } catch (const hsm::HsmError& e) {
            record.failed = true;
            record.failure = std::string("cache: ") + e.what();
            state.previous.reset();
        }
        if (record.failed) {
            spdlog::warn("window {} scored as zero: {}", plan.index, record.failure);
            record.prediction = WindowPrediction{};
            record.prediction.window_index = plan.index;
            ++summary.failed_windows;
        }

        ps::LocalCurve curve = ps::window_curve(plan.index,
                                                record.failed ? std::span<const Interval>{}
                                                              : std::span<const Interval>(record.prediction.intervals),
                                                record.prediction.confidence, cfg);
        curve.values.resize(plan.real_frames);
        accumulator.accumulate(curve, plan.start);
        record.curve = std::move(curve);

        if (!record.failed && !generated.empty()) {
            state.memory = hsm::update_memory(std::move(state.memory), generated, plan.index, memory_capacity);
        }
        record.scores = accumulator.finalize(options.score_normalization);
        record.window_seconds = seconds_since(window_started);
        summary.predictions.push_back(record.prediction);
        ++summary.windows;
        if (on_window) {
            on_window(record);
        }
    }

    summary.scores = accumulator.finalize(options.score_normalization);
    summary.normalizations = normalizer.invocations();
    summary.processing_seconds = seconds_since(run_started);
    summary.video_seconds = static_cast<double>(shape.frames) / cfg.sample_fps;
    summary.rtf = measure_rtf(summary.processing_seconds, summary.video_seconds);
    return summary;
}

RunSummary run_stream(FeatureSource& source, const AnomalyDefinition& definition, const StreamConfig& cfg,
                      backend::Backend& backend, const PipelineOptions& options, const WindowCallback& on_window) {
    return run_stream(source, DefinitionSchedule{{0, definition}}, cfg, backend, options, on_window);
}

double measure_rtf(double processing_seconds, double video_seconds) {
    if (!(video_seconds > 0.0)) {
        throw std::invalid_argument("video duration must be positive");
    }
    return processing_seconds / video_seconds;
}

double mean_rtf(std::span<const double> rtfs) {
    if (rtfs.empty()) {
        throw std::invalid_argument("no streams to average");
    }
    return std::accumulate(rtfs.begin(), rtfs.end(), 0.0) / static_cast<double>(rtfs.size());
}

Category video_category(std::span<const WindowPrediction> predictions) {
    std::map<Category, double> mass;
    for (const auto& p : predictions) {
        if (!p.category.is_normal()) {
            mass[p.category] += p.confidence;
        }
    }
    Category best = Category::normal();
    double best_mass = 0.0;
    for (const auto& [category, m] : mass) {
        if (m > best_mass) {
            best = category;
            best_mass = m;
        }
    }
    return best;
}

}  // namespace streamvad::pipeline

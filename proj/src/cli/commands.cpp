// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamvad/config.hpp"
#include "streamvad/eval.hpp"
#include "streamvad/feature_grid.hpp"
#include "streamvad/iim.hpp"
#include "streamvad/ps.hpp"
#include "streamvad/remote_backend.hpp"
#include "streamvad/scripted_backend.hpp"
#include "streamvad/toy_model.hpp"
#include "streamvad_version.hpp"

namespace streamvad::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out || !(out << text)) {
        throw IoError("cannot write " + path.string());
    }
}

/// Path plus size, enough to tell inputs apart without reading large feature files.
json input_fingerprint(const std::optional<fs::path>& path) {
    if (!path) {
        return nullptr;
    }
    std::error_code ec;
    const auto size = fs::is_regular_file(*path, ec) ? fs::file_size(*path, ec) : 0;
    return {{"path", path->string()}, {"bytes", size}};
}

std::unique_ptr<pipeline::FeatureSource> open_features(const fs::path& path) {
    if (fs::is_directory(path)) {
        return std::make_unique<pipeline::ChunkDirectorySource>(path);
    }
    return std::make_unique<pipeline::EfgFileSource>(path);
}

json window_record_json(const pipeline::WindowRecord& r, const std::string& manifest_id) {
    json intervals = json::array();
    for (const auto& iv : r.prediction.intervals) {
        intervals.push_back({r.plan.start + iv.start, r.plan.start + iv.end});
    }
    ordered_json record;
    record["manifest_id"] = manifest_id;
    record["window_index"] = r.plan.index;
    record["start_frame"] = r.plan.start;
    record["end_frame"] = r.plan.end;
    record["real_frames"] = r.plan.real_frames;
    record["text"] = r.prediction.text;
    record["category"] = r.prediction.category.label();
    record["intervals"] = intervals;
    record["confidence"] = r.prediction.confidence;
    record["failed"] = r.failed;
    if (r.failed) {
        record["failure"] = r.failure;
    }
    record["definition_changed"] = r.definition_changed;
    record["reused"] = r.reused;
    record["rows"] = {{"prefix", r.rows.prefix},         {"reused_visual", r.rows.reused_visual},
                      {"new_visual", r.rows.new_visual}, {"text", r.rows.text},
                      {"generated", r.rows.generated},   {"shift", r.rows.shift}};
    record["seconds"] = {{"compress", r.compress_seconds}, {"model", r.model_seconds}, {"window", r.window_seconds}};
    return record;
}

}  // namespace

std::string version() {
    return STREAMVAD_VERSION_STRING;
}

pipeline::DefinitionSchedule load_definition_file(const fs::path& path) {
    const json j = read_json_file(path);
    const auto one = [](const json& entry) {
        return AnomalyDefinition(entry.value("text", std::string()),
                                 entry.at("categories").get<std::vector<std::string>>());
    };
    pipeline::DefinitionSchedule schedule;
    try {
        if (j.contains("schedule")) {
            for (const auto& entry : j.at("schedule")) {
                schedule.emplace_back(entry.value("from_window", std::size_t{0}), one(entry));
            }
            std::stable_sort(schedule.begin(), schedule.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
        } else {
            schedule.emplace_back(0, one(j));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument("definition file " + path.string() + ": " + e.what());
    }
    if (schedule.empty() || schedule.front().first != 0) {
        throw std::invalid_argument("definition schedule must start at window 0");
    }
    return schedule;
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const StreamConfig cfg = args.config ? load_config_file(args.config->string()) : validate_config(StreamConfig{});
        const auto definitions = load_definition_file(args.definition);
        if (!args.features && !args.scenario) {
            throw std::invalid_argument("run needs --features or --scenario");
        }
        const std::string backend_name = args.backend.empty() ? (args.scenario ? "scripted" : "toy") : args.backend;

        pipeline::PipelineOptions options;
        options.enable_iim = !args.no_iim;
        options.enable_kv_reuse = !args.no_kv_reuse;
        options.enable_long_term_memory = !args.no_memory;
        options.max_new_tokens = args.max_new_tokens;
        options.frame_url_template = args.frame_url_template;
        if (args.normalization == "running_max") {
            options.score_normalization = ps::Normalization::kRunningMax;
        } else if (args.normalization != "fixed_z") {
            throw ConfigError("score_normalization", "expected fixed_z or running_max, got " + args.normalization);
        }
        if (args.definition_mode == "local") {
            options.normalization = pipeline::NormalizationMode::kLocal;
        } else if (args.definition_mode != "model") {
            throw ConfigError("definition_mode", "expected model or local, got " + args.definition_mode);
        }
        if (args.prompts) {
            if (!fs::is_directory(*args.prompts)) {
                throw IoError("prompt directory not found: " + args.prompts->string());
            }
            options.prompts = pipeline::Prompts::load(*args.prompts);
        }

        std::optional<backend::Scenario> scenario;
        if (args.scenario) {
            scenario = backend::load_scenario(*args.scenario);
        }
        std::unique_ptr<pipeline::FeatureSource> source;
        if (args.features) {
            source = open_features(*args.features);
        } else {
            if (scenario->total_frames == 0) {
                throw IoError("scenario header gives no total_frames and no --features was passed");
            }
            GridShape shape = scenario->grid;
            shape.frames = scenario->total_frames;
            source = std::make_unique<pipeline::SyntheticSource>(shape, scenario->seed);
        }

        std::unique_ptr<backend::Backend> model;
        if (backend_name == "scripted") {
            if (!scenario) {
                throw std::invalid_argument("the scripted backend needs --scenario");
            }
            model = std::make_unique<backend::ScriptedBackend>(*scenario);
        } else if (backend_name == "toy") {
            backend::ToyModelConfig toy;
            toy.seed = args.toy_seed;
            model = std::make_unique<backend::ToyModelBackend>(toy);
        } else if (backend_name == "remote") {
            auto remote = backend::RemoteConfig::from_env();
            remote.timeout = std::chrono::milliseconds(args.timeout_ms);
            remote.max_retries = args.max_retries;
            model = std::make_unique<backend::RemoteBackend>(remote);
        } else {
            throw ConfigError("backend", "unknown backend '" + backend_name + "'");
        }

        fs::create_directories(args.out);
        const std::string sample_id =
            !args.sample_id.empty() ? args.sample_id
                                    : (args.features ? args.features->stem().string() : args.scenario->stem().string());

        ordered_json manifest;
        ordered_json identity{{"config", config_to_json(cfg)},
                              {"backend", backend_name},
                              {"inputs",
                               {{"features", input_fingerprint(args.features)},
                                {"scenario", input_fingerprint(args.scenario)},
                                {"definition", input_fingerprint(args.definition)}}},
                              {"options",
                               {{"iim", options.enable_iim},
                                {"kv_reuse", options.enable_kv_reuse},
                                {"long_term_memory", options.enable_long_term_memory},
                                {"score_normalization", args.normalization},
                                {"definition_mode", args.definition_mode},
                                {"max_new_tokens", args.max_new_tokens}}}};
        const std::string manifest_id = hex64(fnv1a(identity.dump()));
        manifest["manifest_id"] = manifest_id;
        manifest["version"] = version();
        manifest["command"] = "run";
        manifest["sample_id"] = sample_id;
        for (const auto& [key, value] : identity.items()) {
            manifest[key] = value;
        }
        manifest["out_dir"] = args.out.string();
        manifest["started_at"] = utc_now();
        manifest["finished_at"] = nullptr;
        manifest["status"] = "running";
        manifest["artifacts"] = {"windows.jsonl", "scores.csv", "prediction.json"};
        write_text_file(args.out / "manifest.json", manifest.dump(2) + "\n");

        std::ofstream windows(args.out / "windows.jsonl", std::ios::trunc);
        if (!windows) {
            throw IoError("cannot write " + (args.out / "windows.jsonl").string());
        }
        const auto summary = pipeline::run_stream(*source, definitions, cfg, *model, options,
                                                  [&](const pipeline::WindowRecord& r) {
                                                      windows << window_record_json(r, manifest_id).dump() << "\n";
                                                  });
        windows.close();

        std::ofstream scores(args.out / "scores.csv", std::ios::trunc);
        if (!scores) {
            throw IoError("cannot write " + (args.out / "scores.csv").string());
        }
        ps::write_scores(scores, summary.scores);
        scores.close();

        const Category predicted = pipeline::video_category(summary.predictions);
        ordered_json prediction;
        prediction["manifest_id"] = manifest_id;
        prediction["sample_id"] = sample_id;
        prediction["category"] = predicted.label();
        prediction["windows"] = summary.windows;
        prediction["failed_windows"] = summary.failed_windows;
        prediction["normalizations"] = summary.normalizations;
        prediction["processing_seconds"] = summary.processing_seconds;
        prediction["video_seconds"] = summary.video_seconds;
        prediction["rtf"] = summary.rtf;
        prediction["notes"] = summary.notes;
        write_text_file(args.out / "prediction.json", prediction.dump(2) + "\n");

        manifest["finished_at"] = utc_now();
        manifest["status"] = "complete";
        write_text_file(args.out / "manifest.json", manifest.dump(2) + "\n");

        out << "windows: " << summary.windows << " (failed " << summary.failed_windows << ")\n"
            << "category: " << predicted.label() << "\n"
            << "max score: " << summary.scores.max() << "\n"
            << "rtf: " << summary.rtf << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error [" << e.invariant() << "]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FeatureError& e) {
        err << "feature error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const backend::BackendError& e) {
        err << "backend error (" << backend::error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    }
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    try {
        eval::Protocol protocol = eval::Protocol::kSingle;
        if (args.protocol == "multi_definition") {
            protocol = eval::Protocol::kMultiDefinition;
        } else if (args.protocol != "single") {
            throw ConfigError("protocol", "expected single or multi_definition, got " + args.protocol);
        }
        const auto samples = eval::load_benchmark(args.benchmark);
        if (samples.empty()) {
            throw IoError("benchmark " + args.benchmark.string() + " holds no samples");
        }
        if (!fs::is_directory(args.runs)) {
            throw IoError("run directory not found: " + args.runs.string());
        }
        std::vector<fs::path> run_dirs;
        if (fs::exists(args.runs / "prediction.json")) {
            run_dirs.push_back(args.runs);
        }
        for (const auto& entry : fs::directory_iterator(args.runs)) {
            if (entry.is_directory() && fs::exists(entry.path() / "prediction.json")) {
                run_dirs.push_back(entry.path());
            }
        }
        std::sort(run_dirs.begin(), run_dirs.end());
        std::map<std::string, eval::RunOutput> outputs;
        for (const auto& dir : run_dirs) {
            const json prediction = read_json_file(dir / "prediction.json");
            std::ifstream scores_in(dir / "scores.csv");
            if (!scores_in) {
                throw IoError("missing scores.csv in " + dir.string());
            }
            eval::RunOutput output;
            output.scores = ScoreSeries(ps::read_scores(scores_in));
            output.predicted = Category::from_label(prediction.at("category").get<std::string>());
            if (prediction.contains("rtf") && prediction.at("rtf").is_number()) {
                output.rtf = prediction.at("rtf").get<double>();
            }
            std::string key = prediction.at("sample_id").get<std::string>();
            if (key.find('#') == std::string::npos) {
                key += "#0";
            }
            outputs[key] = std::move(output);
        }
        const auto report = eval::evaluate(outputs, samples, protocol);
        eval::print_report(out, report);
        if (args.out) {
            fs::create_directories(*args.out);
            write_text_file(*args.out / "report.json", eval::report_to_json(report).dump(2) + "\n");
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error [" << e.invariant() << "]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const eval::EvalError& e) {
        err << "eval error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

int cmd_compress(const CompressArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const StreamConfig cfg = args.config ? load_config_file(args.config->string()) : validate_config(StreamConfig{});
        const FrameFeatureGrid grid = read_efg(args.features);
        const auto compressed = iim::compress_window(grid, 0, cfg);
        const std::size_t hw = grid.rows() * grid.cols();
        out << "frames: " << grid.frames() << "  patches/frame: " << hw << "\n";
        out << "tokens: " << compressed.tokens.size() << " of " << grid.frames() * hw << "\n";
        char line[96];
        std::snprintf(line, sizeof(line), "retained fraction: %.6f\n", compressed.retained_fraction());
        out << line;
        if (args.stats) {
            std::snprintf(line, sizeof(line), "analytic fraction: %.6f\n", iim::token_accounting(cfg));
            out << line;
            std::snprintf(line, sizeof(line), "analytic fraction (floor, %zu patches): %.6f\n", hw,
                          iim::token_accounting(cfg, hw));
            out << line;
        }
        out << "frame role retained\n";
        for (std::size_t f = 0; f < grid.frames(); ++f) {
            out << f << " " << iim::role_letter(compressed.roles[f]) << " " << compressed.retained_per_frame[f] << "\n";
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error [" << e.invariant() << "]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

std::vector<Interval> parse_gt_intervals(const std::string& spec) {
    std::vector<Interval> out;
    if (spec.empty()) {
        return out;
    }
    if (fs::is_regular_file(spec)) {
        for (const auto& iv : read_json_file(spec)) {
            out.push_back(Interval{iv.at(0).get<std::size_t>(), iv.at(1).get<std::size_t>()});
        }
        return out;
    }
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        std::size_t a = 0;
        std::size_t b = 0;
        char dash = 0;
        std::istringstream p(part);
        if (!(p >> a >> dash >> b) || dash != '-' || b < a) {
            throw std::invalid_argument("ground-truth interval '" + part + "' is not start-end");
        }
        out.push_back(Interval{a, b});
    }
    return out;
}

std::string render_svg(const std::vector<double>& scores, const std::vector<Interval>& gt) {
    constexpr double kWidth = 960.0;
    constexpr double kHeight = 320.0;
    constexpr double kMargin = 40.0;
    const double plot_w = kWidth - 2 * kMargin;
    const double plot_h = kHeight - 2 * kMargin;
    const double n = static_cast<double>(std::max<std::size_t>(scores.size(), 2) - 1);
    const auto x = [&](double frame) { return kMargin + plot_w * frame / n; };
    const auto y = [&](double s) { return kMargin + plot_h * (1.0 - s); };

    std::ostringstream svg;
    svg.setf(std::ios::fixed);
    svg.precision(2);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& iv : gt) {
        svg << "<rect class=\"gt\" x=\"" << x(static_cast<double>(iv.start)) << "\" y=\"" << kMargin << "\" width=\""
            << std::max(1.0, x(static_cast<double>(iv.end)) - x(static_cast<double>(iv.start))) << "\" height=\""
            << plot_h << "\" fill=\"#f4b6b6\" fill-opacity=\"0.6\"/>\n";
    }
    svg << "<line x1=\"" << kMargin << "\" y1=\"" << y(0) << "\" x2=\"" << kMargin + plot_w << "\" y2=\"" << y(0)
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << y(0) << "\" x2=\"" << kMargin << "\" y2=\"" << y(1)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kMargin - 6 << "\" y=\"" << y(1) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1</text>\n"
        << "<text x=\"" << kMargin - 6 << "\" y=\"" << y(0) + 4 << "\" font-size=\"11\" text-anchor=\"end\">0</text>\n"
        << "<text x=\"" << kMargin + plot_w << "\" y=\"" << kHeight - 12
        << "\" font-size=\"11\" text-anchor=\"end\">frame " << scores.size() << "</text>\n";
    svg << "<polyline class=\"score\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        svg << (i ? " " : "") << x(static_cast<double>(i)) << "," << y(scores[i]);
    }
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

int cmd_plot(const PlotArgs& args, std::ostream& out, std::ostream& err) {
    try {
        std::ifstream in(args.scores);
        if (!in) {
            throw IoError("cannot open score file: " + args.scores.string());
        }
        const auto scores = ps::read_scores(in);
        const auto gt = parse_gt_intervals(args.gt);
        if (args.out.has_parent_path()) {
            fs::create_directories(args.out.parent_path());
        }
        write_text_file(args.out, render_svg(scores, gt));
        out << "wrote " << args.out.string() << "\n";
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

namespace {

json describe_flags(const CLI::App& app) {
    json options = json::array();
    for (const auto* opt : app.get_options()) {
        options.push_back({{"name", opt->get_name()},
                           {"description", opt->get_description()},
                           {"takes_value", opt->get_items_expected_max() > 0},
                           {"required", opt->get_required()},
                           {"default", opt->get_default_str()}});
    }
    json subcommands = json::array();
    for (const auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        subcommands.push_back(describe_flags(*sub));
    }
    return {{"name", app.get_name()},
            {"description", app.get_description()},
            {"options", options},
            {"subcommands", subcommands}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming open-world video anomaly detection", "streamvad"};
    app.set_version_flag("--version", version());
    app.require_subcommand(0, 1);
    bool flags_json = false;
    app.add_flag("--flags-json", flags_json, "Print every command and flag as JSON and exit");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Process a feature stream window by window");
    run_cmd->add_option("--features", run.features, "EFG1 feature file or directory of .efg chunks");
    run_cmd->add_option("--scenario", run.scenario, "Scripted-backend scenario (JSONL)");
    run_cmd->add_option("--definition", run.definition, "Anomaly definition JSON")->required();
    run_cmd->add_option("--config", run.config, "Stream configuration JSON");
    run_cmd->add_option("--prompts", run.prompts, "Directory overriding system/normalization/memory prompts");
    run_cmd->add_option("--backend", run.backend, "scripted | toy | remote");
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    run_cmd->add_option("--sample-id", run.sample_id, "Identifier recorded for evaluation");
    run_cmd->add_option("--normalization", run.normalization, "fixed_z | running_max")->capture_default_str();
    run_cmd->add_option("--definition-mode", run.definition_mode, "model | local")->capture_default_str();
    run_cmd->add_flag("--no-iim", run.no_iim, "Disable token merging");
    run_cmd->add_flag("--no-kv-reuse", run.no_kv_reuse, "Disable overlap KV reuse");
    run_cmd->add_flag("--no-memory", run.no_memory, "Disable long-term textual memory");
    run_cmd->add_option("--max-new-tokens", run.max_new_tokens, "Decode length cap")->capture_default_str();
    run_cmd->add_option("--toy-seed", run.toy_seed, "Weight seed of the toy model")->capture_default_str();
    run_cmd->add_option("--timeout-ms", run.timeout_ms, "Remote request timeout")->capture_default_str();
    run_cmd->add_option("--max-retries", run.max_retries, "Remote retry cap")->capture_default_str();
    run_cmd->add_option("--frame-url-template", run.frame_url_template,
                        "Remote frame image URL with {frame} placeholder");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score run outputs against a benchmark");
    eval_cmd->add_option("--runs", ev.runs, "Run directory or directory of run directories")->required();
    eval_cmd->add_option("--benchmark", ev.benchmark, "Benchmark triplet file (JSONL)")->required();
    eval_cmd->add_option("--protocol", ev.protocol, "single | multi_definition")->capture_default_str();
    eval_cmd->add_option("--out", ev.out, "Directory for report.json");

    CompressArgs cp;
    auto* compress_cmd = app.add_subcommand("compress", "Run token merging alone and report retention");
    compress_cmd->add_option("--features", cp.features, "EFG1 feature file")->required();
    compress_cmd->add_option("--config", cp.config, "Stream configuration JSON");
    compress_cmd->add_flag("--stats", cp.stats, "Print the analytic retention beside the measured one");

    PlotArgs pl;
    auto* plot_cmd = app.add_subcommand("plot", "Render a score curve as SVG");
    plot_cmd->add_option("--scores", pl.scores, "scores.csv from a run")->required();
    plot_cmd->add_option("--gt", pl.gt, "Ground truth: a-b,c-d or a JSON file of [start, end] pairs");
    plot_cmd->add_option("--out", pl.out, "Output SVG path")->required();

    // --flags-json must work without the required options of any subcommand.
    for (int i = 1; i < argc; ++i) {
        if (std::string_view(argv[i]) == "--flags-json") {
            out << describe_flags(app).dump(2) << "\n";
            return kExitOk;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; anything else is a usage error.
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }
    if (run_cmd->parsed()) {
        return cmd_run(run, out, err);
    }
    if (eval_cmd->parsed()) {
        return cmd_eval(ev, out, err);
    }
    if (compress_cmd->parsed()) {
        return cmd_compress(cp, out, err);
    }
    if (plot_cmd->parsed()) {
        return cmd_plot(pl, out, err);
    }
    out << app.help();
    return kExitOk;
}

}  // namespace streamvad::cli

// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "config_json.hpp"
#include "mtgp/errors.hpp"

namespace mtgp {

using detail::Json;

TuneConfig ExperimentConfig::tune_config() const {
    TuneConfig t;
    t.steps = prompt_steps;
    t.lr = prompt_lr;
    t.tau = tau;
    if (!alpha.empty()) t.mix = LayerMix{alpha};
    t.variant = variant;
    return t;
}

void ExperimentConfig::validate() const {
    if (shots == 0) throw ValidationError("shots must be at least 1");
    if (tasks == 0) throw ValidationError("task count must be at least 1");
    if (seeds == 0) throw ValidationError("seed count must be at least 1");
    if (query_cap == 0) throw ValidationError("query_cap must be at least 1");
    if (workers == 0) throw ValidationError("workers must be at least 1");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("temperature must be positive");
    if (!(prompt_lr > 0.0) || !std::isfinite(prompt_lr)) throw ValidationError("prompt_lr must be positive");
    variant.validate();
    for (const std::string& v : variants) PromptVariant::parse(v);
    for (double a : alpha) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("layer mix weights must be finite and >= 0");
    }
}

namespace {

constexpr const char* kExperimentKeys[] = {
    "data",          "pretrain_data", "checkpoint", "pretrain_first", "task",      "shots",       "tasks",
    "seeds",         "seed",          "query_cap",  "use_tokens",     "use_composed", "use_open", "prompt_steps",
    "prompt_lr",     "tau",           "alpha",      "variants",       "shot_values", "alpha0_values", "workers",
    "pretrain"};

bool is_experiment_key(const std::string& key) {
    for (const char* k : kExperimentKeys) {
        if (key == k) return true;
    }
    return false;
}

Json config_json(const ExperimentConfig& c) {
    return Json{{"data", c.data},
                {"pretrain_data", c.pretrain_data},
                {"checkpoint", c.checkpoint},
                {"pretrain_first", c.pretrain_first},
                {"task", to_string(c.kind)},
                {"shots", c.shots},
                {"tasks", c.tasks},
                {"seeds", c.seeds},
                {"seed", c.seed},
                {"query_cap", c.query_cap},
                {"use_tokens", c.variant.use_tokens},
                {"use_composed", c.variant.use_composed},
                {"use_open", c.variant.use_open},
                {"prompt_steps", c.prompt_steps},
                {"prompt_lr", c.prompt_lr},
                {"tau", c.tau},
                {"alpha", c.alpha},
                {"variants", c.variants},
                {"shot_values", c.shot_values},
                {"alpha0_values", c.alpha0_values},
                {"workers", c.workers},
                {"pretrain", detail::pretrain_config_json(c.pretrain)}};
}

ExperimentConfig config_from(const Json& j, const std::string& where) {
    using detail::field;
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!is_experiment_key(key) && !detail::is_pretrain_key(key)) {
            throw ParseError(where + ": unknown key '" + key + "'");
        }
    }
    ExperimentConfig c;
    detail::read_pretrain_fields(j, c.pretrain, where);
    if (j.contains("data")) c.data = field<std::string>(j, "data", where);
    if (j.contains("pretrain_data")) c.pretrain_data = field<std::string>(j, "pretrain_data", where);
    if (j.contains("checkpoint")) c.checkpoint = field<std::string>(j, "checkpoint", where);
    if (j.contains("pretrain_first")) c.pretrain_first = field<bool>(j, "pretrain_first", where);
    if (j.contains("task")) c.kind = parse_task_kind(field<std::string>(j, "task", where));
    if (j.contains("shots")) c.shots = field<std::size_t>(j, "shots", where);
    if (j.contains("tasks")) c.tasks = field<std::size_t>(j, "tasks", where);
    if (j.contains("seeds")) c.seeds = field<std::size_t>(j, "seeds", where);
    if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", where);
    if (j.contains("query_cap")) c.query_cap = field<std::size_t>(j, "query_cap", where);
    if (j.contains("use_tokens")) c.variant.use_tokens = field<bool>(j, "use_tokens", where);
    if (j.contains("use_composed")) c.variant.use_composed = field<bool>(j, "use_composed", where);
    if (j.contains("use_open")) c.variant.use_open = field<bool>(j, "use_open", where);
    if (j.contains("prompt_steps")) c.prompt_steps = field<std::size_t>(j, "prompt_steps", where);
    if (j.contains("prompt_lr")) c.prompt_lr = field<double>(j, "prompt_lr", where);
    if (j.contains("tau")) c.tau = field<double>(j, "tau", where);
    if (j.contains("alpha")) c.alpha = field<std::vector<double>>(j, "alpha", where);
    if (j.contains("variants")) c.variants = field<std::vector<std::string>>(j, "variants", where);
    if (j.contains("shot_values")) c.shot_values = field<std::vector<std::size_t>>(j, "shot_values", where);
    if (j.contains("alpha0_values")) c.alpha0_values = field<std::vector<double>>(j, "alpha0_values", where);
    if (j.contains("workers")) c.workers = field<std::size_t>(j, "workers", where);
    if (j.contains("pretrain")) detail::read_pretrain_fields(j["pretrain"], c.pretrain, where + ".pretrain");
    return c;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
    ExperimentConfig c = config_from(detail::parse_json(text, "config"), "config");
    c.validate();
    return c;
}

std::string experiment_config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

std::uint64_t task_seed(std::uint64_t base, std::size_t task_index, std::size_t seed_index) {
    return derive_seed(base, {0x7461736bULL, task_index, seed_index});
}

Report run_experiment(const ExperimentConfig& config, const Checkpoint& cp, const Dataset& downstream) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    downstream.validate();
    check_compatible(cp, downstream.feature_dim);
    const DownstreamData data = DownstreamData::build(downstream, config.kind);
    const std::vector<ClassId> labels = task_labels(downstream, config.kind);
    const TuneConfig tune = config.tune_config();

    Report report;
    report.label = config.variant.name();
    report.config = config;
    report.results.resize(config.tasks * config.seeds);

    // Fail on infeasible m before spawning any work.
    sample_few_shot_task(labels, config.kind, config.shots, task_seed(config.seed, 0, 0), config.query_cap);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < report.results.size(); i = next++) {
            try {
                TaskResult& r = report.results[i];
                r.task_index = i / config.seeds;
                r.seed_index = i % config.seeds;
                const FewShotTask task = sample_few_shot_task(
                    labels, config.kind, config.shots, task_seed(config.seed, r.task_index, r.seed_index),
                    config.query_cap);
                const TuneResult tuned = prompt_tune(cp, data, task, tune);
                const TaskEvaluation ev = evaluate_task(cp, data, task, tuned.state, tune);
                r.split_hash = task.split_hash();
                r.query_size = task.query.size();
                r.accuracy = ev.accuracy;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = report.results.size();
            }
        }
    };
    if (config.workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < config.workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    double sum = 0.0;
    for (const TaskResult& r : report.results) sum += r.accuracy;
    report.mean = sum / static_cast<double>(report.results.size());
    double sq = 0.0;
    for (const TaskResult& r : report.results) sq += (r.accuracy - report.mean) * (r.accuracy - report.mean);
    report.std = std::sqrt(sq / static_cast<double>(report.results.size()));

    const std::size_t k = cp.has_tokens() ? cp.tokens.size() : cp.config.num_tasks();
    report.tunable_parameters =
        tunable_parameter_count(PromptState::initial(cp.weights.dims(), k), config.variant);
    report.encoder_parameters = cp.weights.parameter_count();
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

Checkpoint resolve_checkpoint(const ExperimentConfig& config) {
    if (config.checkpoint.empty()) throw ValidationError("no checkpoint path configured");
    if (std::filesystem::exists(config.checkpoint)) return load_checkpoint(config.checkpoint);
    if (!config.pretrain_first) throw Error("checkpoint '" + config.checkpoint + "' does not exist");
    const std::string source = config.pretrain_data.empty() ? config.data : config.pretrain_data;
    Checkpoint cp = pretrain(load_dataset(source), config.pretrain);
    save_checkpoint(cp, config.checkpoint);
    return cp;
}

Report run_experiment(const ExperimentConfig& config) {
    const Checkpoint cp = resolve_checkpoint(config);
    return run_experiment(config, cp, load_dataset(config.data));
}

std::map<std::string, Report> run_ablation(const ExperimentConfig& config, const Checkpoint& cp,
                                           const Dataset& downstream, const Checkpoint* plain) {
    std::map<std::string, Report> out;
    const Report* reference = nullptr;
    for (const std::string& name : config.variants) {
        ExperimentConfig c = config;
        c.variant = PromptVariant::parse(name);
        const Checkpoint& used = (!c.variant.use_tokens && plain != nullptr) ? *plain : cp;
        Report r = run_experiment(c, used, downstream);
        r.label = name;
        auto [it, inserted] = out.emplace(name, std::move(r));
        if (!inserted) throw ValidationError("variant '" + name + "' listed twice");
        if (reference == nullptr) {
            reference = &it->second;
            continue;
        }
        for (std::size_t i = 0; i < reference->results.size(); ++i) {
            if (reference->results[i].split_hash != it->second.results[i].split_hash) {
                throw Error("variant " + name + " saw a different split for task " + std::to_string(i));
            }
        }
    }
    return out;
}

SweepParam parse_sweep_param(const std::string& text) {
    if (text == "shots") return SweepParam::Shots;
    if (text == "alpha0") return SweepParam::Alpha0;
    throw ParseError("sweep parameter must be 'shots' or 'alpha0', got '" + text + "'");
}

std::vector<Report> run_sweep(const ExperimentConfig& config, const Checkpoint& cp, const Dataset& downstream,
                              SweepParam param, const std::vector<double>& values) {
    std::vector<Report> out;
    for (double v : values) {
        ExperimentConfig c = config;
        std::ostringstream label;
        if (param == SweepParam::Shots) {
            if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError("shot values must be positive integers");
            c.shots = static_cast<std::size_t>(v);
            label << "shots=" << c.shots;
        } else {
            if (c.alpha.empty()) c.alpha = cp.config.mix.alpha;
            c.alpha[0] = v;
            label << "alpha0=" << v;
        }
        Report r = run_experiment(c, cp, downstream);
        r.label = label.str();
        out.push_back(std::move(r));
    }
    return out;
}

ReportFormat parse_report_format(const std::string& text) {
    if (text == "json") return ReportFormat::Json;
    if (text == "csv") return ReportFormat::Csv;
    if (text == "markdown" || text == "md") return ReportFormat::Markdown;
    throw ParseError("report format must be json, csv or markdown, got '" + text + "'");
}

ReportFormat report_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return ReportFormat::Csv;
    if (ext == ".md") return ReportFormat::Markdown;
    return ReportFormat::Json;
}

std::string format_accuracy(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean * 100.0, std * 100.0);
    return buf;
}

namespace {

Json report_json(const Report& r, bool include_timing) {
    Json results = Json::array();
    for (const TaskResult& t : r.results) {
        results.push_back(Json{{"task", t.task_index},
                               {"seed", t.seed_index},
                               {"split_hash", t.split_hash},
                               {"query_size", t.query_size},
                               {"accuracy", t.accuracy}});
    }
    Json j{{"label", r.label},
           {"config", config_json(r.config)},
           {"count", r.results.size()},
           {"mean", r.mean},
           {"std", r.std},
           {"tunable_parameters", r.tunable_parameters},
           {"encoder_parameters", r.encoder_parameters},
           {"results", results}};
    if (include_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

Report report_from(const Json& j, const std::string& where) {
    using detail::field;
    Report r;
    r.label = field<std::string>(j, "label", where);
    if (!j.contains("config")) throw ParseError(where + ".config: missing");
    r.config = config_from(j["config"], where + ".config");
    r.mean = field<double>(j, "mean", where);
    r.std = field<double>(j, "std", where);
    r.tunable_parameters = field<std::size_t>(j, "tunable_parameters", where);
    r.encoder_parameters = field<std::size_t>(j, "encoder_parameters", where);
    if (j.contains("wall_clock_seconds")) r.wall_clock_seconds = field<double>(j, "wall_clock_seconds", where);
    if (!j.contains("results") || !j["results"].is_array()) throw ParseError(where + ".results: expected an array");
    for (std::size_t i = 0; i < j["results"].size(); ++i) {
        const Json& t = j["results"][i];
        const std::string w = where + ".results[" + std::to_string(i) + "]";
        r.results.push_back({field<std::size_t>(t, "task", w), field<std::size_t>(t, "seed", w),
                             field<std::uint64_t>(t, "split_hash", w), field<std::size_t>(t, "query_size", w),
                             field<double>(t, "accuracy", w)});
    }
    return r;
}

}  // namespace

std::string format_reports(const std::vector<Report>& reports, ReportFormat format, bool include_timing) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Json: {
            Json list = Json::array();
            for (const Report& r : reports) list.push_back(report_json(r, include_timing));
            Json j{{"format", Report::kFormat}, {"version", Report::kVersion}, {"reports", list}};
            out << j.dump(1) << '\n';
            break;
        }
        case ReportFormat::Csv: {
            out << "label,task_index,seed_index,split_hash,query_size,accuracy\n";
            char buf[32];
            for (const Report& r : reports) {
                for (const TaskResult& t : r.results) {
                    std::snprintf(buf, sizeof buf, "%.17g", t.accuracy);
                    out << r.label << ',' << t.task_index << ',' << t.seed_index << ',' << t.split_hash << ','
                        << t.query_size << ',' << buf << '\n';
                }
            }
            break;
        }
        case ReportFormat::Markdown: {
            out << "| Setting | Task | Shots | Episodes | Accuracy (%) | Tunable params |";
            if (include_timing) out << " Time (s) |";
            out << "\n|---|---|---|---|---|---|";
            if (include_timing) out << "---|";
            out << '\n';
            for (const Report& r : reports) {
                out << "| " << r.label << " | " << to_string(r.config.kind) << " | " << r.config.shots << " | "
                    << r.results.size() << " | " << format_accuracy(r.mean, r.std) << " | " << r.tunable_parameters
                    << " |";
                if (include_timing) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "%.1f", r.wall_clock_seconds);
                    out << ' ' << buf << " |";
                }
                out << '\n';
            }
            break;
        }
    }
    return out.str();
}

void emit_report(const std::vector<Report>& reports, const std::filesystem::path& path, ReportFormat format,
                 bool include_timing) {
    write_text_file(path, format_reports(reports, format, include_timing));
}

std::vector<Report> reports_from_json(const std::string& text) {
    const Json j = detail::parse_json(text, "report");
    if (!j.is_object() || detail::field<std::string>(j, "format", "report") != Report::kFormat) {
        throw ParseError("report: not a report file");
    }
    if (detail::field<int>(j, "version", "report") != Report::kVersion) {
        throw CompatibilityError("report version is not supported");
    }
    if (!j.contains("reports") || !j["reports"].is_array()) throw ParseError("report.reports: expected an array");
    std::vector<Report> out;
    for (std::size_t i = 0; i < j["reports"].size(); ++i) {
        out.push_back(report_from(j["reports"][i], "report.reports[" + std::to_string(i) + "]"));
    }
    return out;
}

}  // namespace mtgp

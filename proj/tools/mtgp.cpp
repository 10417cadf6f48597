// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// mtgp: pre-train, adapt and evaluate multi-task graph prompts.

#include <CLI11.hpp>
#include <chrono>
#include <climits>
#include <cstdio>
#include <iostream>
#include <sstream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "mtgp/audit.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/experiment.hpp"
#include "mtgp/pretrain.hpp"

namespace {

using namespace mtgp;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    for (const std::string& s : split_list(text)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size()) throw ParseError("not a number: '" + s + "'");
        out.push_back(v);
    }
    return out;
}

/// Options shared by the adaptation subcommands.
struct AdaptOptions {
    std::string config_path;
    std::string ckpt;
    std::string data;
    std::string pretrain_data;
    std::string task;
    std::string format;
    std::string out;
    std::size_t shots = 0;
    std::size_t tasks = 0;
    std::size_t seeds = 0;
    std::size_t workers = 0;
    std::size_t steps = SIZE_MAX;
    bool pretrain_first = false;
    bool timing = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "Flat JSON config file");
        app->add_option("--ckpt", ckpt, "Checkpoint path");
        app->add_option("--data", data, "Downstream dataset (JSON)");
        app->add_option("--pretrain-data", pretrain_data, "Dataset used when pre-training first");
        app->add_option("--task", task, "node or graph");
        app->add_option("--shots", shots, "Labeled instances per class");
        app->add_option("--tasks", tasks, "Sampled tasks");
        app->add_option("--seeds", seeds, "Seeds per task");
        app->add_option("--workers", workers, "Worker threads");
        app->add_option("--steps", steps, "Prompt-tuning steps");
        app->add_option("--out", out, "Report path")->required();
        app->add_option("--format", format, "json, csv or markdown (default: from extension)");
        app->add_flag("--pretrain-first", pretrain_first, "Pre-train when the checkpoint is missing");
        app->add_flag("--timing", timing, "Include wall-clock time in the report");
    }

    ExperimentConfig config() const {
        ExperimentConfig c;
        if (!config_path.empty()) c = experiment_config_from_json(read_text_file(config_path));
        if (!ckpt.empty()) c.checkpoint = ckpt;
        if (!data.empty()) c.data = data;
        if (!pretrain_data.empty()) c.pretrain_data = pretrain_data;
        if (!task.empty()) c.kind = parse_task_kind(task);
        if (shots != 0) c.shots = shots;
        if (tasks != 0) c.tasks = tasks;
        if (seeds != 0) c.seeds = seeds;
        if (workers != 0) c.workers = workers;
        if (steps != SIZE_MAX) c.prompt_steps = steps;
        if (pretrain_first) c.pretrain_first = true;
        if (c.data.empty()) throw ValidationError("no downstream dataset (--data)");
        c.validate();
        return c;
    }

    ReportFormat report_format() const { return format.empty() ? report_format_for(out) : parse_report_format(format); }
};

void print_summary(const std::vector<Report>& reports) {
    for (const Report& r : reports) {
        std::fprintf(stderr, "%-12s %s  (%zu episodes, %zu tunable / %zu encoder parameters, %.1fs)\n",
                     r.label.c_str(), format_accuracy(r.mean, r.std).c_str(), r.results.size(), r.tunable_parameters,
                     r.encoder_parameters, r.wall_clock_seconds);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Multi-task graph prompt pre-training and few-shot adaptation"};
    app.require_subcommand(1);

    auto* pre = app.add_subcommand("pretrain", "Pre-train an encoder and pretext tokens");
    std::string pre_data, pre_out, pre_config;
    std::size_t pre_epochs = 0;
    pre->add_option("--data", pre_data, "Dataset (JSON)")->required();
    pre->add_option("--out", pre_out, "Checkpoint path")->required();
    pre->add_option("--config", pre_config, "Flat JSON config file");
    pre->add_option("--epochs", pre_epochs, "Override the configured epoch count");

    AdaptOptions adapt_opts;
    auto* adapt = app.add_subcommand("adapt", "Prompt-tune and evaluate on sampled few-shot tasks");
    adapt_opts.attach(adapt);
    std::string variant = "full";
    adapt->add_option("--variant", variant, "1, 2, 3, 4, 5 or full");

    AdaptOptions ablate_opts;
    auto* ablate = app.add_subcommand("ablate", "Compare prompt variants on identical splits");
    ablate_opts.attach(ablate);
    std::string variants;
    std::string plain_ckpt;
    ablate->add_option("--variants", variants, "Comma-separated variants");
    ablate->add_option("--plain-ckpt", plain_ckpt, "Checkpoint trained without tokens, for variants 1 and 2");

    AdaptOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Sweep shots or the input-layer mix weight");
    sweep_opts.attach(sweep);
    std::string sweep_param, sweep_values;
    sweep->add_option("--param", sweep_param, "shots or alpha0")->required();
    sweep->add_option("--values", sweep_values, "Comma-separated values (default: from config)");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference audit of all gradients");
    std::size_t gc_trials = 20;
    std::uint64_t gc_seed = 0;
    gc->add_option("--trials", gc_trials, "Trials per case");
    gc->add_option("--seed", gc_seed, "Base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*pre) {
        PretrainConfig config;
        if (!pre_config.empty()) config = experiment_config_from_json(read_text_file(pre_config)).pretrain;
        if (pre_epochs != 0) config.epochs = pre_epochs;
        const Dataset dataset = load_dataset(pre_data);
        const auto start = std::chrono::steady_clock::now();
        const Checkpoint cp = pretrain(dataset, config);
        save_checkpoint(cp, pre_out);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto& last = cp.history.back();
        std::fprintf(stderr, "pretrained %zu epochs in %.1fs, final loss %.6f\n", cp.history.size(), secs, last.total);
        return 0;
    }
    if (*adapt) {
        ExperimentConfig config = adapt_opts.config();
        config.variant = PromptVariant::parse(variant);
        const Report report = run_experiment(config);
        emit_report({report}, adapt_opts.out, adapt_opts.report_format(), adapt_opts.timing);
        print_summary({report});
        return 0;
    }
    if (*ablate) {
        ExperimentConfig config = ablate_opts.config();
        if (!variants.empty()) config.variants = split_list(variants);
        config.validate();
        const Checkpoint cp = resolve_checkpoint(config);
        std::optional<Checkpoint> plain;
        if (!plain_ckpt.empty()) plain = load_checkpoint(plain_ckpt);
        const auto reports = run_ablation(config, cp, load_dataset(config.data), plain ? &*plain : nullptr);
        std::vector<Report> ordered;
        for (const std::string& v : config.variants) ordered.push_back(reports.at(v));
        emit_report(ordered, ablate_opts.out, ablate_opts.report_format(), ablate_opts.timing);
        print_summary(ordered);
        return 0;
    }
    if (*sweep) {
        ExperimentConfig config = sweep_opts.config();
        const SweepParam param = parse_sweep_param(sweep_param);
        std::vector<double> values = parse_numbers(sweep_values);
        if (values.empty()) {
            if (param == SweepParam::Shots) {
                values.assign(config.shot_values.begin(), config.shot_values.end());
            } else {
                values = config.alpha0_values;
            }
        }
        const Checkpoint cp = resolve_checkpoint(config);
        const auto reports = run_sweep(config, cp, load_dataset(config.data), param, values);
        emit_report(reports, sweep_opts.out, sweep_opts.report_format(), sweep_opts.timing);
        print_summary(reports);
        return 0;
    }
    if (*gc) {
        bool ok = true;
        for (const AuditEntry& e : gradient_audit(gc_trials, gc_seed)) {
            std::printf("%-20s trials=%zu max_rel_error=%.3e %s\n", e.name.c_str(), e.trials, e.max_rel_error,
                        e.passed ? "ok" : "FAIL");
            ok = ok && e.passed;
        }
        return ok ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
    // Keep large activation buffers on the heap instead of mmap/munmap per step.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, INT_MAX);
#endif
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mtgp: error: %s\n", e.what());
        return 2;
    }
}

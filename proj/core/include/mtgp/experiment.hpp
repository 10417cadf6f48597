// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Few-shot evaluation protocol: repeated tasks, ablation variants, sweeps
// and report emission.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtgp/fewshot.hpp"
#include "mtgp/pretrain.hpp"
#include "mtgp/prompt.hpp"

namespace mtgp {

struct ExperimentConfig {
    std::string data;           // downstream dataset
    std::string pretrain_data;  // pre-training dataset; `data` when empty
    std::string checkpoint;
    bool pretrain_first = false;
    TaskKind kind = TaskKind::Node;
    std::size_t shots = 1;
    std::size_t tasks = 100;
    std::size_t seeds = 5;
    std::uint64_t seed = 0;
    std::size_t query_cap = kDefaultQueryCap;
    PromptVariant variant;
    std::size_t prompt_steps = 200;
    double prompt_lr = 1e-2;
    double tau = 0.5;
    /// Layer mix for adaptation; the checkpoint's when empty.
    std::vector<double> alpha;
    std::vector<std::string> variants{"1", "2", "3", "4", "5", "full"};
    std::vector<std::size_t> shot_values{1, 2, 3, 4, 5};
    std::vector<double> alpha0_values{0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0};
    std::size_t workers = 1;
    PretrainConfig pretrain;

    TuneConfig tune_config() const;
    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Flat JSON object with experiment and pre-training keys. Unknown keys are errors.
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);

struct TaskResult {
    std::size_t task_index = 0;
    std::size_t seed_index = 0;
    std::uint64_t split_hash = 0;
    std::size_t query_size = 0;
    double accuracy = 0.0;
    friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

struct Report {
    static constexpr const char* kFormat = "mtgp-report";
    static constexpr int kVersion = 1;

    std::string label;  // variant name or sweep point
    ExperimentConfig config;
    std::vector<TaskResult> results;  // sorted by (task_index, seed_index)
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t tunable_parameters = 0;
    std::size_t encoder_parameters = 0;
    double wall_clock_seconds = 0.0;

    friend bool operator==(const Report&, const Report&) = default;
};

/// Seed of the few-shot split for (task index, seed index).
std::uint64_t task_seed(std::uint64_t base, std::size_t task_index, std::size_t seed_index);

/// tasks x seeds episodes: sample, tune, classify the query set.
Report run_experiment(const ExperimentConfig& config, const Checkpoint& cp, const Dataset& downstream);

/// Resolves the checkpoint (pre-training first when asked) and datasets from
/// the paths in `config`.
Report run_experiment(const ExperimentConfig& config);
Checkpoint resolve_checkpoint(const ExperimentConfig& config);

/// One report per variant on identical splits. Variants without tokens use
/// `plain` when given. Throws Error if split hashes ever differ.
std::map<std::string, Report> run_ablation(const ExperimentConfig& config, const Checkpoint& cp,
                                           const Dataset& downstream, const Checkpoint* plain = nullptr);

enum class SweepParam { Shots, Alpha0 };
SweepParam parse_sweep_param(const std::string& text);
/// One report per value; alpha0 replaces the adaptation mix's first weight.
std::vector<Report> run_sweep(const ExperimentConfig& config, const Checkpoint& cp, const Dataset& downstream,
                              SweepParam param, const std::vector<double>& values);

enum class ReportFormat { Json, Csv, Markdown };
ReportFormat parse_report_format(const std::string& text);
/// Infers the format from the extension (.json, .csv, .md); JSON otherwise.
ReportFormat report_format_for(const std::filesystem::path& path);

/// Timing is left out unless asked for, so reruns produce identical bytes.
std::string format_reports(const std::vector<Report>& reports, ReportFormat format, bool include_timing = false);
void emit_report(const std::vector<Report>& reports, const std::filesystem::path& path, ReportFormat format,
                 bool include_timing = false);
std::vector<Report> reports_from_json(const std::string& text);

/// "57.72 ± 9.94" from fractions.
std::string format_accuracy(double mean, double std);

}  // namespace mtgp

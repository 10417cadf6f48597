// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/experiment.hpp"

using namespace mtgp;
using mtgp::testing::graph_collection;
using mtgp::testing::planted_partition;

namespace {

const Dataset& node_data() {
    static const Dataset d = planted_partition(80, 4, 16, 4, 3);
    return d;
}

const Checkpoint& node_checkpoint() {
    static const Checkpoint cp = [] {
        PretrainConfig c;
        c.hidden = {8};
        c.epochs = 20;
        c.lr = 1e-2;
        c.lp_tuples = 16;
        return pretrain(node_data(), c);
    }();
    return cp;
}

ExperimentConfig small_experiment() {
    ExperimentConfig c;
    c.tasks = 3;
    c.seeds = 2;
    c.prompt_steps = 15;
    return c;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

}  // namespace

TEST_CASE("experiment config JSON") {
    ExperimentConfig c;
    c.data = "a.json";
    c.kind = TaskKind::Graph;
    c.shots = 5;
    c.variant = PromptVariant::parse("4");
    c.alpha = {1.0, 0.5};
    c.pretrain.epochs = 7;
    c.pretrain.train_tokens = false;
    CHECK(experiment_config_from_json(experiment_config_to_json(c)) == c);

    // flat keys: shared ones set both sides, pretraining ones reach the nested config
    const ExperimentConfig f = experiment_config_from_json(
        R"({"seed": 4, "tau": 0.2, "alpha": [0.5, 1.0], "epochs": 12, "hidden": [32], "train_tokens": false,
            "task": "graph", "shots": 3})");
    CHECK(f.seed == 4);
    CHECK(f.pretrain.seed == 4);
    CHECK(f.tau == 0.2);
    CHECK(f.pretrain.tau == 0.2);
    CHECK(f.alpha == std::vector<double>{0.5, 1.0});
    CHECK(f.pretrain.mix.alpha == std::vector<double>{0.5, 1.0});
    CHECK(f.pretrain.epochs == 12);
    CHECK(f.pretrain.hidden == std::vector<std::size_t>{32});
    CHECK_FALSE(f.pretrain.train_tokens);
    CHECK(f.kind == TaskKind::Graph);

    CHECK_THROWS_AS(experiment_config_from_json(R"({"shotz": 1})"), ParseError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"tasks": 0})"), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"use_tokens": false, "use_composed": true})"), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"task": "edge"})"), ParseError);
}

TEST_CASE("task seeds give distinct splits") {
    std::set<std::uint64_t> seeds;
    for (std::size_t t = 0; t < 100; ++t)
        for (std::size_t s = 0; s < 5; ++s) seeds.insert(task_seed(0, t, s));
    CHECK(seeds.size() == 500);
    CHECK(task_seed(0, 1, 2) == task_seed(0, 1, 2));
    CHECK(task_seed(1, 1, 2) != task_seed(0, 1, 2));
}

TEST_CASE("run_experiment bookkeeping") {
    ExperimentConfig c = small_experiment();
    c.tasks = 2;
    c.seeds = 1;
    const Report r = run_experiment(c, node_checkpoint(), node_data());
    REQUIRE(r.results.size() == 2);
    CHECK(r.results[0].task_index == 0);
    CHECK(r.results[1].task_index == 1);
    double sum = 0.0;
    for (const TaskResult& t : r.results) {
        CHECK(t.accuracy >= 0.0);
        CHECK(t.accuracy <= 1.0);
        CHECK(t.query_size == 80 - 4);
        sum += t.accuracy;
    }
    const double mean = sum / 2.0;
    CHECK(r.mean == doctest::Approx(mean).epsilon(1e-15));
    CHECK(r.std == doctest::Approx(std::abs(r.results[0].accuracy - mean)).epsilon(1e-12));
    CHECK(r.label == "full");
    CHECK(r.tunable_parameters == 2 * 3 + 16 + 8 + 2);
    CHECK(r.encoder_parameters == 16 * 8);
}

TEST_CASE("reports are reproducible and independent of the worker count") {
    ExperimentConfig c = small_experiment();
    const Report a = run_experiment(c, node_checkpoint(), node_data());
    const Report b = run_experiment(c, node_checkpoint(), node_data());
    c.workers = 3;
    const Report p = run_experiment(c, node_checkpoint(), node_data());
    for (ReportFormat f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown}) {
        CHECK(format_reports({a}, f) == format_reports({b}, f));
        CHECK(format_reports({a}, f) == format_reports({[&] {
                  Report q = p;
                  q.config.workers = 1;
                  return q;
              }()}, f));
    }
    CHECK(a.results == p.results);
}

TEST_CASE("infeasible shot counts list the feasible range") {
    ExperimentConfig c = small_experiment();
    c.shots = 20;
    try {
        run_experiment(c, node_checkpoint(), node_data());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("feasible m <= 19") != std::string::npos);
    }
}

TEST_CASE("incompatible checkpoints are rejected") {
    const Dataset other = planted_partition(40, 2, 6, 3, 1);
    CHECK_THROWS_AS(run_experiment(small_experiment(), node_checkpoint(), other), CompatibilityError);
}

TEST_CASE("ablation shares splits across variants") {
    ExperimentConfig c = small_experiment();
    c.variants = {"1", "2", "3", "4", "5", "full"};
    const auto reports = run_ablation(c, node_checkpoint(), node_data());
    REQUIRE(reports.size() == 6);
    const Report& full = reports.at("full");
    for (const auto& [name, r] : reports) {
        CHECK(r.label == name);
        for (std::size_t i = 0; i < r.results.size(); ++i) CHECK(r.results[i].split_hash == full.results[i].split_hash);
    }
    CHECK(reports.at("1").tunable_parameters == 0);
    CHECK(reports.at("3").tunable_parameters == 0);
    CHECK(reports.at("5").tunable_parameters == 2 * 3 + 1);

    // identical seeds and splits even for different variants, different across tasks
    std::set<std::uint64_t> hashes;
    for (const TaskResult& t : full.results) hashes.insert(t.split_hash);
    CHECK(hashes.size() == full.results.size());

    c.variants = {"full", "full"};
    CHECK_THROWS_AS(run_ablation(c, node_checkpoint(), node_data()), ValidationError);
}

TEST_CASE("variants without tokens can use a plain checkpoint") {
    PretrainConfig pc = node_checkpoint().config;
    pc.train_tokens = false;
    const Checkpoint plain = pretrain(node_data(), pc);
    ExperimentConfig c = small_experiment();
    c.variants = {"1", "full"};
    CHECK_NOTHROW(run_ablation(c, node_checkpoint(), node_data(), &plain));
    c.variants = {"3"};
    CHECK_THROWS_AS(run_ablation(c, plain, node_data()), CompatibilityError);
}

TEST_CASE("sweeps") {
    ExperimentConfig c = small_experiment();
    c.seeds = 1;
    const auto shots = run_sweep(c, node_checkpoint(), node_data(), SweepParam::Shots, {1, 2, 3});
    REQUIRE(shots.size() == 3);
    CHECK(shots[1].label == "shots=2");
    CHECK(shots[2].config.shots == 3);
    const auto alpha = run_sweep(c, node_checkpoint(), node_data(), SweepParam::Alpha0, {0.0, 0.1});
    CHECK(alpha[0].label == "alpha0=0");
    CHECK(alpha[1].config.alpha == std::vector<double>{0.1, 1.0});
    CHECK_THROWS_AS(run_sweep(c, node_checkpoint(), node_data(), SweepParam::Shots, {1.5}), ValidationError);
    CHECK(parse_sweep_param("alpha0") == SweepParam::Alpha0);
    CHECK_THROWS_AS(parse_sweep_param("lr"), ParseError);
}

TEST_CASE("graph classification experiments") {
    const Dataset d = graph_collection(30, 3, 4, 2);
    PretrainConfig pc;
    pc.hidden = {8};
    pc.epochs = 5;
    pc.lp_tuples = 16;
    const Checkpoint cp = pretrain(d, pc);
    ExperimentConfig c = small_experiment();
    c.kind = TaskKind::Graph;
    c.shots = 2;
    const Report r = run_experiment(c, cp, d);
    CHECK(r.results.size() == 6);
    CHECK(r.results[0].query_size == 30 - 3 * 2);
}

TEST_CASE("report emission") {
    const Report r = run_experiment(small_experiment(), node_checkpoint(), node_data());

    SUBCASE("JSON round trip") {
        const auto back = reports_from_json(format_reports({r}, ReportFormat::Json));
        REQUIRE(back.size() == 1);
        Report expected = r;
        expected.wall_clock_seconds = 0.0;
        CHECK(back[0] == expected);
        const auto timed = reports_from_json(format_reports({r}, ReportFormat::Json, true));
        CHECK(timed[0] == r);
    }
    SUBCASE("CSV has one row per episode") {
        const std::string csv = format_reports({r}, ReportFormat::Csv);
        CHECK(count_lines(csv) == 3 * 2 + 1);
        CHECK(csv.rfind("label,task_index,seed_index,split_hash,query_size,accuracy\n", 0) == 0);
    }
    SUBCASE("markdown table") {
        const std::string md = format_reports({r}, ReportFormat::Markdown);
        CHECK(md.find(format_accuracy(r.mean, r.std)) != std::string::npos);
        CHECK(count_lines(md) == 3);
    }
    SUBCASE("files") {
        const auto path = std::filesystem::temp_directory_path() / "mtgp_test_report.csv";
        emit_report({r}, path, report_format_for(path));
        CHECK(read_text_file(path) == format_reports({r}, ReportFormat::Csv));
        std::filesystem::remove(path);
        CHECK_THROWS_AS(emit_report({r}, "/nonexistent-dir/x/report.json", ReportFormat::Json), Error);
    }
}

TEST_CASE("accuracy formatting") {
    CHECK(format_accuracy(0.5772, 0.0994) == "57.72 ± 9.94");
    CHECK(format_accuracy(1.0, 0.0) == "100.00 ± 0.00");
    CHECK(report_format_for("x.md") == ReportFormat::Markdown);
    CHECK(report_format_for("x.csv") == ReportFormat::Csv);
    CHECK(report_format_for("x.out") == ReportFormat::Json);
    CHECK(parse_report_format("markdown") == ReportFormat::Markdown);
    CHECK_THROWS_AS(parse_report_format("xml"), ParseError);
}

TEST_CASE("checkpoint resolution") {
    const auto dir = std::filesystem::temp_directory_path() / "mtgp_test_resolve";
    std::filesystem::create_directories(dir);
    const auto data = dir / "data.json";
    save_dataset(planted_partition(30, 2, 6, 3, 4), data);
    ExperimentConfig c = small_experiment();
    c.data = data.string();
    c.checkpoint = (dir / "ckpt.json").string();
    std::filesystem::remove(c.checkpoint);
    c.pretrain.epochs = 2;
    c.pretrain.hidden = {4};
    CHECK_THROWS_AS(resolve_checkpoint(c), Error);
    c.pretrain_first = true;
    const Checkpoint cp = resolve_checkpoint(c);
    CHECK(std::filesystem::exists(c.checkpoint));
    CHECK(load_checkpoint(c.checkpoint) == cp);
    c.tasks = 1;
    c.seeds = 1;
    CHECK(run_experiment(c).results.size() == 1);
    std::filesystem::remove_all(dir);
}

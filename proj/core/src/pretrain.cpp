// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/pretrain.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "config_json.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/ops.hpp"
#include "mtgp/optim.hpp"

namespace mtgp {

using ad::Var;
using detail::Json;

void PretrainConfig::validate() const {
    if (tasks.empty()) throw ValidationError("pretraining needs at least one pretext task");
    if (betas.size() != tasks.size()) {
        throw ValidationError("pretraining has " + std::to_string(tasks.size()) + " tasks but " +
                              std::to_string(betas.size()) + " loss weights");
    }
    bool positive = false;
    for (double b : betas) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("loss weights must be finite and >= 0");
        positive = positive || b > 0.0;
    }
    if (!positive) throw ValidationError("at least one loss weight must be positive");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (std::size_t j = i + 1; j < tasks.size(); ++j) {
            if (tasks[i] == tasks[j]) throw ValidationError("pretext task '" + to_string(tasks[i]) + "' listed twice");
        }
    }
    if (hidden.empty()) throw ValidationError("encoder needs at least one hidden layer");
    for (std::size_t d : hidden) {
        if (d == 0) throw ValidationError("hidden dimensions must be positive");
    }
    mix.validate(hidden.size());
    if (epochs == 0) throw ValidationError("epochs must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("temperature must be positive");
    if (!(drop_ratio >= 0.0 && drop_ratio <= 1.0)) throw ValidationError("edge-drop ratio must lie in [0, 1]");
    if (lp_tuples == 0) throw ValidationError("lp_tuples must be at least 1");
    if (graphcl_batch < 2) throw ValidationError("graphcl_batch must be at least 2");
}

DatasetFingerprint DatasetFingerprint::of(const Dataset& dataset) {
    return {dataset.feature_dim, dataset.graphs.size(), dataset.total_nodes()};
}

std::vector<double> Checkpoint::final_losses() const {
    return history.empty() ? std::vector<double>{} : history.back().per_task;
}

void Checkpoint::validate() const {
    config.validate();
    weights.validate();
    const auto dims = weights.dims();
    if (dims.front() != fingerprint.feature_dim) {
        throw ValidationError("checkpoint encoder expects " + std::to_string(dims.front()) +
                              " features, fingerprint says " + std::to_string(fingerprint.feature_dim));
    }
    if (weights.num_layers() != config.hidden.size()) {
        throw ValidationError("checkpoint encoder depth does not match its config");
    }
    if (!tokens.empty() && tokens.size() != config.num_tasks()) {
        throw ValidationError("checkpoint has " + std::to_string(tokens.size()) + " token sets for " +
                              std::to_string(config.num_tasks()) + " tasks");
    }
    for (const TokenSet& t : tokens) t.validate(dims);
}

double multi_task_loss(std::span<const double> losses, std::span<const double> betas) {
    if (losses.size() != betas.size() || losses.empty()) {
        throw DimensionError("multi_task_loss: " + std::to_string(losses.size()) + " losses vs " +
                             std::to_string(betas.size()) + " weights");
    }
    double total = betas[0] * losses[0];
    for (std::size_t k = 1; k < losses.size(); ++k) total = total + betas[k] * losses[k];
    return total;
}

Var multi_task_loss(std::span<const Var> losses, std::span<const double> betas) {
    if (losses.size() != betas.size() || losses.empty()) {
        throw DimensionError("multi_task_loss: " + std::to_string(losses.size()) + " losses vs " +
                             std::to_string(betas.size()) + " weights");
    }
    Var total = ad::scale(losses[0], betas[0]);
    for (std::size_t k = 1; k < losses.size(); ++k) total = ad::add(total, ad::scale(losses[k], betas[k]));
    return total;
}

Graph pretraining_graph(const Dataset& dataset) { return disjoint_union(dataset); }

namespace {

enum Stream : std::uint64_t { kInit = 1, kEpoch = 2 };

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

GraphInput with_adjacency(const Graph& g, const GraphInput& input) {
    return GraphInput{std::make_shared<const CsrMatrix>(normalize_adjacency(g)), input.features};
}

}  // namespace

EpochObjective epoch_objective(const Graph& g, const GraphInput& input,
                               std::span<const Var> weights, std::span<const std::vector<Var>> tokens,
                               const PretrainConfig& config, std::size_t epoch) {
    if (tokens.size() != config.num_tasks()) throw DimensionError("one token set per task required");
    const std::vector<Var> theta(weights.begin(), weights.end());
    EncoderPass base(input, theta);
    EpochObjective out;
    for (std::size_t k = 0; k < config.num_tasks(); ++k) {
        const std::span<const Var> tok(tokens[k]);
        Rng rng(derive_seed(config.seed, {kEpoch, epoch, k}));
        switch (config.tasks[k]) {
            case PretextTask::Dgi: {
                auto order = iota(g.num_nodes());
                rng.shuffle(std::span<std::size_t>(order));
                GraphInput corrupted{input.adjacency,
                                     std::make_shared<const CsrMatrix>(input.features->permute_rows(order))};
                EncoderPass neg(corrupted, theta);
                Var h_pos = base.task_embedding(tok, config.mix);
                Var h_neg = neg.task_embedding(tok, config.mix);
                out.per_task.push_back(dgi_loss(h_pos, h_neg, readout(h_pos)));
                break;
            }
            case PretextTask::GraphCl: {
                Graph g1 = drop_edges(g, config.drop_ratio, rng);
                Graph g2 = drop_edges(g, config.drop_ratio, rng);
                EncoderPass p1(with_adjacency(g1, input), theta);
                EncoderPass p2(with_adjacency(g2, input), theta);
                Var h1 = p1.task_embedding(tok, config.mix);
                Var h2 = p2.task_embedding(tok, config.mix);
                if (g.num_nodes() > config.graphcl_batch) {
                    auto rows = iota(g.num_nodes());
                    rng.shuffle(std::span<std::size_t>(rows));
                    rows.resize(config.graphcl_batch);
                    std::sort(rows.begin(), rows.end());
                    h1 = ad::gather_rows(h1, rows);
                    h2 = ad::gather_rows(h2, rows);
                }
                out.per_task.push_back(graphcl_loss(h1, h2, config.tau));
                break;
            }
            case PretextTask::LinkPrediction: {
                auto tuples = sample_lp_tuples(g, config.lp_tuples, rng);
                Var h = base.task_embedding(tok, config.mix);
                EgoEmbeddings ego = ego_readouts(g, h, tuples);
                out.per_task.push_back(lp_loss(tuples, ego.embeddings, ego.nodes, config.tau));
                break;
            }
        }
    }
    out.total = multi_task_loss(std::span<const Var>(out.per_task), config.betas);
    return out;
}

Checkpoint pretrain(const Dataset& dataset, const PretrainConfig& config) {
    dataset.validate();
    config.validate();
    const Graph g = pretraining_graph(dataset);
    const GraphInput input = make_graph_input(g);

    std::vector<std::size_t> dims{dataset.feature_dim};
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    Rng init(derive_seed(config.seed, {kInit}));

    Checkpoint cp;
    cp.config = config;
    cp.fingerprint = DatasetFingerprint::of(dataset);
    cp.weights = EncoderWeights::glorot(dims, init);
    if (config.train_tokens) cp.tokens.assign(config.num_tasks(), TokenSet::ones(dims));
    const TokenSet identity = TokenSet::ones(dims);

    std::vector<Matrix*> params;
    for (Matrix& m : cp.weights.layers) params.push_back(&m);
    for (TokenSet& t : cp.tokens) {
        for (Matrix& m : t.tokens) params.push_back(&m);
    }
    ad::AdamState adam;
    const ad::AdamConfig adam_config{.lr = config.lr};

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        ad::Tape tape;
        std::vector<Var> leaves;
        std::vector<Var> theta;
        for (const Matrix& m : cp.weights.layers) {
            theta.push_back(tape.leaf(m));
            leaves.push_back(theta.back());
        }
        std::vector<std::vector<Var>> tokens(config.num_tasks());
        for (std::size_t k = 0; k < config.num_tasks(); ++k) {
            const TokenSet& src = config.train_tokens ? cp.tokens[k] : identity;
            for (const Matrix& m : src.tokens) {
                tokens[k].push_back(config.train_tokens ? tape.leaf(m) : tape.constant(m));
                if (config.train_tokens) leaves.push_back(tokens[k].back());
            }
        }
        EpochObjective obj = epoch_objective(g, input, theta, tokens, config, epoch);

        EpochLosses record;
        record.total = obj.total.value().item();
        bool finite = std::isfinite(record.total);
        for (const Var& l : obj.per_task) {
            record.per_task.push_back(l.value().item());
            finite = finite && std::isfinite(record.per_task.back());
        }
        auto breakdown = [&] {
            std::ostringstream msg;
            msg << "at epoch " << epoch << ":";
            for (std::size_t k = 0; k < record.per_task.size(); ++k) {
                msg << ' ' << to_string(config.tasks[k]) << '=' << record.per_task[k];
            }
            msg << " total=" << record.total;
            return msg.str();
        };
        if (!finite) throw DomainError("non-finite pretraining loss " + breakdown());
        ad::Gradients grads = tape.backward(obj.total);
        std::vector<Matrix> g_values;
        g_values.reserve(leaves.size());
        for (const Var& v : leaves) g_values.push_back(grads.of(v));
        try {
            ad::adam_step(params, g_values, adam, adam_config);
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " " + breakdown());
        }
        cp.history.push_back(std::move(record));
    }
    return cp;
}

Matrix pretext_embedding(const Checkpoint& cp, const GraphInput& input, std::size_t task_index) {
    if (task_index >= cp.tokens.size()) {
        throw ValidationError("checkpoint has no token set " + std::to_string(task_index));
    }
    ad::Tape tape;
    std::vector<Var> theta;
    for (const Matrix& m : cp.weights.layers) theta.push_back(tape.constant(m));
    std::vector<Var> tok;
    for (const Matrix& m : cp.tokens[task_index].tokens) tok.push_back(tape.constant(m));
    EncoderPass pass(input, theta);
    return pass.task_embedding(tok, cp.config.mix).value();
}

void check_compatible(const Checkpoint& cp, std::size_t feature_dim) {
    if (cp.fingerprint.feature_dim != feature_dim) {
        throw CompatibilityError("checkpoint was trained on " + std::to_string(cp.fingerprint.feature_dim) +
                                 "-dimensional features, dataset has " + std::to_string(feature_dim));
    }
}

namespace detail {

namespace {
constexpr std::array<const char*, 12> kPretrainKeys{"pretext_tasks",  "betas", "alpha",      "hidden",    "epochs",
                                                    "lr",     "seed",  "tau",        "drop_ratio", "lp_tuples",
                                                    "graphcl_batch",   "train_tokens"};
}

bool is_pretrain_key(const std::string& key) {
    for (const char* k : kPretrainKeys) {
        if (key == k) return true;
    }
    return false;
}

Json pretrain_config_json(const PretrainConfig& c) {
    Json tasks = Json::array();
    for (PretextTask t : c.tasks) tasks.push_back(to_string(t));
    return Json{{"pretext_tasks", tasks},         {"betas", c.betas},           {"alpha", c.mix.alpha},
                {"hidden", c.hidden},     {"epochs", c.epochs},         {"lr", c.lr},
                {"seed", c.seed},         {"tau", c.tau},               {"drop_ratio", c.drop_ratio},
                {"lp_tuples", c.lp_tuples}, {"graphcl_batch", c.graphcl_batch}, {"train_tokens", c.train_tokens}};
}

void read_pretrain_fields(const Json& j, PretrainConfig& c, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    if (j.contains("pretext_tasks")) {
        auto names = field<std::vector<std::string>>(j, "pretext_tasks", where);
        c.tasks.clear();
        for (const auto& n : names) c.tasks.push_back(parse_pretext_task(n));
    }
    if (j.contains("betas")) c.betas = field<std::vector<double>>(j, "betas", where);
    if (j.contains("alpha")) c.mix.alpha = field<std::vector<double>>(j, "alpha", where);
    if (j.contains("hidden")) c.hidden = field<std::vector<std::size_t>>(j, "hidden", where);
    if (j.contains("epochs")) c.epochs = field<std::size_t>(j, "epochs", where);
    if (j.contains("lr")) c.lr = field<double>(j, "lr", where);
    if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", where);
    if (j.contains("tau")) c.tau = field<double>(j, "tau", where);
    if (j.contains("drop_ratio")) c.drop_ratio = field<double>(j, "drop_ratio", where);
    if (j.contains("lp_tuples")) c.lp_tuples = field<std::size_t>(j, "lp_tuples", where);
    if (j.contains("graphcl_batch")) c.graphcl_batch = field<std::size_t>(j, "graphcl_batch", where);
    if (j.contains("train_tokens")) c.train_tokens = field<bool>(j, "train_tokens", where);
}

Json encoder_weights_json(const EncoderWeights& w) {
    Json layers = Json::array();
    for (const Matrix& m : w.layers) layers.push_back(matrix_to_json(m));
    return layers;
}

EncoderWeights encoder_weights_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array of matrices");
    EncoderWeights w;
    for (std::size_t l = 0; l < j.size(); ++l) {
        w.layers.push_back(matrix_from_json(j[l], where + "[" + std::to_string(l) + "]"));
    }
    return w;
}

}  // namespace detail

std::string checkpoint_to_json(const Checkpoint& cp) {
    Json tokens = Json::array();
    for (const TokenSet& t : cp.tokens) {
        Json layers = Json::array();
        for (const Matrix& m : t.tokens) layers.push_back(detail::matrix_to_json(m));
        tokens.push_back(layers);
    }
    Json history = Json::array();
    for (const EpochLosses& e : cp.history) history.push_back(Json{{"total", e.total}, {"per_task", e.per_task}});
    Json j{{"format", Checkpoint::kFormat},
           {"version", Checkpoint::kVersion},
           {"config", detail::pretrain_config_json(cp.config)},
           {"fingerprint",
            {{"feature_dim", cp.fingerprint.feature_dim},
             {"num_graphs", cp.fingerprint.num_graphs},
             {"total_nodes", cp.fingerprint.total_nodes}}},
           {"weights", detail::encoder_weights_json(cp.weights)},
           {"tokens", tokens},
           {"final_losses", cp.final_losses()},
           {"history", history}};
    return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    using detail::field;
    const Json j = detail::parse_json(text, "checkpoint");
    if (!j.is_object()) throw ParseError("checkpoint: expected a JSON object");
    const auto format = field<std::string>(j, "format", "checkpoint");
    if (format != Checkpoint::kFormat) throw CompatibilityError("not a checkpoint file (format '" + format + "')");
    const auto version = field<int>(j, "version", "checkpoint");
    if (version != Checkpoint::kVersion) {
        throw CompatibilityError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(Checkpoint::kVersion) + ")");
    }
    Checkpoint cp;
    if (!j.contains("config")) throw ParseError("checkpoint.config: missing");
    detail::read_pretrain_fields(j["config"], cp.config, "checkpoint.config");
    if (!j.contains("fingerprint")) throw ParseError("checkpoint.fingerprint: missing");
    const Json& fp = j["fingerprint"];
    cp.fingerprint.feature_dim = field<std::size_t>(fp, "feature_dim", "checkpoint.fingerprint");
    cp.fingerprint.num_graphs = field<std::size_t>(fp, "num_graphs", "checkpoint.fingerprint");
    cp.fingerprint.total_nodes = field<std::size_t>(fp, "total_nodes", "checkpoint.fingerprint");
    if (!j.contains("weights")) throw ParseError("checkpoint.weights: missing");
    cp.weights = detail::encoder_weights_from_json(j["weights"], "checkpoint.weights");
    if (!j.contains("tokens") || !j["tokens"].is_array()) throw ParseError("checkpoint.tokens: expected an array");
    for (std::size_t k = 0; k < j["tokens"].size(); ++k) {
        const Json& set = j["tokens"][k];
        const std::string where = "checkpoint.tokens[" + std::to_string(k) + "]";
        if (!set.is_array()) throw ParseError(where + ": expected an array");
        TokenSet t;
        for (std::size_t l = 0; l < set.size(); ++l) {
            t.tokens.push_back(detail::matrix_from_json(set[l], where + "[" + std::to_string(l) + "]"));
        }
        cp.tokens.push_back(std::move(t));
    }
    if (!j.contains("history") || !j["history"].is_array()) throw ParseError("checkpoint.history: expected an array");
    for (std::size_t e = 0; e < j["history"].size(); ++e) {
        const std::string where = "checkpoint.history[" + std::to_string(e) + "]";
        cp.history.push_back({field<double>(j["history"][e], "total", where),
                              field<std::vector<double>>(j["history"][e], "per_task", where)});
    }
    cp.validate();
    return cp;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error("error reading '" + path.string() + "'");
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << text;
        out.flush();
        if (!out) throw Error("error writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
    write_text_file(path, checkpoint_to_json(cp));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

std::string pretrain_config_to_json(const PretrainConfig& config) {
    return detail::pretrain_config_json(config).dump(2) + "\n";
}

PretrainConfig pretrain_config_from_json(const std::string& text) {
    const Json j = detail::parse_json(text, "pretrain config");
    if (!j.is_object()) throw ParseError("pretrain config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!detail::is_pretrain_key(key)) throw ParseError("pretrain config: unknown key '" + key + "'");
    }
    PretrainConfig c;
    detail::read_pretrain_fields(j, c, "config");
    c.validate();
    return c;
}

}  // namespace mtgp

// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "json_io.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/ops.hpp"
#include "mtgp/optim.hpp"

namespace mtgp {

using ad::Var;
using detail::Json;

PromptVariant PromptVariant::parse(const std::string& name) {
    if (name == "1") return {false, false, false};
    if (name == "2") return {false, false, true};
    if (name == "3") return {true, false, false};
    if (name == "4") return {true, false, true};
    if (name == "5") return {true, true, false};
    if (name == "full") return {true, true, true};
    throw ParseError("unknown variant '" + name + "' (expected 1, 2, 3, 4, 5 or full)");
}

std::string PromptVariant::name() const {
    if (use_tokens && use_composed && use_open) return "full";
    if (use_tokens && use_composed) return "5";
    if (use_tokens && use_open) return "4";
    if (use_tokens) return "3";
    if (use_open) return "2";
    return "1";
}

void PromptVariant::validate() const {
    if (use_composed && !use_tokens) throw ValidationError("composed prompts require pretext tokens");
}

PromptState PromptState::initial(std::span<const std::size_t> dims, std::size_t num_tasks) {
    PromptState s;
    for (std::size_t d : dims) {
        s.gamma.emplace_back(1, num_tasks, num_tasks == 0 ? 0.0 : 1.0 / static_cast<double>(num_tasks));
        s.open.emplace_back(1, d, 1.0);
    }
    return s;
}

std::size_t PromptState::parameter_count() const {
    std::size_t n = delta_com.size() + delta_op.size();
    for (const Matrix& m : gamma) n += m.size();
    for (const Matrix& m : open) n += m.size();
    return n;
}

void PromptState::validate(std::span<const std::size_t> dims, std::size_t num_tasks) const {
    if (gamma.size() != dims.size() || open.size() != dims.size()) {
        throw ValidationError("prompt state has " + std::to_string(gamma.size()) + " composition rows and " +
                              std::to_string(open.size()) + " open prompts, encoder has " +
                              std::to_string(dims.size()) + " layers including the input");
    }
    for (std::size_t l = 0; l < dims.size(); ++l) {
        if (gamma[l].rows() != 1 || gamma[l].cols() != num_tasks) {
            throw ValidationError("composition weights for layer " + std::to_string(l) + " have shape " +
                                  gamma[l].shape_string() + ", expected 1x" + std::to_string(num_tasks));
        }
        if (open[l].rows() != 1 || open[l].cols() != dims[l]) {
            throw ValidationError("open prompt for layer " + std::to_string(l) + " has shape " +
                                  open[l].shape_string() + ", expected 1x" + std::to_string(dims[l]));
        }
    }
    if (delta_com.size() != 1 || delta_op.size() != 1) throw ValidationError("mixing weights must be scalars");
    if (!delta_com.all_finite() || !delta_op.all_finite()) throw ValidationError("mixing weights must be finite");
}

std::size_t tunable_parameter_count(const PromptState& state, const PromptVariant& variant) {
    std::size_t n = 0;
    const bool token_branch = variant.use_tokens;
    if (variant.use_composed) {
        for (const Matrix& m : state.gamma) n += m.size();
    }
    if (variant.use_open) {
        for (const Matrix& m : state.open) n += m.size();
    }
    // Δ is tuned whenever at least one branch is tunable.
    if (variant.use_composed || variant.use_open) {
        if (token_branch) n += 1;
        if (variant.use_open) n += 1;
    }
    return n;
}

std::string prompt_state_to_json(const PromptState& state) {
    Json gamma = Json::array();
    Json open = Json::array();
    for (const Matrix& m : state.gamma) gamma.push_back(detail::matrix_to_json(m));
    for (const Matrix& m : state.open) open.push_back(detail::matrix_to_json(m));
    Json j{{"format", PromptState::kFormat},
           {"version", PromptState::kVersion},
           {"gamma", gamma},
           {"open", open},
           {"delta", {state.delta_com.item(), state.delta_op.item()}}};
    return j.dump() + "\n";
}

PromptState prompt_state_from_json(const std::string& text) {
    const Json j = detail::parse_json(text, "prompt state");
    if (!j.is_object()) throw ParseError("prompt state: expected a JSON object");
    const auto format = detail::field<std::string>(j, "format", "prompt");
    if (format != PromptState::kFormat) throw CompatibilityError("not a prompt state file (format '" + format + "')");
    const auto version = detail::field<int>(j, "version", "prompt");
    if (version != PromptState::kVersion) {
        throw CompatibilityError("prompt state version " + std::to_string(version) + " is not supported");
    }
    PromptState s;
    for (const char* key : {"gamma", "open"}) {
        if (!j.contains(key) || !j[key].is_array()) throw ParseError(std::string("prompt.") + key + ": expected an array");
    }
    for (std::size_t l = 0; l < j["gamma"].size(); ++l) {
        s.gamma.push_back(detail::matrix_from_json(j["gamma"][l], "prompt.gamma[" + std::to_string(l) + "]"));
    }
    for (std::size_t l = 0; l < j["open"].size(); ++l) {
        s.open.push_back(detail::matrix_from_json(j["open"][l], "prompt.open[" + std::to_string(l) + "]"));
    }
    const auto delta = detail::field<std::vector<double>>(j, "delta", "prompt");
    if (delta.size() != 2) throw ParseError("prompt.delta: expected two numbers");
    s.delta_com = Matrix(1, 1, delta[0]);
    s.delta_op = Matrix(1, 1, delta[1]);
    return s;
}

PromptVars record_prompt(ad::Tape& tape, const PromptState& state, const PromptVariant& variant) {
    variant.validate();
    PromptVars p;
    auto record = [&](const Matrix& m, bool tuned) {
        Var v = tuned ? tape.leaf(m) : tape.constant(m);
        if (tuned) p.tuned.push_back(v);
        return v;
    };
    for (const Matrix& m : state.gamma) p.gamma.push_back(record(m, variant.use_composed));
    for (const Matrix& m : state.open) p.open.push_back(record(m, variant.use_open));
    const bool tunable = variant.use_composed || variant.use_open;
    p.delta_com = record(state.delta_com, tunable && variant.use_tokens);
    p.delta_op = record(state.delta_op, tunable && variant.use_open);
    return p;
}

Var compose_prompt(std::span<const TokenSet> tokens, Var gamma_l, std::size_t layer) {
    if (tokens.empty()) throw ValidationError("checkpoint has no pretext tokens to compose");
    if (gamma_l.rows() != 1 || gamma_l.cols() != tokens.size()) {
        throw DimensionError("composition weights have shape " + gamma_l.value().shape_string() + " for " +
                             std::to_string(tokens.size()) + " token sets");
    }
    ad::Tape& tape = *gamma_l.tape();
    std::vector<Var> rows;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (layer >= tokens[k].tokens.size()) {
            throw ValidationError("token set " + std::to_string(k) + " has no token for layer " + std::to_string(layer));
        }
        rows.push_back(tape.constant(tokens[k].tokens[layer]));
    }
    return ad::matmul(gamma_l, ad::concat_rows(rows));
}

Var token_mean_embedding(EncoderPass& pass, std::span<const TokenSet> tokens, const LayerMix& mix) {
    if (tokens.empty()) throw ValidationError("checkpoint has no pretext tokens");
    ad::Tape& tape = pass.tape();
    std::optional<Var> acc;
    for (const TokenSet& set : tokens) {
        std::vector<Var> tok;
        for (const Matrix& m : set.tokens) tok.push_back(tape.constant(m));
        Var h = pass.task_embedding(tok, mix);
        acc = acc ? ad::add(*acc, h) : h;
    }
    return ad::scale(*acc, 1.0 / static_cast<double>(tokens.size()));
}

Var dual_forward(EncoderPass& pass, std::span<const TokenSet> tokens, const PromptVars& prompt, const LayerMix& mix,
                 const PromptVariant& variant, std::optional<Var> token_mean) {
    variant.validate();
    std::optional<Var> out;
    if (variant.use_tokens) {
        Var h_com;
        if (variant.use_composed) {
            std::vector<Var> composed;
            for (std::size_t l = 0; l < prompt.gamma.size(); ++l) {
                composed.push_back(compose_prompt(tokens, prompt.gamma[l], l));
            }
            h_com = pass.task_embedding(composed, mix);
        } else {
            h_com = token_mean ? *token_mean : token_mean_embedding(pass, tokens, mix);
        }
        out = ad::scalar_mul(prompt.delta_com, h_com);
    }
    if (variant.use_open) {
        Var h_op = ad::scalar_mul(prompt.delta_op, pass.task_embedding(prompt.open, mix));
        out = out ? ad::add(*out, h_op) : h_op;
    }
    return out ? *out : pass.plain();
}

Var prototype_embeddings(Var embeddings, std::span<const std::size_t> class_index, std::size_t num_classes) {
    if (class_index.size() != embeddings.rows()) {
        throw DimensionError("prototype_embeddings: " + std::to_string(class_index.size()) + " labels for " +
                             std::to_string(embeddings.rows()) + " embeddings");
    }
    std::vector<std::vector<std::size_t>> groups(num_classes);
    for (std::size_t i = 0; i < class_index.size(); ++i) {
        if (class_index[i] >= num_classes) throw IndexError("class index " + std::to_string(class_index[i]) + " out of range");
        groups[class_index[i]].push_back(i);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (groups[c].empty()) throw ValidationError("class " + std::to_string(c) + " has no support instance");
    }
    return segment_readout(embeddings, groups);
}

Var prompt_tuning_loss(Var embeddings, Var prototypes, std::span<const std::size_t> class_index, double tau,
                       double min_norm) {
    if (!(tau > 0.0)) throw DomainError("prompt_tuning_loss: temperature must be positive");
    if (class_index.size() != embeddings.rows()) throw DimensionError("prompt_tuning_loss: one label per row required");
    const std::size_t c = prototypes.rows();
    Matrix onehot(class_index.size(), c);
    for (std::size_t i = 0; i < class_index.size(); ++i) {
        if (class_index[i] >= c) throw ValidationError("label without a prototype");
        onehot(i, class_index[i]) = 1.0;
    }
    Var sim = ad::scale(ad::cosine_matrix(embeddings, prototypes, min_norm), 1.0 / tau);
    Var picked = ad::sum(ad::elementwise_mul(sim, embeddings.tape()->constant(std::move(onehot))));
    return ad::sub(ad::sum(ad::logsumexp_rows(sim)), picked);
}

Classification classify(const Matrix& embeddings, const Matrix& prototypes, double tau) {
    if (prototypes.rows() == 0) throw ValidationError("classify needs at least one prototype");
    if (!(tau > 0.0)) throw DomainError("classify: temperature must be positive");
    ad::Tape tape;
    const Matrix sim = ad::cosine_matrix(tape.constant(embeddings), tape.constant(prototypes), kNormFloor).value();
    Classification out;
    out.distribution = Matrix(sim.rows(), sim.cols());
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < sim.cols(); ++j) {
            if (sim(i, j) > sim(i, best)) best = j;
        }
        out.predicted.push_back(best);
        double z = 0.0;
        for (std::size_t j = 0; j < sim.cols(); ++j) {
            out.distribution(i, j) = std::exp((sim(i, j) - sim(i, best)) / tau);
            z += out.distribution(i, j);
        }
        for (std::size_t j = 0; j < sim.cols(); ++j) out.distribution(i, j) /= z;
    }
    return out;
}

DownstreamData DownstreamData::build(const Dataset& dataset, TaskKind kind) {
    dataset.validate();
    DownstreamData d;
    d.kind = kind;
    d.graph = disjoint_union(dataset);
    d.input = make_graph_input(d.graph);
    if (kind == TaskKind::Graph) {
        d.instances = union_membership(dataset);
    } else {
        d.instances.resize(d.graph.num_nodes());
        for (std::size_t v = 0; v < d.instances.size(); ++v) d.instances[v] = {static_cast<NodeId>(v)};
    }
    return d;
}

namespace {

/// Frozen operands restricted to the receptive field of some instances.
class FrozenView {
public:
    FrozenView(const Checkpoint& cp, const DownstreamData& data, std::span<const LabeledInstance> instances,
               const TuneConfig& config)
        : cp_(cp), variant_(config.variant), mix_(config.mix.value_or(cp.config.mix)) {
        variant_.validate();
        check_compatible(cp, data.input.feature_dim());
        mix_.validate(cp.weights.num_layers());
        if (variant_.use_tokens && !cp.has_tokens()) {
            throw CompatibilityError("variant " + variant_.name() + " needs pretext tokens, checkpoint has none");
        }
        std::vector<NodeId> targets;
        for (const LabeledInstance& inst : instances) {
            if (inst.id >= data.instances.size()) throw IndexError("instance " + std::to_string(inst.id) + " out of range");
            const auto& nodes = data.instances[inst.id];
            targets.insert(targets.end(), nodes.begin(), nodes.end());
        }
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        rf_ = receptive_field(data.graph, data.input, targets, cp.weights.num_layers());
        for (const Matrix& m : cp.weights.layers) weights_.push_back(std::make_shared<const Matrix>(m));
        for (Matrix& m : plain_layer_outputs(rf_.input, cp.weights)) {
            plain_.push_back(std::make_shared<const Matrix>(std::move(m)));
        }
        for (const LabeledInstance& inst : instances) {
            std::vector<std::size_t> rows;
            for (NodeId v : data.instances[inst.id]) rows.push_back(rf_.local(v));
            groups_.push_back(std::move(rows));
        }
        if (variant_.use_tokens && !variant_.use_composed) {
            ad::Tape tape;
            EncoderPass pass = make_pass(tape);
            token_mean_ = std::make_shared<const Matrix>(token_mean_embedding(pass, cp_.tokens, mix_).value());
        }
    }

    EncoderPass make_pass(ad::Tape& tape) const {
        std::vector<Var> theta, plain;
        for (const auto& m : weights_) theta.push_back(tape.constant(m));
        for (const auto& m : plain_) plain.push_back(tape.constant(m));
        return EncoderPass(rf_.input, std::move(theta), std::move(plain));
    }

    /// One embedding row per instance given at construction.
    Var embed(ad::Tape& tape, const PromptVars& prompt) const {
        EncoderPass pass = make_pass(tape);
        std::optional<Var> mean;
        if (token_mean_) mean = tape.constant(token_mean_);
        Var h = dual_forward(pass, cp_.tokens, prompt, mix_, variant_, mean);
        return segment_readout(h, groups_);
    }

private:
    const Checkpoint& cp_;
    PromptVariant variant_;
    LayerMix mix_;
    ReceptiveField rf_;
    std::vector<std::shared_ptr<const Matrix>> weights_;
    std::vector<std::shared_ptr<const Matrix>> plain_;
    std::shared_ptr<const Matrix> token_mean_;
    std::vector<std::vector<std::size_t>> groups_;
};

std::vector<std::size_t> class_indices(const FewShotTask& task, std::span<const LabeledInstance> instances) {
    std::vector<std::size_t> idx;
    for (const LabeledInstance& inst : instances) {
        auto it = std::lower_bound(task.classes.begin(), task.classes.end(), inst.label);
        if (it == task.classes.end() || *it != inst.label) {
            throw ValidationError("instance " + std::to_string(inst.id) + " has label " + std::to_string(inst.label) +
                                  " outside the task classes");
        }
        idx.push_back(static_cast<std::size_t>(it - task.classes.begin()));
    }
    return idx;
}

}  // namespace

TuneResult prompt_tune(const Checkpoint& cp, const DownstreamData& data, const FewShotTask& task,
                       const TuneConfig& config) {
    if (task.support.empty()) throw ValidationError("task has no support instances");
    const std::size_t num_tasks = cp.has_tokens() ? cp.tokens.size() : cp.config.num_tasks();
    TuneResult result{PromptState::initial(cp.weights.dims(), num_tasks), {}};
    if (!config.variant.use_open) result.state.delta_op = Matrix(1, 1, 0.0);
    if (!config.variant.use_tokens) result.state.delta_com = Matrix(1, 1, 0.0);
    if (!config.variant.use_composed && !config.variant.use_open) return result;

    const FrozenView view(cp, data, task.support, config);
    const auto labels = class_indices(task, task.support);
    const ad::AdamConfig adam_config{.lr = config.lr};
    ad::AdamState adam;
    for (std::size_t step = 0; step < config.steps; ++step) {
        ad::Tape tape;
        PromptVars prompt = record_prompt(tape, result.state, config.variant);
        Var emb = view.embed(tape, prompt);
        Var protos = prototype_embeddings(emb, labels, task.classes.size());
        Var loss = prompt_tuning_loss(emb, protos, labels, config.tau, kNormFloor);
        result.losses.push_back(loss.value().item());
        if (!std::isfinite(result.losses.back())) {
            throw DomainError("non-finite prompt-tuning loss at step " + std::to_string(step));
        }
        ad::Gradients grads = tape.backward(loss);
        std::vector<Matrix*> params;
        for (Matrix& m : result.state.gamma) {
            if (config.variant.use_composed) params.push_back(&m);
        }
        for (Matrix& m : result.state.open) {
            if (config.variant.use_open) params.push_back(&m);
        }
        if (config.variant.use_tokens) params.push_back(&result.state.delta_com);
        if (config.variant.use_open) params.push_back(&result.state.delta_op);
        std::vector<Matrix> g;
        for (const Var& v : prompt.tuned) g.push_back(grads.of(v));
        ad::adam_step(params, g, adam, adam_config);
    }
    return result;
}

TaskEvaluation evaluate_task(const Checkpoint& cp, const DownstreamData& data, const FewShotTask& task,
                             const PromptState& state, const TuneConfig& config) {
    std::vector<LabeledInstance> all(task.support);
    all.insert(all.end(), task.query.begin(), task.query.end());
    const FrozenView view(cp, data, all, config);
    ad::Tape tape;
    PromptVars prompt = record_prompt(tape, state, config.variant);
    const Matrix emb = view.embed(tape, prompt).value();

    const std::size_t ns = task.support.size();
    std::vector<std::size_t> support_rows(ns);
    std::vector<std::size_t> query_rows(task.query.size());
    for (std::size_t i = 0; i < ns; ++i) support_rows[i] = i;
    for (std::size_t i = 0; i < query_rows.size(); ++i) query_rows[i] = ns + i;
    Var e = tape.constant(emb);
    const Matrix protos =
        prototype_embeddings(ad::gather_rows(e, support_rows), class_indices(task, task.support), task.classes.size())
            .value();
    const Matrix queries = ad::gather_rows(e, query_rows).value();

    TaskEvaluation out;
    if (task.query.empty()) return out;
    const Classification cls = classify(queries, protos, config.tau);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < task.query.size(); ++i) {
        const ClassId predicted = task.classes[cls.predicted[i]];
        out.predictions.push_back(predicted);
        if (predicted == task.query[i].label) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(task.query.size());
    return out;
}

}  // namespace mtgp

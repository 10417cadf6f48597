// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtgp/errors.hpp"

namespace mtgp::ad {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config) {
    if (params.size() != grads.size()) throw DimensionError("adam_step: parameter/gradient count mismatch");
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p]->same_shape(grads[p])) {
            throw DimensionError("adam_step: gradient " + std::to_string(p) + " has shape " +
                                 grads[p].shape_string() + ", parameter " + params[p]->shape_string());
        }
        if (!grads[p].all_finite()) {
            throw DomainError("adam_step: non-finite gradient for parameter " + std::to_string(p));
        }
    }
    if (state.m.empty()) {
        for (Matrix* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("adam_step: state does not match parameters");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& w = params[p]->values();
        auto& m = state.m[p].values();
        auto& v = state.v[p].values();
        const auto& g = grads[p].values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
        }
    }
}

namespace {

double evaluate(const LossBuilder& f, std::span<const Matrix> params) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
    const double v = f(tape, leaves).value().item();
    if (!std::isfinite(v)) throw DomainError("grad_check: loss is not finite");
    return v;
}

}  // namespace

double value_and_grad(const LossBuilder& f, std::span<const Matrix> params, std::vector<Matrix>& grads) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Matrix& p : params) leaves.push_back(tape.leaf(p));
    Var loss = f(tape, leaves);
    Gradients g = tape.backward(loss);
    grads.clear();
    for (const Var& leaf : leaves) grads.push_back(g.of(leaf));
    return loss.value().item();
}

GradCheckResult grad_check(const LossBuilder& f, std::span<const Matrix> params, double eps) {
    std::vector<Matrix> analytic;
    const double base = value_and_grad(f, params, analytic);
    if (!std::isfinite(base)) throw DomainError("grad_check: loss is not finite");

    std::vector<Matrix> probe(params.begin(), params.end());
    GradCheckResult result;
    for (std::size_t p = 0; p < probe.size(); ++p) {
        for (std::size_t i = 0; i < probe[p].size(); ++i) {
            const double orig = probe[p].values()[i];
            probe[p].values()[i] = orig + eps;
            const double up = evaluate(f, probe);
            probe[p].values()[i] = orig - eps;
            const double down = evaluate(f, probe);
            probe[p].values()[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double err = std::abs(analytic[p].values()[i] - numeric) / std::max(1.0, std::abs(numeric));
            if (err > result.max_rel_error) result = {err, p, i};
        }
    }
    return result;
}

}  // namespace mtgp::ad

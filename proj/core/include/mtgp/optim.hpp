// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mtgp/matrix.hpp"
#include "mtgp/tape.hpp"

namespace mtgp::ad {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update applied in place to `params`. Moments are
/// created on the first call. Throws DomainError on a non-finite gradient
/// (parameters are left untouched in that case).
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config);

/// Builds a loss on the given tape from leaves bound to the supplied values.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
};

/// Compares reverse-mode gradients of `f` against central finite differences.
/// Error per coordinate is |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check(const LossBuilder& f, std::span<const Matrix> params, double eps = 1e-5);

/// Evaluates `f` once and returns the loss value together with leaf gradients.
double value_and_grad(const LossBuilder& f, std::span<const Matrix> params, std::vector<Matrix>& grads);

}  // namespace mtgp::ad

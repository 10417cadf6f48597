// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable matrix operations. Every function records its result on the
// tape of its operands and never mutates an operand. Shape problems raise
// DimensionError, out-of-domain inputs raise DomainError.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "mtgp/matrix.hpp"
#include "mtgp/tape.hpp"

namespace mtgp::ad {

using CsrPtr = std::shared_ptr<const CsrMatrix>;

Var matmul(Var a, Var b);
/// Constant sparse left operand times a recorded matrix.
Var spmm(CsrPtr a, Var b);
/// x diag(s) theta for constant sparse x and a 1 x rows(theta) vector s.
Var spmm_scaled(CsrPtr x, Var s, Var theta);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var elementwise_mul(Var a, Var b);

/// Every row of h multiplied element-wise by the 1 x cols vector t.
Var rowwise_scale(Var h, Var t);
/// Row i of a multiplied by s[i], where s is 1 x rows.
Var scale_rows(Var a, Var s);
/// Every entry of a multiplied by the 1x1 variable s.
Var scalar_mul(Var s, Var a);
/// Every entry of a multiplied by the constant c.
Var scale(Var a, double c);

Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
/// Entries clipped to [lo, hi]; gradient is zero where clipping is active.
Var clamp(Var a, double lo, double hi);

/// 1 x cols vector of column means.
Var mean_rows(Var a);
/// 1x1 sum of all entries.
Var sum(Var a);
/// rows x 1 vector of row sums.
Var row_sums(Var a);

/// 1x1 cosine similarity of two vectors with the same number of entries.
Var cosine_sim(Var u, Var v);
/// Each row divided by max(norm, min_norm). With min_norm 0 a zero row is a DomainError.
Var row_normalize(Var a, double min_norm = 0.0);
Var transpose(Var a);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const std::size_t> rows);

/// rows x 1 vector of log(sum_j exp(a_ij)) over entries where keep(i,j) != 0.
/// An empty keep mask keeps every entry.
Var logsumexp_rows(Var a, std::span<const char> keep = {});

/// Matrix of cosine similarities between rows of a and rows of b.
Var cosine_matrix(Var a, Var b, double min_norm = 0.0);

}  // namespace mtgp::ad

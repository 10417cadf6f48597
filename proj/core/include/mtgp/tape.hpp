// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Recorded dense-matrix computation with reverse-mode gradients.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mtgp/matrix.hpp"

namespace mtgp::ad {

class Tape;

/// Handle to a matrix recorded on a Tape. Cheap to copy; valid for the
/// lifetime of its tape.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool requires_grad() const;

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Result of a backward pass. Gradients are retained for leaves only.
class Gradients {
public:
    /// Gradient of the loss with respect to leaf v; zeros when v is off the loss path.
    Matrix of(Var v) const;

private:
    friend class Tape;
    std::vector<Matrix> grads_;
    std::vector<std::shared_ptr<const Matrix>> values_;
};

/// Accumulates d(loss)/d(parent) given d(loss)/d(node). A null entry in
/// `parent_grads` means that parent does not need a gradient.
using BackwardFn = std::function<void(const Matrix& upstream, std::span<Matrix* const> parent_grads)>;

/// Append-only record of operations. Nodes are stored in creation order,
/// which is a topological order of the computation. Single-threaded.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Trainable input.
    Var leaf(Matrix value);
    /// Input that never receives a gradient.
    Var constant(Matrix value);
    /// Constant that shares storage with the caller instead of copying.
    Var constant(std::shared_ptr<const Matrix> value);

    /// Records the result of an operation on `parents`.
    Var record(Matrix value, std::vector<Var> parents, BackwardFn backward);

    /// Reverse pass from a 1x1 loss. Throws DimensionError for non-scalar losses.
    Gradients backward(Var loss) const;

    const Matrix& value(std::size_t id) const { return *nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        std::shared_ptr<const Matrix> value;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
    };
    std::vector<Node> nodes_;
};

}  // namespace mtgp::ad

// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/tape.hpp"

#include "mtgp/errors.hpp"

namespace mtgp::ad {

const Matrix& Var::value() const {
    if (tape_ == nullptr) throw Error("use of an unbound Var");
    return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->requires_grad(id_); }

Matrix Gradients::of(Var v) const {
    if (v.id() >= grads_.size()) throw IndexError("variable not on the differentiated tape");
    const Matrix& g = grads_[v.id()];
    if (g.empty() && !values_[v.id()]->empty()) {
        return Matrix(values_[v.id()]->rows(), values_[v.id()]->cols());
    }
    return g;
}

Var Tape::leaf(Matrix value) {
    nodes_.push_back(Node{std::make_shared<const Matrix>(std::move(value)), {}, {}, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) { return constant(std::make_shared<const Matrix>(std::move(value))); }

Var Tape::constant(std::shared_ptr<const Matrix> value) {
    if (!value) throw Error("null constant");
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward) {
    Node node;
    node.value = std::make_shared<const Matrix>(std::move(value));
    for (const Var& p : parents) {
        if (p.tape() != this) throw Error("operands recorded on different tapes");
        node.parents.push_back(p.id());
        node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) const {
    if (loss.tape() != this) throw Error("loss recorded on a different tape");
    const Matrix& lv = *nodes_[loss.id()].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw DimensionError("backward needs a 1x1 loss, got " + lv.shape_string());
    }
    Gradients out;
    out.grads_.resize(nodes_.size());
    out.values_.reserve(nodes_.size());
    for (const Node& n : nodes_) out.values_.push_back(n.value);
    if (!nodes_[loss.id()].requires_grad) return out;

    out.grads_[loss.id()] = Matrix(1, 1, 1.0);
    std::vector<Matrix*> parent_grads;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!node.backward || out.grads_[id].empty()) continue;
        parent_grads.clear();
        for (std::size_t p : node.parents) {
            if (!nodes_[p].requires_grad) {
                parent_grads.push_back(nullptr);
                continue;
            }
            Matrix& g = out.grads_[p];
            if (g.empty()) g = Matrix(nodes_[p].value->rows(), nodes_[p].value->cols());
            parent_grads.push_back(&g);
        }
        node.backward(out.grads_[id], parent_grads);
        // Interior gradients are no longer needed once propagated.
        if (!node.parents.empty()) out.grads_[id] = Matrix();
    }
    return out;
}

}  // namespace mtgp::ad

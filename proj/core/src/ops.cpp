// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mtgp/errors.hpp"

namespace mtgp::ad {
namespace {

void require_same_tape(const Var& a, const Var& b) {
    if (!a.valid() || !b.valid()) throw Error("use of an unbound Var");
    if (a.tape() != b.tape()) throw Error("operands recorded on different tapes");
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                         b.shape_string());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error(op, a, b);
}

// c += a * b, skipping zero entries of a.
void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.data() + i * n;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// Elementwise unary op with derivative expressed through input x and output y.
template <class Forward, class Derivative>
Var unary(Var a, Forward f, Derivative df) {
    const Matrix& x = a.value();
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) y.values()[i] = f(x.values()[i]);
    Tape* t = a.tape();
    const std::size_t ia = a.id();
    std::size_t self = t->size();
    return t->record(std::move(y), {a}, [t, ia, self, df](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& xv = t->value(ia);
        const Matrix& yv = t->value(self);
        auto& out = pg[0]->values();
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += g.values()[i] * df(xv.values()[i], yv.values()[i]);
        }
    });
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
    Matrix c(av.rows(), bv.cols());
    gemm_accumulate(av, bv, c);
    Tape* t = a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    return t->record(std::move(c), {a, b}, [t, ia, ib](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& A = t->value(ia);
        const Matrix& B = t->value(ib);
        if (pg[0] != nullptr) {
            Matrix& dA = *pg[0];
            for (std::size_t i = 0; i < A.rows(); ++i) {
                const auto grow = g.row(i);
                for (std::size_t k = 0; k < A.cols(); ++k) {
                    const auto brow = B.row(k);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < grow.size(); ++j) acc += grow[j] * brow[j];
                    dA(i, k) += acc;
                }
            }
        }
        if (pg[1] != nullptr) {
            Matrix& dB = *pg[1];
            const std::size_t n = B.cols();
            for (std::size_t i = 0; i < A.rows(); ++i) {
                const double* grow = g.data() + i * n;
                for (std::size_t k = 0; k < A.cols(); ++k) {
                    const double aik = A(i, k);
                    if (aik == 0.0) continue;
                    double* drow = dB.data() + k * n;
                    for (std::size_t j = 0; j < n; ++j) drow[j] += aik * grow[j];
                }
            }
        }
    });
}

Var spmm(CsrPtr a, Var b) {
    if (!a) throw Error("spmm: null sparse operand");
    const Matrix& bv = b.value();
    if (a->cols() != bv.rows()) {
        throw DimensionError("spmm: incompatible shapes " + std::to_string(a->rows()) + "x" +
                             std::to_string(a->cols()) + " and " + bv.shape_string());
    }
    const std::size_t n = bv.cols();
    Matrix c(a->rows(), n);
    for (std::size_t r = 0; r < a->rows(); ++r) {
        auto cs = a->row_cols(r);
        auto vs = a->row_values(r);
        double* crow = c.data() + r * n;
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const double* brow = bv.data() + cs[k] * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += vs[k] * brow[j];
        }
    }
    Tape* t = b.tape();
    return t->record(std::move(c), {b}, [a, n](const Matrix& g, std::span<Matrix* const> pg) {
        Matrix& dB = *pg[0];
        for (std::size_t r = 0; r < a->rows(); ++r) {
            auto cs = a->row_cols(r);
            auto vs = a->row_values(r);
            const double* grow = g.data() + r * n;
            for (std::size_t k = 0; k < cs.size(); ++k) {
                double* drow = dB.data() + cs[k] * n;
                for (std::size_t j = 0; j < n; ++j) drow[j] += vs[k] * grow[j];
            }
        }
    });
}

Var spmm_scaled(CsrPtr x, Var s, Var theta) {
    if (!x) throw Error("spmm_scaled: null sparse operand");
    require_same_tape(s, theta);
    const Matrix& sv = s.value();
    const Matrix& tv = theta.value();
    if (x->cols() != tv.rows() || sv.rows() != 1 || sv.cols() != tv.rows()) {
        throw DimensionError("spmm_scaled: incompatible shapes " + std::to_string(x->rows()) + "x" +
                             std::to_string(x->cols()) + ", " + sv.shape_string() + " and " + tv.shape_string());
    }
    const std::size_t n = tv.cols();
    Matrix c(x->rows(), n);
    for (std::size_t r = 0; r < x->rows(); ++r) {
        auto cs = x->row_cols(r);
        auto vs = x->row_values(r);
        double* crow = c.data() + r * n;
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const double w = vs[k] * sv(0, cs[k]);
            const double* trow = tv.data() + cs[k] * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += w * trow[j];
        }
    }
    Tape* t = s.tape();
    const std::size_t is = s.id(), it = theta.id();
    return t->record(std::move(c), {s, theta}, [t, x, n, is, it](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& S = t->value(is);
        const Matrix& T = t->value(it);
        for (std::size_t r = 0; r < x->rows(); ++r) {
            auto cs = x->row_cols(r);
            auto vs = x->row_values(r);
            const double* grow = g.data() + r * n;
            for (std::size_t k = 0; k < cs.size(); ++k) {
                const double* trow = T.data() + cs[k] * n;
                if (pg[0] != nullptr) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * trow[j];
                    (*pg[0])(0, cs[k]) += vs[k] * acc;
                }
                if (pg[1] != nullptr) {
                    const double w = vs[k] * S(0, cs[k]);
                    double* drow = pg[1]->data() + cs[k] * n;
                    for (std::size_t j = 0; j < n; ++j) drow[j] += w * grow[j];
                }
            }
        }
    });
}

Var add(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape("add", a.value(), b.value());
    Matrix c = a.value();
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] += b.value().values()[i];
    return a.tape()->record(std::move(c), {a, b}, [](const Matrix& g, std::span<Matrix* const> pg) {
        for (Matrix* p : pg) {
            if (p == nullptr) continue;
            for (std::size_t i = 0; i < g.size(); ++i) p->values()[i] += g.values()[i];
        }
    });
}

Var sub(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape("sub", a.value(), b.value());
    Matrix c = a.value();
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] -= b.value().values()[i];
    return a.tape()->record(std::move(c), {a, b}, [](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0] != nullptr) {
            for (std::size_t i = 0; i < g.size(); ++i) pg[0]->values()[i] += g.values()[i];
        }
        if (pg[1] != nullptr) {
            for (std::size_t i = 0; i < g.size(); ++i) pg[1]->values()[i] -= g.values()[i];
        }
    });
}

Var elementwise_mul(Var a, Var b) {
    require_same_tape(a, b);
    require_same_shape("elementwise_mul", a.value(), b.value());
    Matrix c = a.value();
    for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] *= b.value().values()[i];
    Tape* t = a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    return t->record(std::move(c), {a, b}, [t, ia, ib](const Matrix& g, std::span<Matrix* const> pg) {
        const auto& av = t->value(ia).values();
        const auto& bv = t->value(ib).values();
        if (pg[0] != nullptr) {
            for (std::size_t i = 0; i < g.size(); ++i) pg[0]->values()[i] += g.values()[i] * bv[i];
        }
        if (pg[1] != nullptr) {
            for (std::size_t i = 0; i < g.size(); ++i) pg[1]->values()[i] += g.values()[i] * av[i];
        }
    });
}

Var rowwise_scale(Var h, Var t_vec) {
    require_same_tape(h, t_vec);
    const Matrix& hv = h.value();
    const Matrix& tv = t_vec.value();
    if (tv.rows() != 1 || tv.cols() != hv.cols()) shape_error("rowwise_scale", hv, tv);
    Matrix c = hv;
    const std::size_t n = hv.cols();
    for (std::size_t i = 0; i < hv.rows(); ++i) {
        for (std::size_t j = 0; j < n; ++j) c(i, j) *= tv(0, j);
    }
    Tape* t = h.tape();
    const std::size_t ih = h.id(), it = t_vec.id();
    return t->record(std::move(c), {h, t_vec}, [t, ih, it, n](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& H = t->value(ih);
        const Matrix& T = t->value(it);
        if (pg[0] != nullptr) {
            for (std::size_t i = 0; i < H.rows(); ++i) {
                for (std::size_t j = 0; j < n; ++j) (*pg[0])(i, j) += g(i, j) * T(0, j);
            }
        }
        if (pg[1] != nullptr) {
            for (std::size_t i = 0; i < H.rows(); ++i) {
                for (std::size_t j = 0; j < n; ++j) (*pg[1])(0, j) += g(i, j) * H(i, j);
            }
        }
    });
}

Var scale_rows(Var a, Var s) {
    require_same_tape(a, s);
    const Matrix& av = a.value();
    const Matrix& sv = s.value();
    if (sv.rows() != 1 || sv.cols() != av.rows()) shape_error("scale_rows", av, sv);
    Matrix c = av;
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (double& x : c.row(i)) x *= sv(0, i);
    }
    Tape* t = a.tape();
    const std::size_t ia = a.id(), is = s.id();
    return t->record(std::move(c), {a, s}, [t, ia, is](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& A = t->value(ia);
        const Matrix& S = t->value(is);
        for (std::size_t i = 0; i < A.rows(); ++i) {
            const auto grow = g.row(i);
            if (pg[0] != nullptr) {
                auto drow = pg[0]->row(i);
                for (std::size_t j = 0; j < grow.size(); ++j) drow[j] += grow[j] * S(0, i);
            }
            if (pg[1] != nullptr) {
                const auto arow = A.row(i);
                double acc = 0.0;
                for (std::size_t j = 0; j < grow.size(); ++j) acc += grow[j] * arow[j];
                (*pg[1])(0, i) += acc;
            }
        }
    });
}

Var scalar_mul(Var s, Var a) {
    require_same_tape(s, a);
    const Matrix& sv = s.value();
    if (sv.rows() != 1 || sv.cols() != 1) shape_error("scalar_mul", sv, a.value());
    const double c = sv(0, 0);
    Matrix out = a.value();
    for (double& x : out.values()) x *= c;
    Tape* t = a.tape();
    const std::size_t is = s.id(), ia = a.id();
    return t->record(std::move(out), {s, a}, [t, is, ia](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& A = t->value(ia);
        const double cv = t->value(is)(0, 0);
        if (pg[0] != nullptr) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g.values()[i] * A.values()[i];
            (*pg[0])(0, 0) += acc;
        }
        if (pg[1] != nullptr) {
            for (std::size_t i = 0; i < g.size(); ++i) pg[1]->values()[i] += g.values()[i] * cv;
        }
    });
}

Var scale(Var a, double c) {
    Matrix out = a.value();
    for (double& x : out.values()) x *= c;
    return a.tape()->record(std::move(out), {a}, [c](const Matrix& g, std::span<Matrix* const> pg) {
        for (std::size_t i = 0; i < g.size(); ++i) pg[0]->values()[i] += g.values()[i] * c;
    });
}

Var relu(Var a) {
    // Subgradient at 0 is 0.
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
    return unary(
        a, [](double x) { return stable_sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
    return unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
    for (double x : a.value().values()) {
        if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
    }
    return unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw DomainError("clamp with lo > hi");
    return unary(
        a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var mean_rows(Var a) {
    const Matrix& av = a.value();
    if (av.rows() == 0) throw DimensionError("mean_rows of a matrix with no rows");
    Matrix out(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
    }
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (double& x : out.values()) x *= inv;
    const std::size_t rows = av.rows();
    return a.tape()->record(std::move(out), {a}, [rows, inv](const Matrix& g, std::span<Matrix* const> pg) {
        for (std::size_t i = 0; i < rows; ++i) {
            auto drow = pg[0]->row(i);
            for (std::size_t j = 0; j < drow.size(); ++j) drow[j] += g(0, j) * inv;
        }
    });
}

Var sum(Var a) {
    double acc = 0.0;
    for (double x : a.value().values()) acc += x;
    return a.tape()->record(Matrix(1, 1, acc), {a}, [](const Matrix& g, std::span<Matrix* const> pg) {
        const double gv = g(0, 0);
        for (double& x : pg[0]->values()) x += gv;
    });
}

Var row_sums(Var a) {
    const Matrix& av = a.value();
    Matrix out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double acc = 0.0;
        for (double x : av.row(i)) acc += x;
        out(i, 0) = acc;
    }
    return a.tape()->record(std::move(out), {a}, [](const Matrix& g, std::span<Matrix* const> pg) {
        for (std::size_t i = 0; i < pg[0]->rows(); ++i) {
            for (double& x : pg[0]->row(i)) x += g(i, 0);
        }
    });
}

Var cosine_sim(Var u, Var v) {
    require_same_tape(u, v);
    const Matrix& uv = u.value();
    const Matrix& vv = v.value();
    if (uv.size() != vv.size()) shape_error("cosine_sim", uv, vv);
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < uv.size(); ++i) {
        dot += uv.values()[i] * vv.values()[i];
        nu += uv.values()[i] * uv.values()[i];
        nv += vv.values()[i] * vv.values()[i];
    }
    if (nu == 0.0 || nv == 0.0) throw DomainError("cosine_sim of a zero vector");
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    const double c = dot / (nu * nv);
    Tape* t = u.tape();
    const std::size_t iu = u.id(), iv = v.id();
    return t->record(Matrix(1, 1, c), {u, v}, [t, iu, iv, nu, nv, c](const Matrix& g, std::span<Matrix* const> pg) {
        const auto& a = t->value(iu).values();
        const auto& b = t->value(iv).values();
        const double gv = g(0, 0);
        if (pg[0] != nullptr) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                pg[0]->values()[i] += gv * (b[i] / (nu * nv) - c * a[i] / (nu * nu));
            }
        }
        if (pg[1] != nullptr) {
            for (std::size_t i = 0; i < b.size(); ++i) {
                pg[1]->values()[i] += gv * (a[i] / (nu * nv) - c * b[i] / (nv * nv));
            }
        }
    });
}

Var row_normalize(Var a, double min_norm) {
    if (!(min_norm >= 0.0) || !std::isfinite(min_norm)) throw DomainError("row_normalize: norm floor must be >= 0");
    const Matrix& av = a.value();
    std::vector<double> norms(av.rows());
    std::vector<char> floored(av.rows(), 0);
    Matrix out = av;
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (double x : av.row(i)) s += x * x;
        if (s == 0.0 && min_norm == 0.0) throw DomainError("cosine similarity of zero-norm row " + std::to_string(i));
        norms[i] = std::sqrt(s);
        if (norms[i] < min_norm) {
            norms[i] = min_norm;
            floored[i] = 1;
        }
        for (double& x : out.row(i)) x /= norms[i];
    }
    Tape* t = a.tape();
    std::size_t self = t->size();
    return t->record(std::move(out), {a},
                     [t, self, norms = std::move(norms), floored = std::move(floored)](const Matrix& g,
                                                                                      std::span<Matrix* const> pg) {
        const Matrix& y = t->value(self);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            const auto yrow = y.row(i);
            const auto grow = g.row(i);
            double proj = 0.0;
            if (!floored[i]) {
                for (std::size_t j = 0; j < yrow.size(); ++j) proj += yrow[j] * grow[j];
            }
            auto drow = pg[0]->row(i);
            for (std::size_t j = 0; j < yrow.size(); ++j) drow[j] += (grow[j] - yrow[j] * proj) / norms[i];
        }
    });
}

Var transpose(Var a) {
    const Matrix& av = a.value();
    Matrix out(av.cols(), av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
    }
    return a.tape()->record(std::move(out), {a}, [](const Matrix& g, std::span<Matrix* const> pg) {
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) (*pg[0])(j, i) += g(i, j);
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_rows of nothing");
    const std::size_t cols = parts[0].cols();
    std::vector<std::size_t> offsets{0};
    std::vector<Var> parents;
    for (const Var& p : parts) {
        require_same_tape(parts[0], p);
        if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
        offsets.push_back(offsets.back() + p.rows() * cols);
        parents.push_back(p);
    }
    std::vector<double> values;
    values.reserve(offsets.back());
    for (const Var& p : parts) values.insert(values.end(), p.value().values().begin(), p.value().values().end());
    const std::size_t rows = offsets.back() / std::max<std::size_t>(cols, 1);
    return parts[0].tape()->record(
        Matrix(cols == 0 ? 0 : rows, cols, std::move(values)), parents,
        [offsets = std::move(offsets)](const Matrix& g, std::span<Matrix* const> pg) {
            for (std::size_t k = 0; k < pg.size(); ++k) {
                if (pg[k] == nullptr) continue;
                for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) {
                    pg[k]->values()[i - offsets[k]] += g.values()[i];
                }
            }
        });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols of nothing");
    const std::size_t rows = parts[0].rows();
    std::vector<std::size_t> offsets{0};
    std::vector<Var> parents;
    for (const Var& p : parts) {
        require_same_tape(parts[0], p);
        if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
        offsets.push_back(offsets.back() + p.cols());
        parents.push_back(p);
    }
    Matrix out(rows, offsets.back());
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Matrix& v = parts[k].value();
        for (std::size_t i = 0; i < rows; ++i) {
            std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offsets[k]));
        }
    }
    return parts[0].tape()->record(
        std::move(out), parents, [offsets = std::move(offsets)](const Matrix& g, std::span<Matrix* const> pg) {
            for (std::size_t k = 0; k < pg.size(); ++k) {
                if (pg[k] == nullptr) continue;
                for (std::size_t i = 0; i < g.rows(); ++i) {
                    for (std::size_t j = offsets[k]; j < offsets[k + 1]; ++j) (*pg[k])(i, j - offsets[k]) += g(i, j);
                }
            }
        });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
    const Matrix& av = a.value();
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    Matrix out(idx.size(), av.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= av.rows()) throw IndexError("gather_rows index " + std::to_string(idx[i]) + " out of range");
        std::copy(av.row(idx[i]).begin(), av.row(idx[i]).end(), out.row(i).begin());
    }
    return a.tape()->record(std::move(out), {a}, [idx = std::move(idx)](const Matrix& g, std::span<Matrix* const> pg) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto drow = pg[0]->row(idx[i]);
            const auto grow = g.row(i);
            for (std::size_t j = 0; j < grow.size(); ++j) drow[j] += grow[j];
        }
    });
}

Var logsumexp_rows(Var a, std::span<const char> keep) {
    const Matrix& av = a.value();
    if (!keep.empty() && keep.size() != av.size()) {
        throw DimensionError("logsumexp_rows: mask size does not match " + av.shape_string());
    }
    std::vector<char> mask(keep.begin(), keep.end());
    auto kept = [&mask, &av](std::size_t i, std::size_t j) { return mask.empty() || mask[i * av.cols() + j] != 0; };
    Matrix out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < av.cols(); ++j) {
            if (kept(i, j)) mx = std::max(mx, av(i, j));
        }
        if (mx == -std::numeric_limits<double>::infinity()) {
            throw DomainError("logsumexp_rows: row " + std::to_string(i) + " has no kept entries");
        }
        double s = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
            if (kept(i, j)) s += std::exp(av(i, j) - mx);
        }
        out(i, 0) = mx + std::log(s);
    }
    Tape* t = a.tape();
    const std::size_t ia = a.id();
    const std::size_t self = t->size();
    return t->record(std::move(out), {a}, [t, ia, self, mask = std::move(mask)](const Matrix& g, std::span<Matrix* const> pg) {
        const Matrix& A = t->value(ia);
        const Matrix& L = t->value(self);
        for (std::size_t i = 0; i < A.rows(); ++i) {
            for (std::size_t j = 0; j < A.cols(); ++j) {
                if (!mask.empty() && mask[i * A.cols() + j] == 0) continue;
                (*pg[0])(i, j) += g(i, 0) * std::exp(A(i, j) - L(i, 0));
            }
        }
    });
}

Var cosine_matrix(Var a, Var b, double min_norm) {
    return matmul(row_normalize(a, min_norm), transpose(row_normalize(b, min_norm)));
}

}  // namespace mtgp::ad

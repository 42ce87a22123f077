#include "flowmix/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace flowmix::ad {

namespace {

std::shared_ptr<Node> make_node(int rows, int cols) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->val.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return n;
}

Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

void inherit(Node& out, std::initializer_list<Tensor> parents) {
    for (const auto& p : parents) {
        out.parents.push_back(p.node());
        out.requires_grad = out.requires_grad || p.node()->requires_grad;
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
}

// Elementwise binary op with same-shape operands.
template <typename F, typename DfA, typename DfB>
Tensor binary_ew(const Tensor& a, const Tensor& b, const char* name, F f, DfA dfa, DfB dfb) {
    check_same_shape(a, b, name);
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < out->val.size(); ++i) out->val[i] = f(av[i], bv[i]);
    Tensor t = wrap(out);
    inherit(*out, {a, b});
    if (out->requires_grad) {
        auto an = a.node(); auto bn = b.node();
        out->backprop = [an, bn, dfa, dfb](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    an->grad[i] += self.grad[i] * dfa(an->val[i], bn->val[i], self.val[i]);
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    bn->grad[i] += self.grad[i] * dfb(an->val[i], bn->val[i], self.val[i]);
            }
        };
    }
    return t;
}

// Elementwise unary op; derivative receives (x, y).
template <typename F, typename Df>
Tensor unary_ew(const Tensor& a, F f, Df df) {
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    for (std::size_t i = 0; i < out->val.size(); ++i) out->val[i] = f(av[i]);
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an, df](Node& self) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                an->grad[i] += self.grad[i] * df(an->val[i], self.val[i]);
        };
    }
    return t;
}

// Row-broadcast binary op: a is r x c, row is 1 x c.
template <typename F, typename DfA, typename DfRow>
Tensor rowb_ew(const Tensor& a, const Tensor& row, const char* name, F f, DfA dfa, DfRow dfr) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw DimensionError(std::string(name) + ": broadcast row must be 1x" + std::to_string(a.cols()));
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& rv = row.data();
    const int C = a.cols();
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < C; ++c) {
            std::size_t i = static_cast<std::size_t>(r) * C + c;
            out->val[i] = f(av[i], rv[c]);
        }
    Tensor t = wrap(out);
    inherit(*out, {a, row});
    if (out->requires_grad) {
        auto an = a.node(); auto rn = row.node();
        out->backprop = [an, rn, C, dfa, dfr](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (int r = 0; r < self.rows; ++r)
                    for (int c = 0; c < C; ++c) {
                        std::size_t i = static_cast<std::size_t>(r) * C + c;
                        an->grad[i] += self.grad[i] * dfa(an->val[i], rn->val[c]);
                    }
            }
            if (rn->requires_grad) {
                rn->ensure_grad();
                for (int r = 0; r < self.rows; ++r)
                    for (int c = 0; c < C; ++c) {
                        std::size_t i = static_cast<std::size_t>(r) * C + c;
                        rn->grad[c] += self.grad[i] * dfr(an->val[i], rn->val[c]);
                    }
            }
        };
    }
    return t;
}

// Column-broadcast binary op: a is r x c, col is r x 1.
template <typename F, typename DfA, typename DfCol>
Tensor colb_ew(const Tensor& a, const Tensor& col, const char* name, F f, DfA dfa, DfCol dfc) {
    if (col.cols() != 1 || col.rows() != a.rows())
        throw DimensionError(std::string(name) + ": broadcast col must be " + std::to_string(a.rows()) + "x1");
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& cv = col.data();
    const int C = a.cols();
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < C; ++c) {
            std::size_t i = static_cast<std::size_t>(r) * C + c;
            out->val[i] = f(av[i], cv[r]);
        }
    Tensor t = wrap(out);
    inherit(*out, {a, col});
    if (out->requires_grad) {
        auto an = a.node(); auto cn = col.node();
        out->backprop = [an, cn, C, dfa, dfc](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (int r = 0; r < self.rows; ++r)
                    for (int c = 0; c < C; ++c) {
                        std::size_t i = static_cast<std::size_t>(r) * C + c;
                        an->grad[i] += self.grad[i] * dfa(an->val[i], cn->val[r]);
                    }
            }
            if (cn->requires_grad) {
                cn->ensure_grad();
                for (int r = 0; r < self.rows; ++r)
                    for (int c = 0; c < C; ++c) {
                        std::size_t i = static_cast<std::size_t>(r) * C + c;
                        cn->grad[r] += self.grad[i] * dfc(an->val[i], cn->val[r]);
                    }
            }
        };
    }
    return t;
}

} // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    auto n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::constant(int rows, int cols, double fill) {
    auto n = make_node(rows, cols);
    std::fill(n->val.begin(), n->val.end(), fill);
    return wrap(std::move(n));
}

Tensor Tensor::from(int rows, int cols, std::vector<double> data, bool requires_grad) {
    if (data.size() != static_cast<std::size_t>(rows) * cols)
        throw DimensionError("from(): data length does not match shape");
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->val = std::move(data);
    n->requires_grad = requires_grad;
    return wrap(std::move(n));
}

Tensor Tensor::scalar(double v) { return from(1, 1, {v}); }

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_ew(a, b, "add", [](double x, double y) { return x + y; },
                     [](double, double, double) { return 1.0; },
                     [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_ew(a, b, "sub", [](double x, double y) { return x - y; },
                     [](double, double, double) { return 1.0; },
                     [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_ew(a, b, "mul", [](double x, double y) { return x * y; },
                     [](double, double y, double) { return y; },
                     [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_ew(a, b, "div", [](double x, double y) { return x / y; },
                     [](double, double y, double) { return 1.0 / y; },
                     [](double, double y, double out) { return -out / y; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
    return unary_ew(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_ew(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    return rowb_ew(a, row, "add_row", [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub_row(const Tensor& a, const Tensor& row) {
    return rowb_ew(a, row, "sub_row", [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
    return rowb_ew(a, row, "mul_row", [](double x, double y) { return x * y; },
                   [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor add_col(const Tensor& a, const Tensor& col) {
    return colb_ew(a, col, "add_col", [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub_col(const Tensor& a, const Tensor& col) {
    return colb_ew(a, col, "sub_col", [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
    return colb_ew(a, col, "mul_col", [](double x, double y) { return x * y; },
                   [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor exp(const Tensor& a) {
    return unary_ew(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_ew(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary_ew(a, [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Tensor rsqrt(const Tensor& a) {
    return unary_ew(a, [](double x) { return 1.0 / std::sqrt(x); },
                    [](double x, double y) { return -0.5 * y / x; });
}

Tensor square(const Tensor& a) {
    return unary_ew(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor tanh(const Tensor& a) {
    return unary_ew(a, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_ew(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Tensor swish(const Tensor& a) {
    // x * sigmoid(x); d/dx = s(x) * (1 + x * (1 - s(x)))
    return unary_ew(a,
                    [](double x) { return x / (1.0 + std::exp(-x)); },
                    [](double x, double) {
                        double s = 1.0 / (1.0 + std::exp(-x));
                        return s * (1.0 + x * (1.0 - s));
                    });
}

Tensor relu(const Tensor& a) {
    return unary_ew(a, [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary_ew(a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
                    [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dims " + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()));
    const int M = a.rows(), K = a.cols(), N = b.cols();
    auto out = make_node(M, N);
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = out->val.data();
    // ikj order: inner loop streams over rows of B, vectorizes well.
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k) {
            const double aik = A[static_cast<std::size_t>(i) * K + k];
            const double* Bk = B + static_cast<std::size_t>(k) * N;
            double* Ci = C + static_cast<std::size_t>(i) * N;
            for (int j = 0; j < N; ++j) Ci[j] += aik * Bk[j];
        }
    Tensor t = wrap(out);
    inherit(*out, {a, b});
    if (out->requires_grad) {
        auto an = a.node(); auto bn = b.node();
        out->backprop = [an, bn, M, K, N](Node& self) {
            const double* G = self.grad.data();
            if (an->requires_grad) {
                an->ensure_grad(); // dA = G * B^T
                for (int i = 0; i < M; ++i)
                    for (int k = 0; k < K; ++k) {
                        const double* Gi = G + static_cast<std::size_t>(i) * N;
                        const double* Bk = bn->val.data() + static_cast<std::size_t>(k) * N;
                        double s = 0.0;
                        for (int j = 0; j < N; ++j) s += Gi[j] * Bk[j];
                        an->grad[static_cast<std::size_t>(i) * K + k] += s;
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad(); // dB = A^T * G
                for (int i = 0; i < M; ++i)
                    for (int k = 0; k < K; ++k) {
                        const double aik = an->val[static_cast<std::size_t>(i) * K + k];
                        const double* Gi = G + static_cast<std::size_t>(i) * N;
                        double* Bg = bn->grad.data() + static_cast<std::size_t>(k) * N;
                        for (int j = 0; j < N; ++j) Bg[j] += aik * Gi[j];
                    }
            }
        };
    }
    return t;
}

Tensor sum_all(const Tensor& a) {
    auto out = make_node(1, 1);
    double s = 0.0;
    for (double v : a.data()) s += v;
    out->val[0] = s;
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an](Node& self) {
            an->ensure_grad();
            for (double& g : an->grad) g += self.grad[0];
        };
    }
    return t;
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.size())); }

Tensor sum_rows(const Tensor& a) {
    const int R = a.rows(), C = a.cols();
    auto out = make_node(R, 1);
    for (int r = 0; r < R; ++r) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += a(r, c);
        out->val[r] = s;
    }
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an, R, C](Node& self) {
            an->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c)
                    an->grad[static_cast<std::size_t>(r) * C + c] += self.grad[r];
        };
    }
    return t;
}

Tensor sum_cols(const Tensor& a) {
    const int R = a.rows(), C = a.cols();
    auto out = make_node(1, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) out->val[c] += a(r, c);
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an, R, C](Node& self) {
            an->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c)
                    an->grad[static_cast<std::size_t>(r) * C + c] += self.grad[c];
        };
    }
    return t;
}

Tensor mean_cols(const Tensor& a) { return scale(sum_cols(a), 1.0 / static_cast<double>(a.rows())); }

Tensor logsumexp_rows(const Tensor& a) {
    const int R = a.rows(), C = a.cols();
    if (C < 1) throw DimensionError("logsumexp_rows: empty rows");
    auto out = make_node(R, 1);
    for (int r = 0; r < R; ++r) {
        double m = a(r, 0);
        for (int c = 1; c < C; ++c) m = std::max(m, a(r, c));
        if (!std::isfinite(m)) { // all -inf: log of zero mass
            out->val[r] = m;
            continue;
        }
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += std::exp(a(r, c) - m);
        out->val[r] = m + std::log(s);
    }
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an, R, C](Node& self) {
            an->ensure_grad();
            for (int r = 0; r < R; ++r) {
                const double lse = self.val[r];
                if (!std::isfinite(lse)) continue;
                for (int c = 0; c < C; ++c) {
                    std::size_t i = static_cast<std::size_t>(r) * C + c;
                    an->grad[i] += self.grad[r] * std::exp(an->val[i] - lse);
                }
            }
        };
    }
    return t;
}

Tensor select_cols(const Tensor& a, const std::vector<int>& idx) {
    const int R = a.rows(), C = a.cols(), K = static_cast<int>(idx.size());
    for (int c : idx)
        if (c < 0 || c >= C) throw DimensionError("select_cols: index out of range");
    auto out = make_node(R, K);
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k) out->val[static_cast<std::size_t>(r) * K + k] = a(r, idx[k]);
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        auto ix = idx;
        out->backprop = [an, ix, R, C, K](Node& self) {
            an->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int k = 0; k < K; ++k)
                    an->grad[static_cast<std::size_t>(r) * C + ix[k]] +=
                        self.grad[static_cast<std::size_t>(r) * K + k];
        };
    }
    return t;
}

Tensor merge_cols(int dim, const std::vector<int>& idx_a, const Tensor& a,
                  const std::vector<int>& idx_b, const Tensor& b) {
    if (a.rows() != b.rows()) throw DimensionError("merge_cols: row mismatch");
    if (static_cast<int>(idx_a.size()) != a.cols() || static_cast<int>(idx_b.size()) != b.cols())
        throw DimensionError("merge_cols: index/column count mismatch");
    if (idx_a.size() + idx_b.size() != static_cast<std::size_t>(dim))
        throw DimensionError("merge_cols: indices do not cover dim");
    const int R = a.rows();
    auto out = make_node(R, dim);
    for (int r = 0; r < R; ++r) {
        for (std::size_t k = 0; k < idx_a.size(); ++k)
            out->val[static_cast<std::size_t>(r) * dim + idx_a[k]] = a(r, static_cast<int>(k));
        for (std::size_t k = 0; k < idx_b.size(); ++k)
            out->val[static_cast<std::size_t>(r) * dim + idx_b[k]] = b(r, static_cast<int>(k));
    }
    Tensor t = wrap(out);
    inherit(*out, {a, b});
    if (out->requires_grad) {
        auto an = a.node(); auto bn = b.node();
        auto ia = idx_a; auto ib = idx_b;
        out->backprop = [an, bn, ia, ib, R, dim](Node& self) {
            if (an->requires_grad) {
                an->ensure_grad();
                const int Ca = an->cols;
                for (int r = 0; r < R; ++r)
                    for (std::size_t k = 0; k < ia.size(); ++k)
                        an->grad[static_cast<std::size_t>(r) * Ca + k] +=
                            self.grad[static_cast<std::size_t>(r) * dim + ia[k]];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                const int Cb = bn->cols;
                for (int r = 0; r < R; ++r)
                    for (std::size_t k = 0; k < ib.size(); ++k)
                        bn->grad[static_cast<std::size_t>(r) * Cb + k] +=
                            self.grad[static_cast<std::size_t>(r) * dim + ib[k]];
            }
        };
    }
    return t;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const int R = parts[0].rows();
    int C = 0;
    for (const auto& p : parts) {
        if (p.rows() != R) throw DimensionError("concat_cols: row mismatch");
        C += p.cols();
    }
    auto out = make_node(R, C);
    int off = 0;
    for (const auto& p : parts) {
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < p.cols(); ++c)
                out->val[static_cast<std::size_t>(r) * C + off + c] = p(r, c);
        off += p.cols();
    }
    Tensor t = wrap(out);
    for (const auto& p : parts) {
        out->parents.push_back(p.node());
        out->requires_grad = out->requires_grad || p.node()->requires_grad;
    }
    if (out->requires_grad) {
        std::vector<std::shared_ptr<Node>> ns;
        for (const auto& p : parts) ns.push_back(p.node());
        out->backprop = [ns, R, C](Node& self) {
            int off = 0;
            for (auto& n : ns) {
                if (n->requires_grad) {
                    n->ensure_grad();
                    for (int r = 0; r < R; ++r)
                        for (int c = 0; c < n->cols; ++c)
                            n->grad[static_cast<std::size_t>(r) * n->cols + c] +=
                                self.grad[static_cast<std::size_t>(r) * C + off + c];
                }
                off += n->cols;
            }
        };
    }
    return t;
}

Tensor repeat_rows(const Tensor& a, int times) {
    if (times < 1) throw DimensionError("repeat_rows: times must be >= 1");
    const int R = a.rows(), C = a.cols();
    auto out = make_node(R * times, C);
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < times; ++k)
            std::copy(a.data().begin() + static_cast<std::size_t>(r) * C,
                      a.data().begin() + static_cast<std::size_t>(r + 1) * C,
                      out->val.begin() + (static_cast<std::size_t>(r) * times + k) * C);
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an, R, C, times](Node& self) {
            an->ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int k = 0; k < times; ++k)
                    for (int c = 0; c < C; ++c)
                        an->grad[static_cast<std::size_t>(r) * C + c] +=
                            self.grad[(static_cast<std::size_t>(r) * times + k) * C + c];
        };
    }
    return t;
}

Tensor group_max(const Tensor& a, int group) {
    if (group < 1 || a.rows() % group != 0)
        throw DimensionError("group_max: rows not divisible by group size");
    const int G = a.rows() / group, C = a.cols();
    auto out = make_node(G, C);
    std::vector<int> arg(static_cast<std::size_t>(G) * C, 0);
    for (int g = 0; g < G; ++g)
        for (int c = 0; c < C; ++c) {
            double best = a(g * group, c);
            int bi = g * group;
            for (int r = 1; r < group; ++r) {
                double v = a(g * group + r, c);
                if (v > best) { best = v; bi = g * group + r; }
            }
            out->val[static_cast<std::size_t>(g) * C + c] = best;
            arg[static_cast<std::size_t>(g) * C + c] = bi;
        }
    Tensor t = wrap(out);
    inherit(*out, {a});
    if (out->requires_grad) {
        auto an = a.node();
        out->backprop = [an, arg, G, C](Node& self) {
            an->ensure_grad();
            for (int g = 0; g < G; ++g)
                for (int c = 0; c < C; ++c) {
                    std::size_t i = static_cast<std::size_t>(g) * C + c;
                    an->grad[static_cast<std::size_t>(arg[i]) * C + c] += self.grad[i];
                }
        };
    }
    return t;
}

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw DimensionError("backward: loss must be scalar");
    auto root = loss.node();
    if (!root->requires_grad) return;
    if (!root->backprop && !root->parents.empty())
        throw StateError("backward: tape already cleared");

    // Iterative post-order DFS; visitation order is fixed by graph construction.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) {
            n->ensure_grad();
            n->backprop(*n);
            n->backprop = nullptr; // clear the tape
        }
    }
}

} // namespace flowmix::ad

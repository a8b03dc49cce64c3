#include "omicscl/tape.hpp"

#include <algorithm>
#include <cmath>

#include "omicscl/kernels.hpp"

namespace omicscl::ad {

Var Tape::leaf(Matrix value) {
    nodes_.push_back({std::move(value), {}, {}, true, true, false});
    return {nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
    nodes_.push_back({std::move(value), {}, {}, false, false, false});
    return {nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
    bool rg = false;
    for (Var p : parents) {
        if (p.id >= nodes_.size()) throw std::out_of_range("tape: parent not on this tape");
        rg = rg || nodes_[p.id].requires_grad;
    }
    nodes_.push_back({std::move(value), {}, rg ? std::move(backward) : Backward{}, rg, false, false});
    return {nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = nodes_.at(v.id);
    if (!n.requires_grad) return;
    require_same_shape(n.value, g, "tape accumulate");
    if (!n.has_grad) {
        n.grad = g;
        n.has_grad = true;
        return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(Var out) {
    const Node& o = nodes_.at(out.id);
    if (o.value.rows() != 1 || o.value.cols() != 1) {
        throw DimensionError("backward: output must be scalar, got " + o.value.shape_str());
    }
    for (auto& n : nodes_) {
        n.grad = Matrix();
        n.has_grad = false;
    }
    accumulate(out, Matrix::scalar(1.0));
    for (std::size_t i = out.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        // Copy: the closure may accumulate into other nodes but never this one.
        const Matrix g = n.grad;
        n.backward(*this, g);
    }
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.has_grad ? n.grad : Matrix(n.value.rows(), n.value.cols());
}

std::vector<Var> Tape::leaves() const {
    std::vector<Var> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].is_leaf) out.push_back({i});
    return out;
}

std::vector<Matrix> grad(Tape& tape, Var output) {
    tape.backward(output);
    std::vector<Matrix> out;
    for (Var l : tape.leaves()) out.push_back(tape.grad(l));
    return out;
}

// ------------------------------------------------------------------ ops

Var matmul(Tape& t, Var a, Var b) {
    Matrix v = omicscl::matmul(t.value(a), t.value(b));
    return t.record(std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(a)) tp.accumulate(a, kernels::gemm(g, tp.value(b).transpose()));
        if (tp.requires_grad(b)) tp.accumulate(b, kernels::gemm(tp.value(a).transpose(), g));
    });
}

Var add(Tape& t, Var a, Var b) {
    return t.record(t.value(a) + t.value(b), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

Var sub(Tape& t, Var a, Var b) {
    return t.record(t.value(a) - t.value(b), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, -1.0 * g);
    });
}

Var mul(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    require_same_shape(av, bv, "mul");
    Matrix v = av;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
    return t.record(std::move(v), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        Matrix ga = g, gb = g;
        const Matrix& av = tp.value(a);
        const Matrix& bv = tp.value(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] *= bv[i];
            gb[i] *= av[i];
        }
        tp.accumulate(a, ga);
        tp.accumulate(b, gb);
    });
}

Var scale(Tape& t, Var a, double s) {
    return t.record(s * t.value(a), {a}, [a, s](Tape& tp, const Matrix& g) { tp.accumulate(a, s * g); });
}

Var add_row(Tape& t, Var a, Var row) {
    const Matrix& av = t.value(a);
    const Matrix& rv = t.value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw DimensionError("add_row: " + av.shape_str() + " + " + rv.shape_str());
    }
    Matrix v = av;
    for (std::size_t r = 0; r < v.rows(); ++r)
        for (std::size_t c = 0; c < v.cols(); ++c) v(r, c) += rv[c];
    return t.record(std::move(v), {a, row}, [a, row](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        if (tp.requires_grad(row)) {
            Matrix gr(1, g.cols());
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
            tp.accumulate(row, gr);
        }
    });
}

Var relu(Tape& t, Var a) {
    Matrix v = t.value(a);
    for (auto& x : v.values()) x = x > 0.0 ? x : 0.0;
    return t.record(std::move(v), {a}, [a](Tape& tp, const Matrix& g) {
        Matrix ga = g;
        const Matrix& av = tp.value(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!(av[i] > 0.0)) ga[i] = 0.0;
        tp.accumulate(a, ga);
    });
}

Var square(Tape& t, Var a) { return mul(t, a, a); }

Var row_l2_normalize(Tape& t, Var a, double eps) {
    const Matrix& av = t.value(a);
    std::vector<double> denom(av.rows());
    std::vector<bool> clipped(av.rows());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        double ss = 0.0;
        for (double x : av.row(r)) ss += x * x;
        const double n = std::sqrt(ss);
        clipped[r] = !(n > eps);
        denom[r] = clipped[r] ? eps : n;
    }
    Matrix v = omicscl::row_l2_normalize(av, eps);
    return t.record(std::move(v), {a}, [a, denom, clipped, eps](Tape& tp, const Matrix& g) {
        const Matrix y = omicscl::row_l2_normalize(tp.value(a), eps);
        Matrix ga(g.rows(), g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            auto yr = y.row(r);
            if (clipped[r]) {
                for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) = gr[c] / denom[r];
                continue;
            }
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) dot += yr[c] * gr[c];
            for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) = (gr[c] - yr[c] * dot) / denom[r];
        }
        tp.accumulate(a, ga);
    });
}

Var sum(Tape& t, Var a) {
    double s = 0.0;
    for (double x : t.value(a).values()) s += x;
    return t.record(Matrix::scalar(s), {a}, [a](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        tp.accumulate(a, Matrix(av.rows(), av.cols(), g.item()));
    });
}

Var mean(Tape& t, Var a) {
    const double n = static_cast<double>(t.value(a).size());
    if (n == 0) throw DimensionError("mean of empty matrix");
    return scale(t, sum(t, a), 1.0 / n);
}

Var average(Tape& t, std::span<const Var> xs) {
    if (xs.empty()) throw DimensionError("average: no inputs");
    Matrix v = t.value(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) v = v + t.value(xs[i]);
    const double w = 1.0 / static_cast<double>(xs.size());
    v = w * v;
    std::vector<Var> parents(xs.begin(), xs.end());
    return t.record(std::move(v), xs, [parents, w](Tape& tp, const Matrix& g) {
        const Matrix gw = w * g;
        for (Var p : parents) tp.accumulate(p, gw);
    });
}

Var hconcat(Tape& t, std::span<const Var> xs) {
    std::vector<Matrix> blocks;
    std::vector<std::size_t> widths;
    for (Var x : xs) {
        blocks.push_back(t.value(x));
        widths.push_back(t.value(x).cols());
    }
    std::vector<Var> parents(xs.begin(), xs.end());
    return t.record(omicscl::hconcat(blocks), xs, [parents, widths](Tape& tp, const Matrix& g) {
        std::size_t off = 0;
        for (std::size_t b = 0; b < parents.size(); ++b) {
            if (tp.requires_grad(parents[b])) {
                Matrix gb(g.rows(), widths[b]);
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < widths[b]; ++c) gb(r, c) = g(r, off + c);
                tp.accumulate(parents[b], gb);
            }
            off += widths[b];
        }
    });
}

Var batch_norm_train(Tape& t, Var x, Var gamma, Var beta, double eps, BatchMoments* moments) {
    const Matrix& xv = t.value(x);
    const std::size_t n = xv.rows(), d = xv.cols();
    if (n < 2) throw DimensionError("batch_norm_train: batch size must be >= 2");
    if (t.value(gamma).size() != d || t.value(beta).size() != d)
        throw DimensionError("batch_norm_train: gamma/beta width mismatch");
    const auto mu = column_means(xv);
    std::vector<double> var(d, 0.0), inv_std(d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = xv(r, c) - mu[c];
            var[c] += dev * dev;
        }
    for (std::size_t c = 0; c < d; ++c) {
        var[c] /= static_cast<double>(n);
        inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    }
    Matrix xhat(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) xhat(r, c) = (xv(r, c) - mu[c]) * inv_std[c];
    const Matrix& gv = t.value(gamma);
    const Matrix& bv = t.value(beta);
    Matrix y(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) y(r, c) = gv[c] * xhat(r, c) + bv[c];
    if (moments) *moments = {mu, var};

    return t.record(std::move(y), {x, gamma, beta},
                    [x, gamma, beta, xhat, inv_std](Tape& tp, const Matrix& g) {
        const std::size_t n = g.rows(), d = g.cols();
        const Matrix& gv = tp.value(gamma);
        Matrix dgamma(gv.rows(), gv.cols());
        Matrix dbeta(tp.value(beta).rows(), tp.value(beta).cols());
        std::vector<double> sum_dxhat(d, 0.0), sum_dxhat_xhat(d, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                dgamma[c] += g(r, c) * xhat(r, c);
                dbeta[c] += g(r, c);
                const double dxh = g(r, c) * gv[c];
                sum_dxhat[c] += dxh;
                sum_dxhat_xhat[c] += dxh * xhat(r, c);
            }
        if (tp.requires_grad(x)) {
            Matrix dx(n, d);
            const double nn = static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxh = g(r, c) * gv[c];
                    dx(r, c) = inv_std[c] / nn * (nn * dxh - sum_dxhat[c] - xhat(r, c) * sum_dxhat_xhat[c]);
                }
            tp.accumulate(x, dx);
        }
        tp.accumulate(gamma, dgamma);
        tp.accumulate(beta, dbeta);
    });
}

Var batch_norm_eval(Tape& t, Var x, Var gamma, Var beta, std::span<const double> mean,
                    std::span<const double> var, double eps) {
    const Matrix& xv = t.value(x);
    const std::size_t n = xv.rows(), d = xv.cols();
    if (mean.size() != d || var.size() != d || t.value(gamma).size() != d || t.value(beta).size() != d)
        throw DimensionError("batch_norm_eval: width mismatch");
    std::vector<double> inv_std(d);
    for (std::size_t c = 0; c < d; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    Matrix xhat(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) xhat(r, c) = (xv(r, c) - mean[c]) * inv_std[c];
    const Matrix& gv = t.value(gamma);
    const Matrix& bv = t.value(beta);
    Matrix y(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) y(r, c) = gv[c] * xhat(r, c) + bv[c];

    return t.record(std::move(y), {x, gamma, beta},
                    [x, gamma, beta, xhat, inv_std](Tape& tp, const Matrix& g) {
        const std::size_t n = g.rows(), d = g.cols();
        const Matrix& gv = tp.value(gamma);
        Matrix dgamma(tp.value(gamma).rows(), tp.value(gamma).cols());
        Matrix dbeta(tp.value(beta).rows(), tp.value(beta).cols());
        Matrix dx(n, d);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                dgamma[c] += g(r, c) * xhat(r, c);
                dbeta[c] += g(r, c);
                dx(r, c) = g(r, c) * gv[c] * inv_std[c];
            }
        tp.accumulate(x, dx);
        tp.accumulate(gamma, dgamma);
        tp.accumulate(beta, dbeta);
    });
}

}  // namespace omicscl::ad

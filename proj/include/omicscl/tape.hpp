#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// Nodes are appended in evaluation order, so index order is a topological
// order and the backward sweep is a single reverse pass over the node list.
// Each op records its value and a closure that pushes the node's adjoint to
// its parents.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "omicscl/matrix.hpp"

namespace omicscl::ad {

struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const noexcept { return id != std::numeric_limits<std::size_t>::max(); }
};

class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    // Trainable input; gradients are reported for these.
    Var leaf(Matrix value);
    Var constant(Matrix value);
    // Records an op result. The node requires a gradient iff any parent does.
    Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
    Var record(Matrix value, std::span<const Var> parents, Backward backward);

    const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    // Adds g into the adjoint of v. Silently ignored for constants.
    void accumulate(Var v, const Matrix& g);

    // Seeds d(out)/d(out) = 1 and sweeps the tape once in reverse.
    void backward(Var out);

    // Adjoint of v after backward(); zeros if nothing flowed into it.
    Matrix grad(Var v) const;

    std::vector<Var> leaves() const;
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        bool requires_grad = false;
        bool is_leaf = false;
        bool has_grad = false;
    };
    std::vector<Node> nodes_;
};

// Runs the backward pass from a scalar output and returns the gradient of every
// leaf, in leaf creation order.
std::vector<Matrix> grad(Tape& tape, Var output);

// ------------------------------------------------------------------ ops

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);            // elementwise
Var scale(Tape& t, Var a, double s);
Var add_row(Tape& t, Var a, Var row);      // a + broadcast(row), row is 1 x cols
Var relu(Tape& t, Var a);
Var square(Tape& t, Var a);
Var row_l2_normalize(Tape& t, Var a, double eps = 1e-12);
Var sum(Tape& t, Var a);                   // 1x1
Var mean(Tape& t, Var a);                  // 1x1
Var average(Tape& t, std::span<const Var> xs);
Var hconcat(Tape& t, std::span<const Var> xs);

struct BatchMoments {
    std::vector<double> mean;
    std::vector<double> var;  // biased (divide by N)
};

// Batch normalization with statistics of the current batch.
Var batch_norm_train(Tape& t, Var x, Var gamma, Var beta, double eps, BatchMoments* moments = nullptr);
// Batch normalization with fixed statistics (inference).
Var batch_norm_eval(Tape& t, Var x, Var gamma, Var beta, std::span<const double> mean,
                    std::span<const double> var, double eps);

}  // namespace omicscl::ad

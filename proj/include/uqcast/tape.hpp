#pragma once

#include <cstdint>
#include <vector>

#include "uqcast/matrix.hpp"

namespace uqcast {

/// Reverse-mode computation record. Rebuilt per forward pass (define-by-run);
/// nodes are stored in topological order and the backward pass visits each
/// node exactly once in reverse. All values are checked finite as they are
/// produced; a NaN/Inf result raises NumericError naming the operation.
class Tape {
public:
    enum class Op : uint8_t {
        leaf,
        matmul,
        add,
        sub,
        hadamard,
        scale,
        tanh_fn,
        sigmoid_fn,
        leaky_relu,
        exp_fn,
        log_fn,
        square_fn,
        clamp_fn,
        concat_rows,
        slice_rows,
        add_bias,
        mean_all,
        sum_all,
        layer_norm,
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Record an input value. Parameters set needs_grad; plain constants
    /// (targets, dropout masks) do not and are skipped during backward.
    int leaf(Matrix value, bool needs_grad);

    int matmul(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int hadamard(int a, int b);
    int scale(int a, double c);
    int tanh(int a);
    int sigmoid(int a);
    int leaky_relu(int a, double alpha);
    int exp(int a);
    int log(int a);
    int square(int a);
    int clamp(int a, double lo, double hi);
    /// Stack a on top of b: rows(a)+rows(b) x cols.
    int concat_rows(int a, int b);
    /// Rows [r0, r1) of a.
    int slice_rows(int a, int r0, int r1);
    /// a (H x B) plus column vector bias (H x 1) broadcast over columns.
    int add_bias(int a, int bias);
    int mean_all(int a);
    int sum_all(int a);
    /// Per-column normalization of x (H x B) with scale/shift (H x 1).
    int layer_norm(int x, int gamma, int beta, double eps);

    /// Gradient of a scalar root with respect to every recorded node that
    /// needs one. Seed gradient at the root is 1.
    void backward(int root);

    const Matrix& val(int id) const { return nodes_[id].value; }
    /// Valid after backward(); zero matrix if the node received no gradient.
    const Matrix& grad(int id) const;
    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        double p0 = 0.0, p1 = 0.0;
        int i0 = 0, i1 = 0;
        bool needs_grad = false;
        Matrix value;
        Matrix aux0; // layer_norm: xhat
        Matrix aux1; // layer_norm: 1/sigma per column
    };

    int push(Node n, const char* opname);
    Matrix& grad_ref(int id);
    void check_id(int id) const;

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
    Matrix empty_grad_;
};

} // namespace uqcast

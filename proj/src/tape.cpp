#include "uqcast/tape.hpp"

#include <cmath>
#include <string>

#include "uqcast/errors.hpp"

namespace uqcast {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

void Tape::check_id(int id) const {
    if (id < 0 || size_t(id) >= nodes_.size())
        throw NumericError("tape: invalid node id " + std::to_string(id));
}

int Tape::push(Node n, const char* opname) {
    if (!n.value.all_finite())
        throw NumericError(std::string("non-finite values produced by ") + opname);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Tape::leaf(Matrix value, bool needs_grad) {
    Node n;
    n.op = Op::leaf;
    n.needs_grad = needs_grad;
    n.value = std::move(value);
    return push(std::move(n), "leaf");
}

int Tape::matmul(int a, int b) {
    check_id(a);
    check_id(b);
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = uqcast::matmul(nodes_[a].value, nodes_[b].value);
    return push(std::move(n), "matmul");
}

int Tape::add(int a, int b) {
    check_id(a);
    check_id(b);
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = uqcast::add(nodes_[a].value, nodes_[b].value);
    return push(std::move(n), "add");
}

int Tape::sub(int a, int b) {
    check_id(a);
    check_id(b);
    Node n;
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = uqcast::sub(nodes_[a].value, nodes_[b].value);
    return push(std::move(n), "sub");
}

int Tape::hadamard(int a, int b) {
    check_id(a);
    check_id(b);
    Node n;
    n.op = Op::hadamard;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = uqcast::hadamard(nodes_[a].value, nodes_[b].value);
    return push(std::move(n), "hadamard");
}

int Tape::scale(int a, double c) {
    check_id(a);
    Node n;
    n.op = Op::scale;
    n.a = a;
    n.p0 = c;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = uqcast::scale(nodes_[a].value, c);
    return push(std::move(n), "scale");
}

int Tape::tanh(int a) {
    check_id(a);
    Node n;
    n.op = Op::tanh_fn;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw()) x = std::tanh(x);
    return push(std::move(n), "tanh");
}

int Tape::sigmoid(int a) {
    check_id(a);
    Node n;
    n.op = Op::sigmoid_fn;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw()) x = stable_sigmoid(x);
    return push(std::move(n), "sigmoid");
}

int Tape::leaky_relu(int a, double alpha) {
    check_id(a);
    Node n;
    n.op = Op::leaky_relu;
    n.a = a;
    n.p0 = alpha;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw())
        if (x < 0.0) x *= alpha;
    return push(std::move(n), "leaky_relu");
}

int Tape::exp(int a) {
    check_id(a);
    Node n;
    n.op = Op::exp_fn;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw()) x = std::exp(x);
    return push(std::move(n), "exp");
}

int Tape::log(int a) {
    check_id(a);
    for (double x : nodes_[a].value.raw())
        if (x <= 0.0)
            throw NumericError("log of non-positive entry " + std::to_string(x));
    Node n;
    n.op = Op::log_fn;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw()) x = std::log(x);
    return push(std::move(n), "log");
}

int Tape::square(int a) {
    check_id(a);
    Node n;
    n.op = Op::square_fn;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw()) x *= x;
    return push(std::move(n), "square");
}

int Tape::clamp(int a, double lo, double hi) {
    check_id(a);
    Node n;
    n.op = Op::clamp_fn;
    n.a = a;
    n.p0 = lo;
    n.p1 = hi;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& x : n.value.raw()) x = x < lo ? lo : (x > hi ? hi : x);
    return push(std::move(n), "clamp");
}

int Tape::concat_rows(int a, int b) {
    check_id(a);
    check_id(b);
    const Matrix& va = nodes_[a].value;
    const Matrix& vb = nodes_[b].value;
    if (va.cols() != vb.cols())
        throw ShapeError("concat_rows: column mismatch " + va.shape_str() + " vs " +
                         vb.shape_str());
    Node n;
    n.op = Op::concat_rows;
    n.a = a;
    n.b = b;
    n.i0 = va.rows();
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    Matrix out(va.rows() + vb.rows(), va.cols());
    for (int i = 0; i < va.rows(); ++i)
        for (int j = 0; j < va.cols(); ++j) out(i, j) = va(i, j);
    for (int i = 0; i < vb.rows(); ++i)
        for (int j = 0; j < vb.cols(); ++j) out(va.rows() + i, j) = vb(i, j);
    n.value = std::move(out);
    return push(std::move(n), "concat_rows");
}

int Tape::slice_rows(int a, int r0, int r1) {
    check_id(a);
    const Matrix& va = nodes_[a].value;
    if (r0 < 0 || r1 > va.rows() || r0 >= r1)
        throw ShapeError("slice_rows: range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") invalid for " + va.shape_str());
    Node n;
    n.op = Op::slice_rows;
    n.a = a;
    n.i0 = r0;
    n.i1 = r1;
    n.needs_grad = nodes_[a].needs_grad;
    Matrix out(r1 - r0, va.cols());
    for (int i = r0; i < r1; ++i)
        for (int j = 0; j < va.cols(); ++j) out(i - r0, j) = va(i, j);
    n.value = std::move(out);
    return push(std::move(n), "slice_rows");
}

int Tape::add_bias(int a, int bias) {
    check_id(a);
    check_id(bias);
    const Matrix& va = nodes_[a].value;
    const Matrix& vb = nodes_[bias].value;
    if (vb.cols() != 1 || vb.rows() != va.rows())
        throw ShapeError("add_bias: bias " + vb.shape_str() + " does not match " + va.shape_str());
    Node n;
    n.op = Op::add_bias;
    n.a = a;
    n.b = bias;
    n.needs_grad = nodes_[a].needs_grad || nodes_[bias].needs_grad;
    n.value = va;
    for (int i = 0; i < va.rows(); ++i) {
        const double bi = vb(i, 0);
        for (int j = 0; j < va.cols(); ++j) n.value(i, j) += bi;
    }
    return push(std::move(n), "add_bias");
}

int Tape::mean_all(int a) {
    check_id(a);
    const Matrix& va = nodes_[a].value;
    if (va.empty()) throw ShapeError("mean_all: empty matrix");
    Node n;
    n.op = Op::mean_all;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    double s = 0.0;
    for (double x : va.raw()) s += x;
    n.value = Matrix(1, 1);
    n.value(0, 0) = s / double(va.size());
    return push(std::move(n), "mean_all");
}

int Tape::sum_all(int a) {
    check_id(a);
    Node n;
    n.op = Op::sum_all;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    double s = 0.0;
    for (double x : nodes_[a].value.raw()) s += x;
    n.value = Matrix(1, 1);
    n.value(0, 0) = s;
    return push(std::move(n), "sum_all");
}

int Tape::layer_norm(int x, int gamma, int beta, double eps) {
    check_id(x);
    check_id(gamma);
    check_id(beta);
    const Matrix& vx = nodes_[x].value;
    const Matrix& vg = nodes_[gamma].value;
    const Matrix& vb = nodes_[beta].value;
    const int H = vx.rows(), B = vx.cols();
    if (H < 2) throw ShapeError("layer_norm: need at least 2 coordinates, got " + vx.shape_str());
    if (vg.rows() != H || vg.cols() != 1 || vb.rows() != H || vb.cols() != 1)
        throw ShapeError("layer_norm: gamma " + vg.shape_str() + " / beta " + vb.shape_str() +
                         " do not match input " + vx.shape_str());
    if (eps <= 0.0) throw NumericError("layer_norm: eps must be positive");
    Node n;
    n.op = Op::layer_norm;
    n.a = x;
    n.b = gamma;
    n.c = beta;
    n.p0 = eps;
    n.needs_grad = nodes_[x].needs_grad || nodes_[gamma].needs_grad || nodes_[beta].needs_grad;
    n.value = Matrix(H, B);
    n.aux0 = Matrix(H, B);
    n.aux1 = Matrix(1, B);
    for (int j = 0; j < B; ++j) {
        double mu = 0.0;
        for (int i = 0; i < H; ++i) mu += vx(i, j);
        mu /= H;
        double var = 0.0;
        for (int i = 0; i < H; ++i) {
            const double d = vx(i, j) - mu;
            var += d * d;
        }
        var /= H;
        const double inv_sigma = 1.0 / std::sqrt(var + eps);
        n.aux1(0, j) = inv_sigma;
        for (int i = 0; i < H; ++i) {
            const double xhat = (vx(i, j) - mu) * inv_sigma;
            n.aux0(i, j) = xhat;
            n.value(i, j) = vg(i, 0) * xhat + vb(i, 0);
        }
    }
    return push(std::move(n), "layer_norm");
}

const Matrix& Tape::grad(int id) const {
    check_id(id);
    if (grads_.empty() || grads_[id].empty()) return empty_grad_;
    return grads_[id];
}

Matrix& Tape::grad_ref(int id) {
    Matrix& g = grads_[id];
    if (g.empty()) g = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
    return g;
}

void Tape::backward(int root) {
    check_id(root);
    const Matrix& rv = nodes_[root].value;
    if (rv.rows() != 1 || rv.cols() != 1)
        throw NumericError("backward: root must be scalar, got " + rv.shape_str());
    grads_.assign(nodes_.size(), Matrix());
    grad_ref(root)(0, 0) = 1.0;

    for (int i = root; i >= 0; --i) {
        const Node& n = nodes_[i];
        if (!n.needs_grad || grads_[i].empty()) continue;
        const Matrix& g = grads_[i];
        const bool ga = n.a >= 0 && nodes_[n.a].needs_grad;
        const bool gb = n.b >= 0 && nodes_[n.b].needs_grad;
        const bool gc = n.c >= 0 && nodes_[n.c].needs_grad;
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            if (ga) {
                Matrix da = matmul_nt(g, nodes_[n.b].value);
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += da.raw()[k];
            }
            if (gb) {
                Matrix db = matmul_tn(nodes_[n.a].value, g);
                Matrix& acc = grad_ref(n.b);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += db.raw()[k];
            }
            break;
        }
        case Op::add: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k];
            }
            if (gb) {
                Matrix& acc = grad_ref(n.b);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k];
            }
            break;
        }
        case Op::sub: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k];
            }
            if (gb) {
                Matrix& acc = grad_ref(n.b);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] -= g.raw()[k];
            }
            break;
        }
        case Op::hadamard: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const Matrix& vb = nodes_[n.b].value;
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k] * vb.raw()[k];
            }
            if (gb) {
                Matrix& acc = grad_ref(n.b);
                const Matrix& va = nodes_[n.a].value;
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k] * va.raw()[k];
            }
            break;
        }
        case Op::scale: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += n.p0 * g.raw()[k];
            }
            break;
        }
        case Op::tanh_fn: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) {
                    const double y = n.value.raw()[k];
                    acc.raw()[k] += g.raw()[k] * (1.0 - y * y);
                }
            }
            break;
        }
        case Op::sigmoid_fn: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) {
                    const double y = n.value.raw()[k];
                    acc.raw()[k] += g.raw()[k] * y * (1.0 - y);
                }
            }
            break;
        }
        case Op::leaky_relu: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const Matrix& va = nodes_[n.a].value;
                for (size_t k = 0; k < acc.size(); ++k)
                    acc.raw()[k] += g.raw()[k] * (va.raw()[k] >= 0.0 ? 1.0 : n.p0);
            }
            break;
        }
        case Op::exp_fn: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k] * n.value.raw()[k];
            }
            break;
        }
        case Op::log_fn: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const Matrix& va = nodes_[n.a].value;
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k] / va.raw()[k];
            }
            break;
        }
        case Op::square_fn: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const Matrix& va = nodes_[n.a].value;
                for (size_t k = 0; k < acc.size(); ++k)
                    acc.raw()[k] += g.raw()[k] * 2.0 * va.raw()[k];
            }
            break;
        }
        case Op::clamp_fn: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const Matrix& va = nodes_[n.a].value;
                for (size_t k = 0; k < acc.size(); ++k) {
                    const double x = va.raw()[k];
                    if (x > n.p0 && x < n.p1) acc.raw()[k] += g.raw()[k];
                }
            }
            break;
        }
        case Op::concat_rows: {
            const int ra = n.i0;
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (int r = 0; r < acc.rows(); ++r)
                    for (int col = 0; col < acc.cols(); ++col) acc(r, col) += g(r, col);
            }
            if (gb) {
                Matrix& acc = grad_ref(n.b);
                for (int r = 0; r < acc.rows(); ++r)
                    for (int col = 0; col < acc.cols(); ++col) acc(r, col) += g(ra + r, col);
            }
            break;
        }
        case Op::slice_rows: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (int r = n.i0; r < n.i1; ++r)
                    for (int col = 0; col < acc.cols(); ++col) acc(r, col) += g(r - n.i0, col);
            }
            break;
        }
        case Op::add_bias: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += g.raw()[k];
            }
            if (gb) {
                Matrix& acc = grad_ref(n.b);
                for (int r = 0; r < g.rows(); ++r) {
                    double s = 0.0;
                    for (int col = 0; col < g.cols(); ++col) s += g(r, col);
                    acc(r, 0) += s;
                }
            }
            break;
        }
        case Op::mean_all: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const double gv = g(0, 0) / double(acc.size());
                for (double& x : acc.raw()) x += gv;
            }
            break;
        }
        case Op::sum_all: {
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                const double gv = g(0, 0);
                for (double& x : acc.raw()) x += gv;
            }
            break;
        }
        case Op::layer_norm: {
            const Matrix& vg = nodes_[n.b].value;
            const Matrix& xhat = n.aux0;
            const int H = n.value.rows(), B = n.value.cols();
            if (gc) {
                Matrix& acc = grad_ref(n.c);
                for (int r = 0; r < H; ++r) {
                    double s = 0.0;
                    for (int col = 0; col < B; ++col) s += g(r, col);
                    acc(r, 0) += s;
                }
            }
            if (gb) {
                Matrix& acc = grad_ref(n.b);
                for (int r = 0; r < H; ++r) {
                    double s = 0.0;
                    for (int col = 0; col < B; ++col) s += g(r, col) * xhat(r, col);
                    acc(r, 0) += s;
                }
            }
            if (ga) {
                Matrix& acc = grad_ref(n.a);
                for (int col = 0; col < B; ++col) {
                    double m1 = 0.0, m2 = 0.0;
                    for (int r = 0; r < H; ++r) {
                        const double gg = vg(r, 0) * g(r, col);
                        m1 += gg;
                        m2 += gg * xhat(r, col);
                    }
                    m1 /= H;
                    m2 /= H;
                    const double inv_sigma = n.aux1(0, col);
                    for (int r = 0; r < H; ++r) {
                        const double gg = vg(r, 0) * g(r, col);
                        acc(r, col) += inv_sigma * (gg - m1 - xhat(r, col) * m2);
                    }
                }
            }
            break;
        }
        }
    }
}

} // namespace uqcast

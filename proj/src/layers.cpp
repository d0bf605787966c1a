#include "uqcast/layers.hpp"

#include <cmath>

#include "uqcast/errors.hpp"

namespace uqcast {

LayerNormParams LayerNormParams::make(int h, double eps) {
    LayerNormParams p;
    p.gamma = Matrix::filled(h, 1, 1.0);
    p.beta = Matrix(h, 1);
    p.eps = eps;
    return p;
}

Matrix init_params(int rows, int cols, RngStream& rng, InitKind kind) {
    if (rows <= 0 || cols <= 0)
        throw ShapeError("init_params: invalid shape (" + std::to_string(rows) + "x" +
                         std::to_string(cols) + ")");
    switch (kind) {
    case InitKind::zeros:
        return Matrix(rows, cols);
    case InitKind::forget_bias_one:
        return Matrix::filled(rows, cols, 1.0);
    case InitKind::glorot_uniform: {
        const double a = std::sqrt(6.0 / double(rows + cols));
        Matrix m(rows, cols);
        for (double& x : m.raw()) x = rng.uniform(-a, a);
        return m;
    }
    }
    throw NumericError("init_params: unknown kind");
}

std::vector<double> init_spectral_u(int rows, RngStream& rng) {
    std::vector<double> u(rows);
    double norm = 0.0;
    for (double& x : u) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        u.assign(rows, 0.0);
        u[0] = 1.0;
        return u;
    }
    for (double& x : u) x /= norm;
    return u;
}

Matrix draw_dropout_mask(int rows, int cols, double rate, RngStream& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw NumericError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(rows, cols);
    for (double& x : mask.raw()) x = rng.uniform01() >= rate ? keep_scale : 0.0;
    return mask;
}

int apply_mask_tape(Tape& t, int x, const Matrix& mask) {
    const int m = t.leaf(mask, false);
    return t.hadamard(x, m);
}

int apply_dropout_tape(Tape& t, int x, const DropoutSpec& drop, RngStream& rng) {
    if (!drop.active()) return x;
    const Matrix& v = t.val(x);
    return apply_mask_tape(t, x, draw_dropout_mask(v.rows(), v.cols(), drop.rate, rng));
}

LstmStepNodes lstm_step_tape(Tape& t, const LstmGateNodes& g, int h_prev, int c_prev, int x_t,
                             const DropoutSpec& drop, RngStream& rng, const Matrix* fixed_mask) {
    const int hx = t.concat_rows(h_prev, x_t);
    const int f = t.sigmoid(t.add_bias(t.matmul(g.Wf, hx), g.bf));
    const int i = t.sigmoid(t.add_bias(t.matmul(g.Wi, hx), g.bi));
    const int o = t.sigmoid(t.add_bias(t.matmul(g.Wo, hx), g.bo));
    int ctilde = t.tanh(t.add_bias(t.matmul(g.Wc, hx), g.bc));
    if (drop.active())
        ctilde = fixed_mask ? apply_mask_tape(t, ctilde, *fixed_mask)
                            : apply_dropout_tape(t, ctilde, drop, rng);
    const int c = t.add(t.hadamard(f, c_prev), t.hadamard(i, ctilde));
    const int h = t.hadamard(o, t.tanh(c));
    return {h, c};
}

LstmState lstm_step(const LstmParams& params, const LstmState& state, const Matrix& x_t,
                    const DropoutSpec& drop, RngStream& rng) {
    const int H = params.hidden(), D = params.input();
    if (x_t.rows() != D || state.h.rows() != H || state.C.rows() != H ||
        x_t.cols() != state.h.cols())
        throw ShapeError("lstm_step: x " + x_t.shape_str() + " / h " + state.h.shape_str() +
                         " do not match params expecting D=" + std::to_string(D) +
                         ", H=" + std::to_string(H));
    Tape t;
    LstmGateNodes g{t.leaf(params.Wf, false), t.leaf(params.Wi, false), t.leaf(params.Wo, false),
                    t.leaf(params.Wc, false), t.leaf(params.bf, false), t.leaf(params.bi, false),
                    t.leaf(params.bo, false), t.leaf(params.bc, false)};
    const int h_prev = t.leaf(state.h, false);
    const int c_prev = t.leaf(state.C, false);
    const int x = t.leaf(x_t, false);
    const LstmStepNodes out = lstm_step_tape(t, g, h_prev, c_prev, x, drop, rng);
    return LstmState{t.val(out.h), t.val(out.C)};
}

Matrix dense_forward(const DenseParams& params, const Matrix& x, const DropoutSpec& drop,
                     RngStream& rng) {
    if (x.rows() != params.w.cols())
        throw ShapeError("dense_forward: input " + x.shape_str() + " does not match weights " +
                         params.w.shape_str());
    Matrix z = matmul(params.w, x);
    for (int i = 0; i < z.rows(); ++i)
        for (int j = 0; j < z.cols(); ++j) z(i, j) += params.b(i, 0);
    if (params.act == Activation::leaky_relu)
        for (double& v : z.raw())
            if (v < 0.0) v *= params.alpha;
    if (drop.active()) z = hadamard(z, draw_dropout_mask(z.rows(), z.cols(), drop.rate, rng));
    if (!z.all_finite()) throw NumericError("dense_forward produced non-finite values");
    return z;
}

Matrix layer_norm(const LayerNormParams& params, const Matrix& x) {
    Tape t;
    const int xn = t.leaf(x, false);
    const int g = t.leaf(params.gamma, false);
    const int b = t.leaf(params.beta, false);
    return t.val(t.layer_norm(xn, g, b, params.eps));
}

namespace {

// v <- normalize(w^T u); u <- normalize(w v); returns sigma = ||w v||.
double power_step(const Matrix& w, std::vector<double>& u) {
    const int rows = w.rows(), cols = w.cols();
    std::vector<double> v(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
        const double ui = u[i];
        for (int j = 0; j < cols; ++j) v[j] += w(i, j) * ui;
    }
    double vn = 0.0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn);
    if (vn == 0.0) {
        // u landed in the left null space; restart from the largest row
        int best = 0;
        double best_norm = -1.0;
        for (int i = 0; i < rows; ++i) {
            double rn = 0.0;
            for (int j = 0; j < cols; ++j) rn += w(i, j) * w(i, j);
            if (rn > best_norm) {
                best_norm = rn;
                best = i;
            }
        }
        u.assign(size_t(rows), 0.0);
        u[best] = 1.0;
        return power_step(w, u);
    }
    for (double& x : v) x /= vn;
    std::vector<double> wv(rows, 0.0);
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += w(i, j) * v[j];
        wv[i] = s;
    }
    double sigma = 0.0;
    for (double x : wv) sigma += x * x;
    sigma = std::sqrt(sigma);
    for (int i = 0; i < rows; ++i) u[i] = wv[i] / sigma;
    return sigma;
}

} // namespace

SpectralResult spectral_normalize(const Matrix& w, SpectralState& state) {
    if (w.frobenius_norm() == 0.0)
        throw NumericError("spectral_normalize: zero matrix has no defined norm");
    if (int(state.u.size()) != w.rows()) {
        state.u.assign(size_t(w.rows()), 1.0 / std::sqrt(double(w.rows())));
    }
    double sigma = 0.0;
    const int iters = state.n_iter < 1 ? 1 : state.n_iter;
    for (int k = 0; k < iters; ++k) sigma = power_step(w, state.u);
    return SpectralResult{scale(w, 1.0 / sigma), sigma};
}

double spectral_sigma_frozen(const Matrix& w, std::vector<double> u, int iters) {
    if (w.frobenius_norm() == 0.0)
        throw NumericError("spectral_sigma_frozen: zero matrix has no defined norm");
    if (int(u.size()) != w.rows()) u.assign(size_t(w.rows()), 1.0 / std::sqrt(double(w.rows())));
    double sigma = 0.0;
    for (int k = 0; k < iters; ++k) sigma = power_step(w, u);
    return sigma;
}

} // namespace uqcast

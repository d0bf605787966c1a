#pragma once

#include <utility>
#include <vector>

#include "uqcast/matrix.hpp"
#include "uqcast/rng.hpp"
#include "uqcast/tape.hpp"

namespace uqcast {

enum class DropoutMode { off, train, mc };

/// Inverted dropout: masks drawn Bernoulli(1-p), survivors scaled by 1/(1-p).
struct DropoutSpec {
    double rate = 0.0;
    DropoutMode mode = DropoutMode::off;
    bool active() const { return mode != DropoutMode::off && rate > 0.0; }
};

/// Gate weights act on the concatenation [h_{t-1}, x_t]: each W is (H, H+D).
struct LstmParams {
    Matrix Wf, Wi, Wo, Wc;
    Matrix bf, bi, bo, bc; // (H, 1)
    int hidden() const { return Wf.rows(); }
    int input() const { return Wf.cols() - Wf.rows(); }
};

struct LstmState {
    Matrix h, C; // (H, B), zero-initialized at sequence start
};

enum class Activation { leaky_relu, linear };

struct DenseParams {
    Matrix w; // (out, in)
    Matrix b; // (out, 1)
    Activation act = Activation::leaky_relu;
    double alpha = 0.3;
};

struct LayerNormParams {
    Matrix gamma, beta; // (H, 1)
    double eps = 1e-5;
    static LayerNormParams make(int h, double eps = 1e-5);
};

/// Persisted left power-iteration vector for one normalized weight matrix.
struct SpectralState {
    std::vector<double> u; // unit L2 norm after every update
    int n_iter = 1;        // steps per training forward
};

enum class InitKind { glorot_uniform, zeros, forget_bias_one };

/// glorot_uniform draws U(-a, a) with a = sqrt(6 / (fan_in + fan_out)),
/// fan_in = cols, fan_out = rows. Draw order is row-major.
Matrix init_params(int rows, int cols, RngStream& rng, InitKind kind);

/// Random unit vector for power-iteration warm start.
std::vector<double> init_spectral_u(int rows, RngStream& rng);

// -- tape builders (shared by the model assembly and the gradient tests) --

/// Mask leaf + hadamard; identity when dropout is inactive.
int apply_dropout_tape(Tape& t, int x, const DropoutSpec& drop, RngStream& rng);
/// Same, with a caller-held mask (fixed-mask recurrent variant).
int apply_mask_tape(Tape& t, int x, const Matrix& mask);
Matrix draw_dropout_mask(int rows, int cols, double rate, RngStream& rng);

struct LstmGateNodes {
    int Wf, Wi, Wo, Wc, bf, bi, bo, bc;
};

struct LstmStepNodes {
    int h, C;
};

/// One LSTM time step on the tape: sigmoid gates on [h_{t-1}, x_t], tanh
/// candidate, recurrent dropout applied to the candidate only, then
/// C_t = f (*) C_{t-1} + i (*) d(C~_t) and h_t = o (*) tanh(C_t).
LstmStepNodes lstm_step_tape(Tape& t, const LstmGateNodes& g, int h_prev, int c_prev, int x_t,
                             const DropoutSpec& drop, RngStream& rng,
                             const Matrix* fixed_mask = nullptr);

// -- eager single-vector forms --

LstmState lstm_step(const LstmParams& params, const LstmState& state, const Matrix& x_t,
                    const DropoutSpec& drop, RngStream& rng);

/// activation(w x + b), then dropout on the activated output.
Matrix dense_forward(const DenseParams& params, const Matrix& x, const DropoutSpec& drop,
                     RngStream& rng);

/// gamma (x - mu)/sigma + beta with per-vector statistics over the H rows.
Matrix layer_norm(const LayerNormParams& params, const Matrix& x);

struct SpectralResult {
    Matrix normalized;
    double sigma;
};

/// Runs state.n_iter power-iteration steps (v <- normalize(w^T u);
/// u <- normalize(w v)), estimates sigma = u^T w v, updates the persisted u
/// and returns w / sigma.
SpectralResult spectral_normalize(const Matrix& w, SpectralState& state);

/// Sigma estimate from `iters` power steps starting at u, without touching
/// persisted state. Used by evaluation and verification paths.
double spectral_sigma_frozen(const Matrix& w, std::vector<double> u, int iters);

} // namespace uqcast

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "uqcast/data.hpp"
#include "uqcast/model.hpp"

namespace uqcast {

struct NllSample {
    double y;
    double y_hat;
    double s; // log-variance
};

/// (1/D) sum_i [ 1/2 exp(-s_i) (y_i - yhat_i)^2 + 1/2 s_i ], with s clamped
/// to [lo, hi] before the exp only.
double nll_loss(const std::vector<NllSample>& batch, double clamp_lo = -15.0,
                double clamp_hi = 15.0);

/// Same loss as a tape node over a (1, B) mean row and log-variance row.
int nll_loss_tape(Tape& t, int mean_node, int logvar_node, const std::vector<double>& y,
                  double clamp_lo, double clamp_hi);

/// lr 0.10, rho 0.95, eps 1e-7; accumulators zero-initialized and shaped
/// like the parameters on first use.
struct AdadeltaState {
    double lr = 0.10;
    double rho = 0.95;
    double eps = 1e-7;
    std::vector<Matrix> acc_grad_sq;
    std::vector<Matrix> acc_dx_sq;
};

/// E[g2] <- rho E[g2] + (1-rho) g2; dx = -(sqrt(E[dx2]+eps)/sqrt(E[g2]+eps)) g;
/// E[dx2] <- rho E[dx2] + (1-rho) dx2; param <- param + lr dx.
void adadelta_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                   AdadeltaState& state);

struct TrainOptions {
    int epochs = 100;
    int batch_size = 64;
    bool mc_validation = false; // validation loss via a stochastic pass instead of deterministic
    TrainScope scope;           // transfer retraining narrows this
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = 0; // 1-based; 0 when no epoch ran
    double best_val_loss = std::numeric_limits<double>::infinity();
    double wall_seconds = 0.0;
};

/// Shuffled mini-batches of the train split, Adadelta updates, per-epoch
/// validation with dropout disabled; the parameters of the epoch with the
/// lowest validation loss are retained.
TrainReport train(Model& m, const WindowedDataset& ds, const TrainOptions& opts, RngStream& rng);

void write_loss_csv(const TrainReport& report, const std::string& path);

struct GradCheckResult {
    bool pass = false;
    double max_rel_error = 0.0;
    std::string worst_param;
    int worst_index = -1;
    size_t checked = 0;
};

/// Tape gradients of the loss versus central finite differences (h = 1e-6)
/// over every parameter of a model built from `config`. Spectral sigma
/// estimates are computed once and frozen so both sides differentiate the
/// same function (sigma is a constant of the step by design).
/// `corrupt_param` perturbs one tape gradient, as a negative-control fixture.
GradCheckResult gradient_check_model(const ModelConfig& config, double tolerance,
                                     const std::string& corrupt_param = "");

} // namespace uqcast

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uqcast/layers.hpp"
#include "uqcast/scaler.hpp"
#include "uqcast/tape.hpp"

namespace uqcast {

enum class NormMode { none, layer, spectral };

std::string to_string(NormMode mode);
NormMode norm_mode_from_string(const std::string& s);

struct ModelConfig {
    std::vector<int> lstm_units{20, 20, 10};
    std::vector<int> dense_units{10, 10, 6, 2};
    double dropout_rate = 0.02;
    NormMode norm_mode = NormMode::none;
    double leaky_alpha = 0.3;
    int lookback = 12; // one hour of 5-minute samples
    int horizon = 1;
    uint64_t seed = 42;
    double s_clamp_lo = -15.0;
    double s_clamp_hi = 15.0;
    bool recurrent_mask_per_step = true;
    double ln_eps = 1e-5;
    int sn_train_iters = 1;
    int sn_eval_iters = 20;

    void validate() const;
};

struct LstmLayerParams {
    Matrix Wf, Wi, Wo, Wc; // (H, H+D)
    Matrix bf, bi, bo, bc; // (H, 1)
    Matrix ln_gamma, ln_beta;
    SpectralState sWf, sWi, sWo, sWc;
};

struct DenseLayerParams {
    Matrix w; // (out, in)
    Matrix b; // (out, 1)
    Matrix ln_gamma, ln_beta; // hidden layers under layer norm
    SpectralState sW;
};

struct Model {
    ModelConfig config;
    Scaler scaler; // fitted during training; carried in the checkpoint
    std::vector<LstmLayerParams> lstm;
    std::vector<DenseLayerParams> dense;

    size_t parameter_count() const;
    int feature_width() const; // width of the penultimate dense layer
};

/// deterministic disables all dropout; train and mc sample masks from the
/// stream. train additionally advances spectral power iteration.
enum class ForwardMode { train, mc, deterministic };

struct ForwardOutput {
    double mean = 0.0;
    double log_var = 0.0;
    std::vector<double> features;
};

struct BatchOutput {
    Matrix mean;     // (1, B)
    Matrix log_var;  // (1, B)
    Matrix features; // (F, B)
};

/// Sigma estimates computed once from the persisted u vectors (frozen, no
/// state mutation). Evaluation paths share one converged estimate; the
/// gradient check differentiates against exactly these constants.
struct SpectralCache {
    std::vector<std::array<double, 4>> lstm; // Wf, Wi, Wo, Wc per layer
    std::vector<double> dense;
    bool empty() const { return lstm.empty() && dense.empty(); }
};

SpectralCache compute_spectral_cache(const Model& m, int iters);

struct ParamBinding {
    std::string name;
    Matrix* raw;     // storage the optimizer updates
    int node;        // leaf carrying the effective (normalized) value
    double sigma;    // divisor applied to the raw value; 1 where none
    bool lstm_group; // frozen during transfer retraining
};

struct ForwardBuild {
    int mean_node = -1;
    int logvar_node = -1;
    int feat_node = -1;
    std::vector<int> input_nodes;       // per lag, only when inputs_need_grad
    std::vector<ParamBinding> bindings; // only when bind_params
};

/// Parameter groups receiving gradients and optimizer updates. Frozen
/// spectral matrices keep their persisted u untouched even in train mode.
struct TrainScope {
    bool lstm = true;
    bool dense = true;
    bool lstm_norms = true;  // gamma/beta of LSTM-side layer norms
    bool dense_norms = true; // gamma/beta of dense-side layer norms
    bool any() const { return lstm || dense || lstm_norms || dense_norms; }
};

Model build_model(const ModelConfig& config, RngStream& rng);
Model build_model(const ModelConfig& config); // stream derived from config.seed

/// Records the full unrolled forward for a batch of windows (xb is B x L,
/// one window per row) on the tape. In train mode spectral power iteration
/// advances and the persisted u vectors are updated for in-scope matrices;
/// mc and deterministic modes never mutate the model (cache or a frozen
/// 20-step estimate is used).
ForwardBuild build_forward(Tape& t, Model& m, const Matrix& xb, ForwardMode mode, RngStream& rng,
                           const SpectralCache* cache = nullptr, bool bind_params = false,
                           bool inputs_need_grad = false, const TrainScope& scope = TrainScope{});

/// Evaluation-only batched forward; rejects train mode.
BatchOutput forward_batch(const Model& m, const Matrix& xb, ForwardMode mode, RngStream& rng,
                          const SpectralCache* cache = nullptr);

ForwardOutput forward(const Model& m, const std::vector<double>& window, ForwardMode mode,
                      RngStream& rng, const SpectralCache* cache = nullptr);

/// Fixed-order parameter list; names are stable ("lstm0.Wf", "dense1.b", ...).
struct NamedParam {
    std::string name;
    Matrix* value;
    bool lstm_group;
};
std::vector<NamedParam> enumerate_params(Model& m);

constexpr int kCheckpointFormatVersion = 1;

/// Versioned JSON checkpoint; round-trips every parameter, the config, the
/// scaler and the spectral u vectors bit-exactly.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

} // namespace uqcast

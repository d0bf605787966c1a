#pragma once

#include "uqcast/analysis.hpp"
#include "uqcast/data.hpp"
#include "uqcast/training.hpp"
#include "uqcast/uncertainty.hpp"

namespace uqcast {

/// Retraining recipe: dense layers (and dense-side layer-norm parameters)
/// learn from the chronologically first `fraction` of the target series;
/// every LSTM-side parameter stays byte-identical.
struct TransferSpec {
    double fraction = 0.20;
    int epochs = 50;
    int batch_size = 64;
    bool retrain_lstm_norms = false; // switch: LSTM-side gamma/beta stay frozen by default

    TrainScope scope() const {
        TrainScope s;
        s.lstm = false;
        s.lstm_norms = retrain_lstm_norms;
        s.dense = true;
        s.dense_norms = true;
        return s;
    }
};

/// Retrains the dense stack on the leading fraction of the target series
/// (windowed with the model's own scaler, 80/20 train/val inside the slice,
/// fresh Adadelta state). LSTM parameters and the u vectors of frozen
/// spectral matrices are untouched.
TrainReport transfer_retrain(Model& m, const Series& target, const TransferSpec& spec,
                             RngStream& rng);

struct TransferEvalRow {
    bool retrained = false;
    Metrics metrics;
    std::vector<int64_t> ts;
    std::vector<double> y_true;
    std::vector<UncertaintyEstimate> estimates; // unscaled
};

struct TransferEvaluation {
    std::string dataset;
    std::vector<TransferEvalRow> rows; // no-retrain first, then retrain when requested
    TrainReport retrain_report;
    Model retrained_model;
    bool has_retrained = false;
};

/// Evaluates on the target's chronological test split (last 25% of windows),
/// which lies past the retraining slice; with_retrain adds a second row from
/// a copy retrained per `spec`.
TransferEvaluation evaluate_transfer(const Model& m, const Series& target, bool with_retrain,
                                     const TransferSpec& spec, int mc_passes, RngStream& rng);

} // namespace uqcast

#include "uqcast/transfer.hpp"

#include <cmath>

#include "uqcast/errors.hpp"

namespace uqcast {

TrainReport transfer_retrain(Model& m, const Series& target, const TransferSpec& spec,
                             RngStream& rng) {
    if (!(spec.fraction > 0.0 && spec.fraction <= 1.0))
        throw UsageError("transfer: fraction must lie in (0, 1]");
    if (!m.scaler.fitted) throw DataError("transfer: model carries no fitted scaler");
    if (!spec.scope().any()) throw DataError("transfer: empty trainable set");
    if (spec.epochs == 0) return TrainReport{};

    const size_t cut = size_t(std::floor(spec.fraction * double(target.size())));
    if (cut <= size_t(m.config.lookback + m.config.horizon))
        throw DataError("transfer: retraining slice of " + std::to_string(cut) +
                        " points is too short to window");
    Series slice;
    slice.station_id = target.station_id;
    slice.t.assign(target.t.begin(), target.t.begin() + long(cut));
    slice.flow.assign(target.flow.begin(), target.flow.begin() + long(cut));
    if (!target.gap.empty()) slice.gap.assign(target.gap.begin(), target.gap.begin() + long(cut));

    WindowedDataset ds = make_windows(slice, m.config.lookback, m.config.horizon);
    split_chronological(ds, 0.80, 0.20, 0.0);
    if (ds.n_train == 0 || ds.n_val == 0)
        throw DataError("transfer: retraining slice yields too few windows");
    apply_scaler(ds, m.scaler);

    TrainOptions opts;
    opts.epochs = spec.epochs;
    opts.batch_size = spec.batch_size;
    opts.scope = spec.scope();
    return train(m, ds, opts, rng);
}

TransferEvaluation evaluate_transfer(const Model& m, const Series& target, bool with_retrain,
                                     const TransferSpec& spec, int mc_passes, RngStream& rng) {
    if (!m.scaler.fitted) throw DataError("transfer: model carries no fitted scaler");
    WindowedDataset ds = build_dataset(target, m.config.lookback, m.config.horizon, &m.scaler);
    if (ds.n_test == 0) throw DataError("transfer: target has no test windows");

    const size_t test_begin = ds.test_begin();
    Matrix test_x(int(ds.n_test), ds.lookback);
    std::vector<double> y_true(ds.n_test);
    std::vector<int64_t> ts(ds.n_test);
    for (size_t i = 0; i < ds.n_test; ++i) {
        for (int j = 0; j < ds.lookback; ++j) test_x(int(i), j) = ds.x(int(test_begin + i), j);
        y_true[i] = ds.y_raw[test_begin + i];
        ts[i] = ds.target_ts[test_begin + i];
    }

    TransferEvaluation ev;
    ev.dataset = target.station_id;

    auto evaluate = [&](const Model& model, bool retrained, RngStream pass_rng) {
        TransferEvalRow row;
        row.retrained = retrained;
        row.ts = ts;
        row.y_true = y_true;
        const McEnsemble ens = mc_sample(model, test_x, mc_passes, pass_rng);
        row.estimates = to_unscaled(decompose(ens), model.scaler);
        std::vector<double> y_pred;
        y_pred.reserve(row.estimates.size());
        for (const auto& e : row.estimates) y_pred.push_back(e.mean);
        row.metrics = compute_metrics(y_true, y_pred);
        return row;
    };

    ev.rows.push_back(evaluate(m, false, rng.split(101)));
    if (with_retrain) {
        // Retraining sees only the leading fraction; the test windows start
        // past it, so the two never overlap.
        const size_t cut = size_t(std::floor(spec.fraction * double(target.size())));
        if (ds.start_idx[test_begin] < cut)
            throw DataError("transfer: retraining slice overlaps the evaluation windows");
        Model retrained = m;
        RngStream retrain_rng = rng.split(102);
        ev.retrain_report = transfer_retrain(retrained, target, spec, retrain_rng);
        ev.rows.push_back(evaluate(retrained, true, rng.split(103)));
        ev.retrained_model = std::move(retrained);
        ev.has_retrained = true;
    }
    return ev;
}

} // namespace uqcast

#include "uqcast/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "uqcast/csv.hpp"
#include "uqcast/errors.hpp"
#include "uqcast/gradcheck.hpp"

namespace uqcast {

double nll_loss(const std::vector<NllSample>& batch, double clamp_lo, double clamp_hi) {
    if (batch.empty()) throw DataError("nll_loss: empty batch");
    double sum = 0.0;
    for (const NllSample& s : batch) {
        if (!std::isfinite(s.y) || !std::isfinite(s.y_hat) || !std::isfinite(s.s))
            throw NumericError("nll_loss: non-finite input");
        const double sc = std::clamp(s.s, clamp_lo, clamp_hi);
        const double r = s.y - s.y_hat;
        sum += 0.5 * std::exp(-sc) * r * r + 0.5 * s.s;
    }
    return sum / double(batch.size());
}

int nll_loss_tape(Tape& t, int mean_node, int logvar_node, const std::vector<double>& y,
                  double clamp_lo, double clamp_hi) {
    const Matrix& mv = t.val(mean_node);
    if (y.empty()) throw DataError("nll_loss: empty batch");
    if (mv.rows() != 1 || mv.cols() != int(y.size()))
        throw ShapeError("nll_loss: prediction " + mv.shape_str() + " does not match " +
                         std::to_string(y.size()) + " targets");
    Matrix ym(1, int(y.size()));
    for (size_t i = 0; i < y.size(); ++i) ym(0, int(i)) = y[i];
    const int yn = t.leaf(std::move(ym), false);
    const int sq = t.square(t.sub(mean_node, yn));
    const int e = t.exp(t.scale(t.clamp(logvar_node, clamp_lo, clamp_hi), -1.0));
    const int t1 = t.scale(t.hadamard(e, sq), 0.5);
    const int t2 = t.scale(logvar_node, 0.5);
    return t.mean_all(t.add(t1, t2));
}

void adadelta_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                   AdadeltaState& state) {
    if (params.size() != grads.size())
        throw ShapeError("adadelta_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " grads");
    if (state.acc_grad_sq.empty()) {
        state.acc_grad_sq.reserve(params.size());
        state.acc_dx_sq.reserve(params.size());
        for (const Matrix* p : params) {
            state.acc_grad_sq.emplace_back(p->rows(), p->cols());
            state.acc_dx_sq.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.acc_grad_sq.size() != params.size())
        throw ShapeError("adadelta_step: state holds " + std::to_string(state.acc_grad_sq.size()) +
                         " accumulators, got " + std::to_string(params.size()) + " params");
    for (size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k];
        const Matrix& g = grads[k];
        require_same_shape(p, g, "adadelta_step");
        Matrix& eg = state.acc_grad_sq[k];
        Matrix& ex = state.acc_dx_sq[k];
        require_same_shape(p, eg, "adadelta_step accumulator");
        for (size_t i = 0; i < p.size(); ++i) {
            const double gi = g.raw()[i];
            eg.raw()[i] = state.rho * eg.raw()[i] + (1.0 - state.rho) * gi * gi;
            const double dx =
                -(std::sqrt(ex.raw()[i] + state.eps) / std::sqrt(eg.raw()[i] + state.eps)) * gi;
            ex.raw()[i] = state.rho * ex.raw()[i] + (1.0 - state.rho) * dx * dx;
            p.raw()[i] += state.lr * dx;
        }
    }
}

namespace {

std::vector<double> eval_split_losses(Model& m, const WindowedDataset& ds, size_t begin,
                                      size_t count, int chunk, ForwardMode mode, RngStream& rng,
                                      const SpectralCache* cache) {
    std::vector<double> losses;
    losses.reserve((count + size_t(chunk) - 1) / size_t(chunk));
    for (size_t lo = 0; lo < count; lo += size_t(chunk)) {
        const size_t hi = std::min(count, lo + size_t(chunk));
        const int b = int(hi - lo);
        Matrix xb(b, ds.lookback);
        std::vector<double> y(size_t(b), 0.0);
        for (int i = 0; i < b; ++i) {
            for (int j = 0; j < ds.lookback; ++j) xb(i, j) = ds.x(int(begin + lo) + i, j);
            y[size_t(i)] = ds.y_scaled[begin + lo + size_t(i)];
        }
        Tape t;
        ForwardBuild fb = build_forward(t, m, xb, mode, rng, cache);
        const int loss =
            nll_loss_tape(t, fb.mean_node, fb.logvar_node, y, m.config.s_clamp_lo,
                          m.config.s_clamp_hi);
        losses.push_back(t.val(loss)(0, 0) * double(b));
    }
    return losses;
}

} // namespace

TrainReport train(Model& m, const WindowedDataset& ds, const TrainOptions& opts, RngStream& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    if (opts.epochs < 0) throw UsageError("train: epochs must be non-negative");
    if (opts.epochs == 0) return report;
    if (!ds.scaled) throw DataError("train: dataset is not scaled");
    if (ds.n_train == 0 || ds.n_val == 0)
        throw DataError("train: dataset needs non-empty train and validation splits");
    if (opts.batch_size < 1) throw UsageError("train: batch_size must be positive");
    if (!opts.scope.any()) throw DataError("train: empty trainable set");

    m.scaler = ds.scaler;
    AdadeltaState opt_state;
    Model best = m;
    std::vector<size_t> order(ds.n_train);
    std::iota(order.begin(), order.end(), size_t(0));

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t lo = 0; lo < order.size(); lo += size_t(opts.batch_size)) {
            const size_t hi = std::min(order.size(), lo + size_t(opts.batch_size));
            const int b = int(hi - lo);
            Matrix xb(b, ds.lookback);
            std::vector<double> y(size_t(b), 0.0);
            for (int i = 0; i < b; ++i) {
                const size_t w = order[lo + size_t(i)];
                for (int j = 0; j < ds.lookback; ++j) xb(i, j) = ds.x(int(w), j);
                y[size_t(i)] = ds.y_scaled[w];
            }
            try {
                Tape t;
                ForwardBuild fb = build_forward(t, m, xb, ForwardMode::train, rng, nullptr, true,
                                                false, opts.scope);
                const int loss = nll_loss_tape(t, fb.mean_node, fb.logvar_node, y,
                                               m.config.s_clamp_lo, m.config.s_clamp_hi);
                t.backward(loss);
                std::vector<Matrix*> params;
                std::vector<Matrix> grads;
                params.reserve(fb.bindings.size());
                grads.reserve(fb.bindings.size());
                for (const ParamBinding& pb : fb.bindings) {
                    params.push_back(pb.raw);
                    grads.push_back(t.grad(pb.node));
                    if (grads.back().empty())
                        grads.back() = Matrix(pb.raw->rows(), pb.raw->cols());
                }
                adadelta_step(params, grads, opt_state);
                loss_sum += t.val(loss)(0, 0) * double(b);
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " +
                                   e.what());
            }
        }
        report.train_loss.push_back(loss_sum / double(ds.n_train));

        const ForwardMode val_mode =
            opts.mc_validation ? ForwardMode::mc : ForwardMode::deterministic;
        SpectralCache cache;
        const SpectralCache* cache_ptr = nullptr;
        if (m.config.norm_mode == NormMode::spectral) {
            cache = compute_spectral_cache(m, m.config.sn_eval_iters);
            cache_ptr = &cache;
        }
        double val_sum = 0.0;
        for (double v :
             eval_split_losses(m, ds, ds.val_begin(), ds.n_val, opts.batch_size, val_mode, rng,
                               cache_ptr))
            val_sum += v;
        const double val = val_sum / double(ds.n_val);
        if (!std::isfinite(val))
            throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                               ": non-finite validation loss");
        report.val_loss.push_back(val);
        if (val < report.best_val_loss) {
            report.best_val_loss = val;
            report.best_epoch = epoch;
            best = m;
        }
    }
    m = best;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void write_loss_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "epoch,train_loss,val_loss\n";
    for (size_t i = 0; i < report.train_loss.size(); ++i)
        out << fmt_int(int64_t(i) + 1) << ',' << fmt_double(report.train_loss[i]) << ','
            << fmt_double(report.val_loss[i]) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

GradCheckResult gradient_check_model(const ModelConfig& config, double tolerance,
                                     const std::string& corrupt_param) {
    Model m = build_model(config);
    RngStream data_rng = RngStream(config.seed).split(7);
    const int B = 3;
    Matrix xb(B, config.lookback);
    for (double& v : xb.raw()) v = data_rng.uniform(0.1, 0.9);
    std::vector<double> y(size_t(B), 0.0);
    for (double& v : y) v = data_rng.uniform(0.1, 0.9);

    SpectralCache cache;
    const SpectralCache* cache_ptr = nullptr;
    if (config.norm_mode == NormMode::spectral) {
        cache = compute_spectral_cache(m, config.sn_eval_iters);
        cache_ptr = &cache;
    }
    RngStream dummy(0);

    Tape t;
    ForwardBuild fb = build_forward(t, m, xb, ForwardMode::deterministic, dummy, cache_ptr, true);
    const int loss =
        nll_loss_tape(t, fb.mean_node, fb.logvar_node, y, config.s_clamp_lo, config.s_clamp_hi);
    t.backward(loss);

    std::vector<Matrix> tape_grads;
    size_t total = 0;
    for (const ParamBinding& pb : fb.bindings) {
        Matrix g = t.grad(pb.node);
        if (g.empty()) g = Matrix(pb.raw->rows(), pb.raw->cols());
        if (pb.name == corrupt_param)
            for (double& v : g.raw()) v = v * 1.5 + 1e-3;
        tape_grads.push_back(std::move(g));
        total += pb.raw->size();
    }

    // Loss as a function of the flattened raw parameters, sigma frozen.
    std::vector<double> theta;
    theta.reserve(total);
    for (const ParamBinding& pb : fb.bindings)
        theta.insert(theta.end(), pb.raw->raw().begin(), pb.raw->raw().end());
    auto eval = [&](const std::vector<double>& th) {
        size_t pos = 0;
        for (const ParamBinding& pb : fb.bindings) {
            std::copy(th.begin() + long(pos), th.begin() + long(pos + pb.raw->size()),
                      pb.raw->raw().begin());
            pos += pb.raw->size();
        }
        Tape ft;
        ForwardBuild ffb =
            build_forward(ft, m, xb, ForwardMode::deterministic, dummy, cache_ptr);
        const int l = nll_loss_tape(ft, ffb.mean_node, ffb.logvar_node, y, config.s_clamp_lo,
                                    config.s_clamp_hi);
        return ft.val(l)(0, 0);
    };
    const std::vector<double> fd = finite_difference_gradient(eval, theta, 1e-6);
    eval(theta); // restore original parameters

    GradCheckResult res;
    res.checked = total;
    size_t pos = 0;
    for (size_t k = 0; k < fb.bindings.size(); ++k) {
        const ParamBinding& pb = fb.bindings[k];
        for (size_t i = 0; i < pb.raw->size(); ++i, ++pos) {
            // d loss / d normalized-weight on both sides: the finite
            // difference in the raw weight scales by sigma
            const double g_fd = fd[pos] * pb.sigma;
            const double g_tape = tape_grads[k].raw()[i];
            const double rel = gradient_rel_error(g_tape, g_fd);
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = pb.name;
                res.worst_index = int(i);
            }
        }
    }
    res.pass = res.max_rel_error < tolerance;
    return res;
}

} // namespace uqcast

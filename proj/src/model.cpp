#include "uqcast/model.hpp"

#include <fstream>

#include <json.hpp>

#include "uqcast/errors.hpp"

namespace uqcast {

using nlohmann::json;

std::string to_string(NormMode mode) {
    switch (mode) {
    case NormMode::none: return "none";
    case NormMode::layer: return "layer";
    case NormMode::spectral: return "spectral";
    }
    return "none";
}

NormMode norm_mode_from_string(const std::string& s) {
    if (s == "none") return NormMode::none;
    if (s == "layer") return NormMode::layer;
    if (s == "spectral") return NormMode::spectral;
    throw UsageError("unknown norm_mode '" + s + "' (expected none, layer or spectral)");
}

void ModelConfig::validate() const {
    if (lstm_units.empty()) throw UsageError("config: lstm_units must not be empty");
    for (int u : lstm_units)
        if (u <= 0) throw UsageError("config: lstm_units entries must be positive");
    if (dense_units.empty()) throw UsageError("config: dense_units must not be empty");
    for (int u : dense_units)
        if (u <= 0) throw UsageError("config: dense_units entries must be positive");
    if (dense_units.back() != 2)
        throw UsageError("config: final dense width must be 2 (mean and log-variance head), got " +
                         std::to_string(dense_units.back()));
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw UsageError("config: dropout_rate must lie in [0, 1)");
    if (lookback < 1) throw UsageError("config: lookback must be at least 1");
    if (horizon < 1) throw UsageError("config: horizon must be at least 1");
    if (leaky_alpha < 0.0) throw UsageError("config: leaky_alpha must be non-negative");
    if (!(s_clamp_lo < s_clamp_hi)) throw UsageError("config: s_clamp bounds out of order");
    if (ln_eps <= 0.0) throw UsageError("config: ln_eps must be positive");
    if (sn_train_iters < 1 || sn_eval_iters < 1)
        throw UsageError("config: spectral iteration counts must be positive");
}

size_t Model::parameter_count() const {
    size_t n = 0;
    for (const auto& l : lstm) {
        n += l.Wf.size() + l.Wi.size() + l.Wo.size() + l.Wc.size();
        n += l.bf.size() + l.bi.size() + l.bo.size() + l.bc.size();
        n += l.ln_gamma.size() + l.ln_beta.size();
    }
    for (const auto& d : dense) {
        n += d.w.size() + d.b.size();
        n += d.ln_gamma.size() + d.ln_beta.size();
    }
    return n;
}

int Model::feature_width() const {
    const size_t nd = config.dense_units.size();
    if (nd >= 2) return config.dense_units[nd - 2];
    return config.lstm_units.back();
}

Model build_model(const ModelConfig& config, RngStream& rng) {
    config.validate();
    Model m;
    m.config = config;
    int d = 1; // scalar flow per time step
    for (int h : config.lstm_units) {
        LstmLayerParams l;
        l.Wf = init_params(h, h + d, rng, InitKind::glorot_uniform);
        l.Wi = init_params(h, h + d, rng, InitKind::glorot_uniform);
        l.Wo = init_params(h, h + d, rng, InitKind::glorot_uniform);
        l.Wc = init_params(h, h + d, rng, InitKind::glorot_uniform);
        l.bf = init_params(h, 1, rng, InitKind::forget_bias_one);
        l.bi = init_params(h, 1, rng, InitKind::zeros);
        l.bo = init_params(h, 1, rng, InitKind::zeros);
        l.bc = init_params(h, 1, rng, InitKind::zeros);
        if (config.norm_mode == NormMode::layer) {
            l.ln_gamma = Matrix::filled(h, 1, 1.0);
            l.ln_beta = Matrix(h, 1);
        }
        if (config.norm_mode == NormMode::spectral) {
            l.sWf.u = init_spectral_u(h, rng);
            l.sWi.u = init_spectral_u(h, rng);
            l.sWo.u = init_spectral_u(h, rng);
            l.sWc.u = init_spectral_u(h, rng);
            l.sWf.n_iter = l.sWi.n_iter = l.sWo.n_iter = l.sWc.n_iter = config.sn_train_iters;
        }
        m.lstm.push_back(std::move(l));
        d = h;
    }
    int in = config.lstm_units.back();
    for (size_t j = 0; j < config.dense_units.size(); ++j) {
        const int out = config.dense_units[j];
        const bool hidden = j + 1 < config.dense_units.size();
        DenseLayerParams dl;
        dl.w = init_params(out, in, rng, InitKind::glorot_uniform);
        dl.b = init_params(out, 1, rng, InitKind::zeros);
        if (config.norm_mode == NormMode::layer && hidden) {
            dl.ln_gamma = Matrix::filled(out, 1, 1.0);
            dl.ln_beta = Matrix(out, 1);
        }
        if (config.norm_mode == NormMode::spectral) {
            dl.sW.u = init_spectral_u(out, rng);
            dl.sW.n_iter = config.sn_train_iters;
        }
        m.dense.push_back(std::move(dl));
        in = out;
    }
    return m;
}

Model build_model(const ModelConfig& config) {
    RngStream rng = RngStream(config.seed).split(1);
    return build_model(config, rng);
}

SpectralCache compute_spectral_cache(const Model& m, int iters) {
    SpectralCache cache;
    if (m.config.norm_mode != NormMode::spectral) return cache;
    for (const auto& l : m.lstm)
        cache.lstm.push_back({spectral_sigma_frozen(l.Wf, l.sWf.u, iters),
                              spectral_sigma_frozen(l.Wi, l.sWi.u, iters),
                              spectral_sigma_frozen(l.Wo, l.sWo.u, iters),
                              spectral_sigma_frozen(l.Wc, l.sWc.u, iters)});
    for (const auto& d : m.dense)
        cache.dense.push_back(spectral_sigma_frozen(d.w, d.sW.u, iters));
    return cache;
}

namespace {

// Leaf for one weight matrix under the active normalization. In train mode
// spectral power iteration advances here for trainable matrices
// (single-writer contract); frozen matrices and evaluation modes use the
// cache or a frozen estimate and never touch the persisted u.
int weight_leaf(Tape& t, Model& m, Matrix& w, SpectralState& st, ForwardMode mode,
                const SpectralCache* cache, double cached_sigma, bool needs_grad,
                double* sigma_out) {
    double sigma = 1.0;
    if (m.config.norm_mode == NormMode::spectral) {
        if (mode == ForwardMode::train && needs_grad) {
            SpectralResult r = spectral_normalize(w, st);
            *sigma_out = r.sigma;
            return t.leaf(std::move(r.normalized), true);
        }
        sigma = cache ? cached_sigma : spectral_sigma_frozen(w, st.u, m.config.sn_eval_iters);
        *sigma_out = sigma;
        return t.leaf(scale(w, 1.0 / sigma), needs_grad);
    }
    *sigma_out = 1.0;
    return t.leaf(w, needs_grad);
}

} // namespace

ForwardBuild build_forward(Tape& t, Model& m, const Matrix& xb, ForwardMode mode, RngStream& rng,
                           const SpectralCache* cache, bool bind_params, bool inputs_need_grad,
                           const TrainScope& scope) {
    const ModelConfig& cfg = m.config;
    const int B = xb.rows();
    const int L = xb.cols();
    if (L != cfg.lookback)
        throw ShapeError("forward: window length " + std::to_string(L) + " != lookback " +
                         std::to_string(cfg.lookback));
    if (B < 1) throw ShapeError("forward: empty batch");
    if (mode == ForwardMode::train && cache)
        throw NumericError("forward: spectral cache is only valid outside train mode");

    ForwardBuild fb;
    const bool want_grad = bind_params || mode == ForwardMode::train;
    DropoutSpec drop{cfg.dropout_rate,
                     mode == ForwardMode::train  ? DropoutMode::train
                     : mode == ForwardMode::mc   ? DropoutMode::mc
                                                 : DropoutMode::off};

    auto bind = [&](const std::string& name, Matrix* raw, int node, double sigma, bool is_lstm,
                    bool in_scope) {
        if (bind_params && in_scope)
            fb.bindings.push_back(ParamBinding{name, raw, node, sigma, is_lstm});
    };

    // Input leaves, one (1, B) row per lag.
    std::vector<int> seq(L);
    for (int lag = 0; lag < L; ++lag) {
        Matrix x(1, B);
        for (int j = 0; j < B; ++j) x(0, j) = xb(j, lag);
        seq[lag] = t.leaf(std::move(x), inputs_need_grad);
    }
    if (inputs_need_grad) fb.input_nodes = seq;

    for (size_t k = 0; k < m.lstm.size(); ++k) {
        LstmLayerParams& l = m.lstm[k];
        const int H = l.Wf.rows();
        const std::string prefix = "lstm" + std::to_string(k) + ".";
        try {
            const bool wg = want_grad && scope.lstm;
            double sf = 1, si = 1, so = 1, sc = 1;
            const auto* cs = cache && !cache->lstm.empty() ? &cache->lstm[k] : nullptr;
            LstmGateNodes g;
            g.Wf = weight_leaf(t, m, l.Wf, l.sWf, mode, cache, cs ? (*cs)[0] : 1.0, wg, &sf);
            g.Wi = weight_leaf(t, m, l.Wi, l.sWi, mode, cache, cs ? (*cs)[1] : 1.0, wg, &si);
            g.Wo = weight_leaf(t, m, l.Wo, l.sWo, mode, cache, cs ? (*cs)[2] : 1.0, wg, &so);
            g.Wc = weight_leaf(t, m, l.Wc, l.sWc, mode, cache, cs ? (*cs)[3] : 1.0, wg, &sc);
            g.bf = t.leaf(l.bf, wg);
            g.bi = t.leaf(l.bi, wg);
            g.bo = t.leaf(l.bo, wg);
            g.bc = t.leaf(l.bc, wg);
            bind(prefix + "Wf", &l.Wf, g.Wf, sf, true, wg);
            bind(prefix + "Wi", &l.Wi, g.Wi, si, true, wg);
            bind(prefix + "Wo", &l.Wo, g.Wo, so, true, wg);
            bind(prefix + "Wc", &l.Wc, g.Wc, sc, true, wg);
            bind(prefix + "bf", &l.bf, g.bf, 1.0, true, wg);
            bind(prefix + "bi", &l.bi, g.bi, 1.0, true, wg);
            bind(prefix + "bo", &l.bo, g.bo, 1.0, true, wg);
            bind(prefix + "bc", &l.bc, g.bc, 1.0, true, wg);

            int ln_g = -1, ln_b = -1;
            if (cfg.norm_mode == NormMode::layer) {
                const bool lg = want_grad && scope.lstm_norms;
                ln_g = t.leaf(l.ln_gamma, lg);
                ln_b = t.leaf(l.ln_beta, lg);
                bind(prefix + "ln_gamma", &l.ln_gamma, ln_g, 1.0, true, lg);
                bind(prefix + "ln_beta", &l.ln_beta, ln_b, 1.0, true, lg);
            }

            Matrix fixed_mask;
            if (drop.active() && !cfg.recurrent_mask_per_step)
                fixed_mask = draw_dropout_mask(H, B, drop.rate, rng);

            int h = t.leaf(Matrix(H, B), false);
            int c = t.leaf(Matrix(H, B), false);
            for (int step = 0; step < L; ++step) {
                LstmStepNodes s =
                    lstm_step_tape(t, g, h, c, seq[step], drop, rng,
                                   cfg.recurrent_mask_per_step ? nullptr : &fixed_mask);
                c = s.C;
                h = s.h;
                // normalization of the hidden-state output; the normalized
                // h_t feeds both the next layer and the recurrence
                if (cfg.norm_mode == NormMode::layer)
                    h = t.layer_norm(h, ln_g, ln_b, cfg.ln_eps);
                seq[step] = h;
            }
        } catch (const NumericError& e) {
            throw NumericError("lstm layer " + std::to_string(k) + ": " + e.what());
        }
    }

    int x = seq[L - 1]; // final hidden state of the last LSTM layer
    fb.feat_node = x;
    for (size_t j = 0; j < m.dense.size(); ++j) {
        DenseLayerParams& dl = m.dense[j];
        const bool hidden = j + 1 < m.dense.size();
        const std::string prefix = "dense" + std::to_string(j) + ".";
        try {
            const bool wg = want_grad && scope.dense;
            double sw = 1;
            const double cached = cache && !cache->dense.empty() ? cache->dense[j] : 1.0;
            const int wn = weight_leaf(t, m, dl.w, dl.sW, mode, cache, cached, wg, &sw);
            const int bn = t.leaf(dl.b, wg);
            bind(prefix + "w", &dl.w, wn, sw, false, wg);
            bind(prefix + "b", &dl.b, bn, 1.0, false, wg);
            int z = t.add_bias(t.matmul(wn, x), bn);
            if (hidden) {
                if (cfg.norm_mode == NormMode::layer) {
                    const bool lg = want_grad && scope.dense_norms;
                    const int g = t.leaf(dl.ln_gamma, lg);
                    const int be = t.leaf(dl.ln_beta, lg);
                    bind(prefix + "ln_gamma", &dl.ln_gamma, g, 1.0, false, lg);
                    bind(prefix + "ln_beta", &dl.ln_beta, be, 1.0, false, lg);
                    z = t.layer_norm(z, g, be, cfg.ln_eps);
                }
                z = t.leaky_relu(z, cfg.leaky_alpha);
                z = apply_dropout_tape(t, z, drop, rng);
                x = z;
                fb.feat_node = x;
            } else {
                x = z; // linear (mean, log-variance) head, no dropout
            }
        } catch (const NumericError& e) {
            throw NumericError("dense layer " + std::to_string(j) + ": " + e.what());
        }
    }

    fb.mean_node = t.slice_rows(x, 0, 1);
    fb.logvar_node = t.slice_rows(x, 1, 2);
    return fb;
}

BatchOutput forward_batch(const Model& m, const Matrix& xb, ForwardMode mode, RngStream& rng,
                          const SpectralCache* cache) {
    if (mode == ForwardMode::train)
        throw NumericError("forward_batch: train mode requires the training loop");
    // Eval modes never write to the model (frozen sigma path).
    Model& mm = const_cast<Model&>(m);
    Tape t;
    ForwardBuild fb = build_forward(t, mm, xb, mode, rng, cache);
    return BatchOutput{t.val(fb.mean_node), t.val(fb.logvar_node), t.val(fb.feat_node)};
}

ForwardOutput forward(const Model& m, const std::vector<double>& window, ForwardMode mode,
                      RngStream& rng, const SpectralCache* cache) {
    if (int(window.size()) != m.config.lookback)
        throw ShapeError("forward: window length " + std::to_string(window.size()) +
                         " != lookback " + std::to_string(m.config.lookback));
    Matrix xb(1, int(window.size()));
    for (size_t i = 0; i < window.size(); ++i) xb(0, int(i)) = window[i];
    BatchOutput out = forward_batch(m, xb, mode, rng, cache);
    ForwardOutput fo;
    fo.mean = out.mean(0, 0);
    fo.log_var = out.log_var(0, 0);
    fo.features.resize(size_t(out.features.rows()));
    for (int i = 0; i < out.features.rows(); ++i) fo.features[size_t(i)] = out.features(i, 0);
    return fo;
}

std::vector<NamedParam> enumerate_params(Model& m) {
    std::vector<NamedParam> out;
    for (size_t k = 0; k < m.lstm.size(); ++k) {
        auto& l = m.lstm[k];
        const std::string p = "lstm" + std::to_string(k) + ".";
        out.push_back({p + "Wf", &l.Wf, true});
        out.push_back({p + "Wi", &l.Wi, true});
        out.push_back({p + "Wo", &l.Wo, true});
        out.push_back({p + "Wc", &l.Wc, true});
        out.push_back({p + "bf", &l.bf, true});
        out.push_back({p + "bi", &l.bi, true});
        out.push_back({p + "bo", &l.bo, true});
        out.push_back({p + "bc", &l.bc, true});
        if (!l.ln_gamma.empty()) {
            out.push_back({p + "ln_gamma", &l.ln_gamma, true});
            out.push_back({p + "ln_beta", &l.ln_beta, true});
        }
    }
    for (size_t j = 0; j < m.dense.size(); ++j) {
        auto& d = m.dense[j];
        const std::string p = "dense" + std::to_string(j) + ".";
        out.push_back({p + "w", &d.w, false});
        out.push_back({p + "b", &d.b, false});
        if (!d.ln_gamma.empty()) {
            out.push_back({p + "ln_gamma", &d.ln_gamma, false});
            out.push_back({p + "ln_beta", &d.ln_beta, false});
        }
    }
    return out;
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json column_to_json(const Matrix& m) {
    json v = json::array();
    for (int i = 0; i < m.rows(); ++i) v.push_back(m(i, 0));
    return v;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
    if (!j.is_array() || int(j.size()) != rows)
        throw DataError("checkpoint: " + what + " expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = j[size_t(i)];
        if (!row.is_array() || int(row.size()) != cols)
            throw DataError("checkpoint: " + what + " row " + std::to_string(i) + " expected " +
                            std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c) m(i, c) = row[size_t(c)].get<double>();
    }
    return m;
}

Matrix column_from_json(const json& j, int rows, const std::string& what) {
    if (!j.is_array() || int(j.size()) != rows)
        throw DataError("checkpoint: " + what + " expected " + std::to_string(rows) + " entries");
    Matrix m(rows, 1);
    for (int i = 0; i < rows; ++i) m(i, 0) = j[size_t(i)].get<double>();
    return m;
}

std::vector<double> vector_from_json(const json& j, int n, const std::string& what) {
    if (!j.is_array() || int(j.size()) != n)
        throw DataError("checkpoint: " + what + " expected " + std::to_string(n) + " entries");
    std::vector<double> v(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) v[size_t(i)] = j[size_t(i)].get<double>();
    return v;
}

} // namespace

void save_model(const Model& m, const std::string& path) {
    json j;
    j["format_version"] = kCheckpointFormatVersion;
    json cfg;
    cfg["lstm_units"] = m.config.lstm_units;
    cfg["dense_units"] = m.config.dense_units;
    cfg["dropout_rate"] = m.config.dropout_rate;
    cfg["norm_mode"] = to_string(m.config.norm_mode);
    cfg["leaky_alpha"] = m.config.leaky_alpha;
    cfg["lookback"] = m.config.lookback;
    cfg["horizon"] = m.config.horizon;
    cfg["seed"] = m.config.seed;
    cfg["s_clamp"] = {m.config.s_clamp_lo, m.config.s_clamp_hi};
    cfg["recurrent_mask_per_step"] = m.config.recurrent_mask_per_step;
    cfg["ln_eps"] = m.config.ln_eps;
    cfg["sn_train_iters"] = m.config.sn_train_iters;
    cfg["sn_eval_iters"] = m.config.sn_eval_iters;
    cfg["scaler"] = {{"fitted", m.scaler.fitted}, {"min", m.scaler.min}, {"max", m.scaler.max}};
    j["config"] = std::move(cfg);

    json lstm = json::array();
    for (const auto& l : m.lstm) {
        json e;
        e["Wf"] = matrix_to_json(l.Wf);
        e["Wi"] = matrix_to_json(l.Wi);
        e["Wo"] = matrix_to_json(l.Wo);
        e["Wc"] = matrix_to_json(l.Wc);
        e["bf"] = column_to_json(l.bf);
        e["bi"] = column_to_json(l.bi);
        e["bo"] = column_to_json(l.bo);
        e["bc"] = column_to_json(l.bc);
        if (!l.ln_gamma.empty()) {
            e["ln_gamma"] = column_to_json(l.ln_gamma);
            e["ln_beta"] = column_to_json(l.ln_beta);
        }
        lstm.push_back(std::move(e));
    }
    json dense = json::array();
    for (const auto& d : m.dense) {
        json e;
        e["w"] = matrix_to_json(d.w);
        e["b"] = column_to_json(d.b);
        if (!d.ln_gamma.empty()) {
            e["ln_gamma"] = column_to_json(d.ln_gamma);
            e["ln_beta"] = column_to_json(d.ln_beta);
        }
        dense.push_back(std::move(e));
    }
    j["parameters"] = {{"lstm", std::move(lstm)}, {"dense", std::move(dense)}};

    json su = json::object();
    if (m.config.norm_mode == NormMode::spectral) {
        json sl = json::array();
        for (const auto& l : m.lstm)
            sl.push_back({{"Wf", l.sWf.u}, {"Wi", l.sWi.u}, {"Wo", l.sWo.u}, {"Wc", l.sWc.u}});
        json sd = json::array();
        for (const auto& d : m.dense) sd.push_back(d.sW.u);
        su = {{"lstm", std::move(sl)}, {"dense", std::move(sd)}};
    }
    j["spectral_u_vectors"] = std::move(su);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out << j.dump(1) << "\n";
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path + "' is malformed: " + e.what());
    }
    try {
        if (!j.contains("format_version") || !j["format_version"].is_number_integer())
            throw DataError("checkpoint: missing format_version");
        const int version = j["format_version"].get<int>();
        if (version != kCheckpointFormatVersion)
            throw DataError("checkpoint format_version " + std::to_string(version) +
                            " unsupported (expected " +
                            std::to_string(kCheckpointFormatVersion) + ")");
        const json& cfg = j.at("config");
        ModelConfig c;
        c.lstm_units = cfg.at("lstm_units").get<std::vector<int>>();
        c.dense_units = cfg.at("dense_units").get<std::vector<int>>();
        c.dropout_rate = cfg.at("dropout_rate").get<double>();
        c.norm_mode = norm_mode_from_string(cfg.at("norm_mode").get<std::string>());
        c.leaky_alpha = cfg.at("leaky_alpha").get<double>();
        c.lookback = cfg.at("lookback").get<int>();
        c.horizon = cfg.at("horizon").get<int>();
        c.seed = cfg.at("seed").get<uint64_t>();
        c.s_clamp_lo = cfg.at("s_clamp").at(0).get<double>();
        c.s_clamp_hi = cfg.at("s_clamp").at(1).get<double>();
        c.recurrent_mask_per_step = cfg.at("recurrent_mask_per_step").get<bool>();
        c.ln_eps = cfg.at("ln_eps").get<double>();
        c.sn_train_iters = cfg.at("sn_train_iters").get<int>();
        c.sn_eval_iters = cfg.at("sn_eval_iters").get<int>();
        c.validate();

        Model m;
        m.config = c;
        const json& sc = cfg.at("scaler");
        m.scaler.fitted = sc.at("fitted").get<bool>();
        m.scaler.min = sc.at("min").get<double>();
        m.scaler.max = sc.at("max").get<double>();

        const json& pl = j.at("parameters").at("lstm");
        const json& pd = j.at("parameters").at("dense");
        if (pl.size() != c.lstm_units.size() || pd.size() != c.dense_units.size())
            throw DataError("checkpoint: layer counts do not match config");
        int d = 1;
        for (size_t k = 0; k < c.lstm_units.size(); ++k) {
            const int h = c.lstm_units[k];
            const json& e = pl[k];
            const std::string p = "lstm" + std::to_string(k) + ".";
            LstmLayerParams l;
            l.Wf = matrix_from_json(e.at("Wf"), h, h + d, p + "Wf");
            l.Wi = matrix_from_json(e.at("Wi"), h, h + d, p + "Wi");
            l.Wo = matrix_from_json(e.at("Wo"), h, h + d, p + "Wo");
            l.Wc = matrix_from_json(e.at("Wc"), h, h + d, p + "Wc");
            l.bf = column_from_json(e.at("bf"), h, p + "bf");
            l.bi = column_from_json(e.at("bi"), h, p + "bi");
            l.bo = column_from_json(e.at("bo"), h, p + "bo");
            l.bc = column_from_json(e.at("bc"), h, p + "bc");
            if (c.norm_mode == NormMode::layer) {
                l.ln_gamma = column_from_json(e.at("ln_gamma"), h, p + "ln_gamma");
                l.ln_beta = column_from_json(e.at("ln_beta"), h, p + "ln_beta");
            }
            m.lstm.push_back(std::move(l));
            d = h;
        }
        int in = c.lstm_units.back();
        for (size_t k = 0; k < c.dense_units.size(); ++k) {
            const int out = c.dense_units[k];
            const bool hidden = k + 1 < c.dense_units.size();
            const json& e = pd[k];
            const std::string p = "dense" + std::to_string(k) + ".";
            DenseLayerParams dl;
            dl.w = matrix_from_json(e.at("w"), out, in, p + "w");
            dl.b = column_from_json(e.at("b"), out, p + "b");
            if (c.norm_mode == NormMode::layer && hidden) {
                dl.ln_gamma = column_from_json(e.at("ln_gamma"), out, p + "ln_gamma");
                dl.ln_beta = column_from_json(e.at("ln_beta"), out, p + "ln_beta");
            }
            m.dense.push_back(std::move(dl));
            in = out;
        }
        if (c.norm_mode == NormMode::spectral) {
            const json& su = j.at("spectral_u_vectors");
            const json& sl = su.at("lstm");
            const json& sd = su.at("dense");
            if (sl.size() != m.lstm.size() || sd.size() != m.dense.size())
                throw DataError("checkpoint: spectral_u_vectors do not match layer counts");
            for (size_t k = 0; k < m.lstm.size(); ++k) {
                const int h = c.lstm_units[k];
                const std::string p = "lstm" + std::to_string(k) + ".u.";
                m.lstm[k].sWf.u = vector_from_json(sl[k].at("Wf"), h, p + "Wf");
                m.lstm[k].sWi.u = vector_from_json(sl[k].at("Wi"), h, p + "Wi");
                m.lstm[k].sWo.u = vector_from_json(sl[k].at("Wo"), h, p + "Wo");
                m.lstm[k].sWc.u = vector_from_json(sl[k].at("Wc"), h, p + "Wc");
                m.lstm[k].sWf.n_iter = m.lstm[k].sWi.n_iter = m.lstm[k].sWo.n_iter =
                    m.lstm[k].sWc.n_iter = c.sn_train_iters;
            }
            for (size_t k = 0; k < m.dense.size(); ++k) {
                m.dense[k].sW.u =
                    vector_from_json(sd[k], c.dense_units[k], "dense" + std::to_string(k) + ".u");
                m.dense[k].sW.n_iter = c.sn_train_iters;
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path + "' is malformed: " + e.what());
    }
}

} // namespace uqcast

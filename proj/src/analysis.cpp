#include "uqcast/analysis.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "uqcast/csv.hpp"
#include "uqcast/errors.hpp"

namespace uqcast {

Metrics compute_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw ShapeError("compute_metrics: " + std::to_string(y_true.size()) + " targets vs " +
                         std::to_string(y_pred.size()) + " predictions");
    if (y_true.size() < 2) throw DataError("compute_metrics: need at least 2 samples");
    const size_t n = y_true.size();
    double sse = 0.0, y_sum = 0.0;
    double ape_sum = 0.0;
    size_t ape_n = 0;
    for (size_t i = 0; i < n; ++i) {
        const double r = y_true[i] - y_pred[i];
        sse += r * r;
        y_sum += y_true[i];
        if (std::abs(y_true[i]) >= 1e-8) {
            ape_sum += std::abs(r / y_true[i]);
            ++ape_n;
        }
    }
    if (ape_n == 0) throw DataError("compute_metrics: every MAPE term excluded (|y| < 1e-8)");
    const double y_mean = y_sum / double(n);
    double sst = 0.0;
    for (size_t i = 0; i < n; ++i) sst += (y_true[i] - y_mean) * (y_true[i] - y_mean);
    Metrics m;
    m.n = n;
    m.rmse = std::sqrt(sse / double(n));
    m.mape = ape_sum / double(ape_n);
    m.mape_excluded = n - ape_n;
    m.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
    return m;
}

std::string to_string(Regime r) {
    switch (r) {
    case Regime::low: return "low";
    case Regime::increasing: return "increasing";
    case Regime::high: return "high";
    case Regime::decreasing: return "decreasing";
    }
    return "low";
}

Regime regime_of(int64_t timestamp) {
    int64_t sec = timestamp % 86400;
    if (sec < 0) sec += 86400;
    const double hour = double(sec) / 3600.0;
    if (hour < 6.0) return Regime::low;
    if (hour < 8.0) return Regime::increasing;
    if (hour < 18.0) return Regime::high;
    return Regime::decreasing;
}

std::vector<Regime> label_regimes(const std::vector<int64_t>& timestamps) {
    std::vector<Regime> out;
    out.reserve(timestamps.size());
    for (int64_t t : timestamps) out.push_back(regime_of(t));
    return out;
}

std::vector<std::string> regime_labels(const std::vector<int64_t>& timestamps) {
    std::vector<std::string> out;
    out.reserve(timestamps.size());
    for (int64_t t : timestamps) out.push_back(to_string(regime_of(t)));
    return out;
}

const std::vector<std::string>& all_regime_names() {
    static const std::vector<std::string> names{"low", "increasing", "high", "decreasing"};
    return names;
}

SaliencyMap input_gradients(const Model& m, const Matrix& windows,
                            const std::vector<int64_t>& target_ts) {
    if (windows.rows() < 1) throw DataError("input_gradients: no windows");
    if (size_t(windows.rows()) != target_ts.size())
        throw ShapeError("input_gradients: " + std::to_string(windows.rows()) + " windows vs " +
                         std::to_string(target_ts.size()) + " timestamps");
    const int n = windows.rows();
    const int L = windows.cols();
    SaliencyMap map;
    map.raw = Matrix(n, L);
    map.target_ts = target_ts;

    // Eval path: no mutation (deterministic mode).
    Model& mm = const_cast<Model&>(m);
    SpectralCache cache;
    const SpectralCache* cache_ptr = nullptr;
    if (m.config.norm_mode == NormMode::spectral) {
        cache = compute_spectral_cache(m, m.config.sn_eval_iters);
        cache_ptr = &cache;
    }
    RngStream dummy(0);
    constexpr int kChunk = 288;
    for (int lo = 0; lo < n; lo += kChunk) {
        const int b = std::min(kChunk, n - lo);
        Matrix xb(b, L);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < L; ++j) xb(i, j) = windows(lo + i, j);
        Tape t;
        ForwardBuild fb = build_forward(t, mm, xb, ForwardMode::deterministic, dummy, cache_ptr,
                                        false, true);
        // Samples are independent, so d(sum of means)/dx splits per window.
        t.backward(t.sum_all(fb.mean_node));
        for (int lag = 0; lag < L; ++lag) {
            const Matrix& g = t.grad(fb.input_nodes[size_t(lag)]);
            if (g.empty()) throw NumericError("input_gradients: no gradient reached lag " +
                                              std::to_string(lag));
            for (int i = 0; i < b; ++i) {
                if (!std::isfinite(g(0, i)))
                    throw NumericError("input_gradients: non-finite gradient");
                map.raw(lo + i, lag) = g(0, i);
            }
        }
    }

    // Per-day min-max normalization across each day's samples.
    map.normalized = Matrix(n, L);
    std::map<int64_t, std::pair<double, double>> day_range;
    for (int i = 0; i < n; ++i) {
        const int64_t day = target_ts[size_t(i)] / 86400;
        for (int j = 0; j < L; ++j) {
            const double v = map.raw(i, j);
            auto it = day_range.find(day);
            if (it == day_range.end())
                day_range.emplace(day, std::make_pair(v, v));
            else {
                it->second.first = std::min(it->second.first, v);
                it->second.second = std::max(it->second.second, v);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        const auto& [lo_v, hi_v] = day_range[target_ts[size_t(i)] / 86400];
        const double width = hi_v - lo_v;
        for (int j = 0; j < L; ++j)
            map.normalized(i, j) = width > 0.0 ? (map.raw(i, j) - lo_v) / width : 0.0;
    }
    return map;
}

void write_saliency_csv(const SaliencyMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "timestamp";
    for (int j = 0; j < map.normalized.cols(); ++j) out << ",lag" << j;
    out << '\n';
    for (int i = 0; i < map.normalized.rows(); ++i) {
        out << fmt_int(map.target_ts[size_t(i)]);
        for (int j = 0; j < map.normalized.cols(); ++j)
            out << ',' << fmt_double(map.normalized(i, j));
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

FeatureStats feature_dispersion(const Model& m, const Matrix& windows,
                                const std::vector<Regime>& labels) {
    if (size_t(windows.rows()) != labels.size())
        throw ShapeError("feature_dispersion: " + std::to_string(windows.rows()) +
                         " windows vs " + std::to_string(labels.size()) + " labels");
    const int n = windows.rows();
    const int F = m.feature_width();
    RngStream dummy(0);
    std::vector<std::vector<std::vector<double>>> per_regime(
        4, std::vector<std::vector<double>>(size_t(F)));
    constexpr int kChunk = 512;
    for (int lo = 0; lo < n; lo += kChunk) {
        const int b = std::min(kChunk, n - lo);
        Matrix xb(b, windows.cols());
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < windows.cols(); ++j) xb(i, j) = windows(lo + i, j);
        const BatchOutput out = forward_batch(m, xb, ForwardMode::deterministic, dummy);
        for (int i = 0; i < b; ++i) {
            const size_t r = size_t(labels[size_t(lo + i)]);
            for (int f = 0; f < F; ++f) per_regime[r][size_t(f)].push_back(out.features(f, i));
        }
    }
    FeatureStats stats;
    for (int r = 0; r < 4; ++r) {
        const std::string name = to_string(Regime(r));
        const size_t count = per_regime[size_t(r)][0].size();
        if (count == 0) throw DataError("feature_dispersion: regime '" + name + "' is empty");
        double var_sum = 0.0;
        for (int f = 0; f < F; ++f) {
            const auto& v = per_regime[size_t(r)][size_t(f)];
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= double(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            var_sum += v.size() > 1 ? ss / double(v.size() - 1) : 0.0;
        }
        stats.regime.push_back(name);
        stats.variance.push_back(var_sum);
        stats.count.push_back(count);
    }
    return stats;
}

void write_metrics_csv(const Metrics& metrics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "metric,value\n";
    out << "rmse," << fmt_double(metrics.rmse) << '\n';
    out << "mape," << fmt_double(metrics.mape) << '\n';
    out << "r2," << fmt_double(metrics.r2) << '\n';
    out << "n," << fmt_int(int64_t(metrics.n)) << '\n';
    out << "mape_excluded," << fmt_int(int64_t(metrics.mape_excluded)) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_dispersion_csv(const FeatureStats& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "regime,variance,count\n";
    for (size_t i = 0; i < stats.regime.size(); ++i)
        out << stats.regime[i] << ',' << fmt_double(stats.variance[i]) << ','
            << fmt_int(int64_t(stats.count[i])) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace uqcast

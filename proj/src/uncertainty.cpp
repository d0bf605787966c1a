#include "uqcast/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "uqcast/csv.hpp"
#include "uqcast/errors.hpp"

namespace uqcast {

int worker_count() {
    int hw = int(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("UQCAST_THREADS")) {
        try {
            const int bound = std::stoi(env);
            if (bound >= 1) hw = std::min(hw, bound);
        } catch (const std::exception&) {
            throw UsageError(std::string("UQCAST_THREADS is not a number: '") + env + "'");
        }
    }
    return hw;
}

McEnsemble mc_sample(const Model& m, const Matrix& windows, int passes, const RngStream& rng) {
    if (passes < 1) throw UsageError("mc_sample: need at least 1 pass, got " +
                                     std::to_string(passes));
    if (windows.rows() < 1) throw DataError("mc_sample: no windows");
    const int n = windows.rows();
    McEnsemble ens;
    ens.passes = passes;
    ens.y_hat.assign(size_t(passes), std::vector<double>(size_t(n), 0.0));
    ens.s.assign(size_t(passes), std::vector<double>(size_t(n), 0.0));

    SpectralCache cache;
    const SpectralCache* cache_ptr = nullptr;
    if (m.config.norm_mode == NormMode::spectral) {
        cache = compute_spectral_cache(m, m.config.sn_eval_iters);
        cache_ptr = &cache;
    }

    constexpr int kChunk = 256;
    auto run_pass = [&](int pass) {
        RngStream stream = rng.split(uint64_t(pass));
        for (int lo = 0; lo < n; lo += kChunk) {
            const int b = std::min(kChunk, n - lo);
            Matrix xb(b, windows.cols());
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < windows.cols(); ++j) xb(i, j) = windows(lo + i, j);
            const BatchOutput out = forward_batch(m, xb, ForwardMode::mc, stream, cache_ptr);
            for (int i = 0; i < b; ++i) {
                ens.y_hat[size_t(pass)][size_t(lo + i)] = out.mean(0, i);
                ens.s[size_t(pass)][size_t(lo + i)] = out.log_var(0, i);
            }
        }
    };

    const int workers = std::min(worker_count(), passes);
    if (workers <= 1) {
        for (int pass = 0; pass < passes; ++pass) run_pass(pass);
        return ens;
    }
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int pass = w; pass < passes; pass += workers) run_pass(pass);
        });
    for (std::thread& th : pool) th.join();
    return ens;
}

std::vector<UncertaintyEstimate> decompose(const McEnsemble& ens) {
    if (ens.passes < 2)
        throw DataError("decompose: epistemic estimation needs at least 2 passes, got " +
                        std::to_string(ens.passes));
    const size_t n = ens.samples();
    if (n == 0) throw DataError("decompose: empty ensemble");
    const double T = double(ens.passes);
    std::vector<UncertaintyEstimate> out(n);
    for (size_t i = 0; i < n; ++i) {
        double sum = 0.0, sum_sq = 0.0, sum_var = 0.0;
        for (int p = 0; p < ens.passes; ++p) {
            const double y = ens.y_hat[size_t(p)][i];
            const double s = ens.s[size_t(p)][i];
            if (!std::isfinite(y) || !std::isfinite(s))
                throw NumericError("decompose: non-finite pass value at sample " +
                                   std::to_string(i));
            sum += y;
            sum_sq += y * y;
            sum_var += std::exp(s);
        }
        UncertaintyEstimate& e = out[i];
        e.mean = sum / T;
        e.epistemic_var = sum_sq / T - e.mean * e.mean;
        if (e.epistemic_var < 0.0) {
            if (e.epistemic_var < -1e-12)
                throw NumericError("decompose: epistemic variance " +
                                   fmt_double(e.epistemic_var) + " below cancellation tolerance");
            e.epistemic_var = 0.0;
        }
        e.aleatoric_var = sum_var / T;
        e.total_var = e.epistemic_var + e.aleatoric_var;
        const double half = 1.96 * std::sqrt(e.total_var);
        e.lower95 = e.mean - half;
        e.upper95 = e.mean + half;
    }
    return out;
}

UncertaintyEstimate to_unscaled(const UncertaintyEstimate& e, const Scaler& s) {
    const double r2 = s.range() * s.range();
    UncertaintyEstimate o;
    o.mean = s.invert(e.mean);
    o.epistemic_var = e.epistemic_var * r2;
    o.aleatoric_var = e.aleatoric_var * r2;
    o.total_var = e.total_var * r2;
    o.lower95 = s.invert(e.lower95);
    o.upper95 = s.invert(e.upper95);
    return o;
}

std::vector<UncertaintyEstimate> to_unscaled(const std::vector<UncertaintyEstimate>& es,
                                             const Scaler& s) {
    std::vector<UncertaintyEstimate> out;
    out.reserve(es.size());
    for (const auto& e : es) out.push_back(to_unscaled(e, s));
    return out;
}

namespace {

double quantile_r7(const std::vector<double>& sorted, double p) {
    const size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * double(n - 1);
    const size_t lo = size_t(pos);
    const double frac = pos - double(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw DataError("box_stats: empty input");
    std::sort(values.begin(), values.end());
    BoxStats b;
    b.count = values.size();
    b.median = quantile_r7(values, 0.50);
    b.q1 = quantile_r7(values, 0.25);
    b.q3 = quantile_r7(values, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_limit = b.q1 - 1.5 * iqr;
    const double hi_limit = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q3;
    b.whisker_hi = b.q1;
    for (double v : values) {
        if (v >= lo_limit) {
            b.whisker_lo = v;
            break;
        }
    }
    for (size_t i = values.size(); i-- > 0;) {
        if (values[i] <= hi_limit) {
            b.whisker_hi = values[i];
            break;
        }
    }
    return b;
}

std::vector<GroupedBox> summarize_uncertainty(const std::vector<double>& values,
                                              const std::vector<std::string>& labels,
                                              const std::vector<std::string>& expected_groups) {
    if (values.size() != labels.size())
        throw ShapeError("summarize_uncertainty: " + std::to_string(values.size()) +
                         " values vs " + std::to_string(labels.size()) + " labels");
    std::vector<GroupedBox> out;
    out.reserve(expected_groups.size());
    for (const std::string& g : expected_groups) {
        std::vector<double> member;
        for (size_t i = 0; i < values.size(); ++i)
            if (labels[i] == g) member.push_back(values[i]);
        if (member.empty())
            throw DataError("summarize_uncertainty: group '" + g + "' has no samples");
        out.push_back(GroupedBox{g, box_stats(std::move(member))});
    }
    return out;
}

void write_uncertainty_csv(const std::vector<int64_t>& ts, const std::vector<double>& y_true,
                           const std::vector<UncertaintyEstimate>& estimates,
                           const std::string& path) {
    if (ts.size() != estimates.size() || y_true.size() != estimates.size())
        throw ShapeError("write_uncertainty_csv: length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "timestamp,y_true,mean,epistemic_std,aleatoric_std,total_std,lower95,upper95\n";
    for (size_t i = 0; i < estimates.size(); ++i) {
        const UncertaintyEstimate& e = estimates[i];
        out << fmt_int(ts[i]) << ',' << fmt_double(y_true[i]) << ',' << fmt_double(e.mean) << ','
            << fmt_double(std::sqrt(e.epistemic_var)) << ','
            << fmt_double(std::sqrt(e.aleatoric_var)) << ',' << fmt_double(std::sqrt(e.total_var))
            << ',' << fmt_double(e.lower95) << ',' << fmt_double(e.upper95) << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace uqcast

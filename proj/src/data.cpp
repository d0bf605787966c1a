#include "uqcast/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "uqcast/csv.hpp"
#include "uqcast/errors.hpp"

namespace uqcast {

using nlohmann::json;

namespace {

int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int64_t yoe = y - era * 400;
    const int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-') ? 1 : 0;
    if (i >= s.size()) return false;
    for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

} // namespace

int64_t parse_timestamp(const std::string& text) {
    const std::string s = trim(text);
    if (all_digits(s)) return std::stoll(s);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    const int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi,
                              &sec);
    if (n < 7 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 ||
        mi > 59 || sec > 60)
        throw DataError("unparseable timestamp '" + s + "'");
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

Series load_csv(const std::string& path, LoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");
    {
        auto cols = split_csv_line(trim(line));
        if (cols.size() != 2 || trim(cols[0]) != "timestamp" || trim(cols[1]) != "flow")
            throw DataError("'" + path + "' line 1: expected header 'timestamp,flow'");
    }
    std::vector<std::pair<int64_t, double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto cols = split_csv_line(t);
        if (cols.size() != 2)
            throw DataError("'" + path + "' line " + std::to_string(lineno) +
                            ": expected 2 columns, got " + std::to_string(cols.size()));
        int64_t ts;
        double flow;
        try {
            ts = parse_timestamp(cols[0]);
            size_t used = 0;
            flow = std::stod(trim(cols[1]), &used);
            if (used != trim(cols[1]).size()) throw DataError("trailing characters");
        } catch (const std::exception&) {
            throw DataError("'" + path + "' line " + std::to_string(lineno) +
                            ": unparseable row '" + t + "'");
        }
        if (!std::isfinite(flow) || flow < 0.0)
            throw DataError("'" + path + "' line " + std::to_string(lineno) + ": negative flow " +
                            fmt_double(flow));
        rows.emplace_back(ts, flow);
    }
    int inversions = 0;
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first < rows[i - 1].first) ++inversions;
    if (inversions > 0) std::stable_sort(rows.begin(), rows.end(), [](auto& a, auto& b) {
        return a.first < b.first;
    });
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw DataError("'" + path + "': duplicate timestamp " + fmt_int(rows[i].first));
    if (report) report->out_of_order_rows = inversions;

    Series s;
    const size_t slash = path.find_last_of('/');
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const size_t dot = name.find_last_of('.');
    s.station_id = dot == std::string::npos ? name : name.substr(0, dot);
    s.t.reserve(rows.size());
    s.flow.reserve(rows.size());
    for (auto& [ts, flow] : rows) {
        s.t.push_back(ts);
        s.flow.push_back(flow);
    }
    s.gap.assign(s.t.size(), false);
    return s;
}

void save_csv(const Series& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "timestamp,flow\n";
    for (size_t i = 0; i < s.size(); ++i)
        out << fmt_int(s.t[i]) << ',' << fmt_double(s.flow[i]) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

Series aggregate_5min(const Series& raw) {
    if (raw.size() == 0) throw DataError("aggregate_5min: empty series");
    int64_t cadence = kBucketSeconds;
    if (raw.size() >= 2) {
        cadence = 0;
        for (size_t i = 1; i < raw.size(); ++i)
            cadence = std::gcd(cadence, raw.t[i] - raw.t[i - 1]);
    }
    if (cadence <= 0 || kBucketSeconds % cadence != 0)
        throw DataError("aggregate_5min: cadence " + fmt_int(cadence) +
                        " s does not divide 300 s");
    const int64_t expected = kBucketSeconds / cadence;

    const int64_t first = raw.t.front() / kBucketSeconds;
    const int64_t last = raw.t.back() / kBucketSeconds;
    const size_t n = size_t(last - first + 1);
    Series out;
    out.station_id = raw.station_id;
    out.t.resize(n);
    out.flow.assign(n, 0.0);
    out.gap.assign(n, true);
    std::vector<int64_t> count(n, 0);
    for (size_t i = 0; i < n; ++i) out.t[i] = (first + int64_t(i)) * kBucketSeconds;
    for (size_t i = 0; i < raw.size(); ++i) {
        const size_t b = size_t(raw.t[i] / kBucketSeconds - first);
        out.flow[b] += raw.flow[i];
        ++count[b];
    }
    for (size_t i = 0; i < n; ++i) out.gap[i] = count[i] != expected;
    return out;
}

Scaler fit_scaler(const std::vector<double>& train_values) {
    if (train_values.empty()) throw DataError("fit_scaler: no training values");
    double lo = train_values[0], hi = train_values[0];
    for (double v : train_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw DataError("fit_scaler: constant training series (min == max == " +
                                    fmt_double(lo) + ")");
    Scaler s;
    s.min = lo;
    s.max = hi;
    s.fitted = true;
    return s;
}

Series apply_scaler(const Scaler& s, const Series& series) {
    Series out = series;
    for (double& v : out.flow) v = s.apply(v);
    return out;
}

WindowedDataset make_windows(const Series& s, int lookback, int horizon) {
    if (lookback < 1 || horizon < 1)
        throw DataError("make_windows: lookback and horizon must be positive");
    const int64_t n_pts = int64_t(s.size());
    if (n_pts <= int64_t(lookback) + horizon)
        throw DataError("make_windows: series too short (" + fmt_int(n_pts) + " points, need > " +
                        std::to_string(lookback + horizon) + ")");
    WindowedDataset ds;
    ds.lookback = lookback;
    ds.horizon = horizon;
    std::vector<size_t> starts;
    for (size_t w = 0; w + lookback + horizon - 1 < s.size(); ++w) {
        const size_t target = w + lookback + horizon - 1;
        bool gapped = s.gap.empty() ? false : s.gap[target];
        if (!s.gap.empty())
            for (size_t i = w; i < w + size_t(lookback) && !gapped; ++i) gapped = s.gap[i];
        if (gapped) {
            ++ds.dropped_gap_windows;
            continue;
        }
        starts.push_back(w);
    }
    if (starts.empty()) throw DataError("make_windows: every window crosses a gap");
    ds.x_raw = Matrix(int(starts.size()), lookback);
    ds.y_raw.resize(starts.size());
    ds.target_ts.resize(starts.size());
    ds.start_idx = starts;
    for (size_t i = 0; i < starts.size(); ++i) {
        const size_t w = starts[i];
        for (int j = 0; j < lookback; ++j) ds.x_raw(int(i), j) = s.flow[w + size_t(j)];
        const size_t target = w + size_t(lookback) + size_t(horizon) - 1;
        ds.y_raw[i] = s.flow[target];
        ds.target_ts[i] = s.t[target];
    }
    return ds;
}

void split_chronological(WindowedDataset& ds, double train_frac, double val_frac,
                         double test_frac) {
    if (train_frac < 0 || val_frac < 0 || test_frac < 0 ||
        std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw DataError("split_chronological: fractions must be non-negative and sum to 1");
    const size_t n = ds.size();
    ds.n_train = size_t(std::floor(train_frac * double(n)));
    ds.n_val = size_t(std::floor(val_frac * double(n)));
    ds.n_test = n - ds.n_train - ds.n_val;
}

Scaler fit_scaler(const WindowedDataset& ds) {
    if (ds.n_train == 0) throw DataError("fit_scaler: dataset has no train split");
    std::vector<double> values;
    values.reserve(ds.n_train * size_t(ds.lookback + 1));
    for (size_t i = 0; i < ds.n_train; ++i) {
        for (int j = 0; j < ds.lookback; ++j) values.push_back(ds.x_raw(int(i), j));
        values.push_back(ds.y_raw[i]);
    }
    return fit_scaler(values);
}

void apply_scaler(WindowedDataset& ds, const Scaler& s) {
    if (!s.fitted) throw DataError("apply_scaler: scaler not fitted");
    ds.scaler = s;
    ds.x = Matrix(ds.x_raw.rows(), ds.x_raw.cols());
    for (int i = 0; i < ds.x_raw.rows(); ++i)
        for (int j = 0; j < ds.x_raw.cols(); ++j) ds.x(i, j) = s.apply(ds.x_raw(i, j));
    ds.y_scaled.resize(ds.y_raw.size());
    for (size_t i = 0; i < ds.y_raw.size(); ++i) ds.y_scaled[i] = s.apply(ds.y_raw[i]);
    ds.scaled = true;
}

WindowedDataset build_dataset(const Series& s, int lookback, int horizon,
                              const Scaler* fixed_scaler) {
    WindowedDataset ds = make_windows(s, lookback, horizon);
    split_chronological(ds, 0.60, 0.15, 0.25);
    const Scaler sc = fixed_scaler ? *fixed_scaler : fit_scaler(ds);
    apply_scaler(ds, sc);
    return ds;
}

double kl_divergence(const std::vector<double>& p_samples, const std::vector<double>& q_samples,
                     int bins) {
    if (p_samples.empty() || q_samples.empty())
        throw DataError("kl_divergence: empty sample set");
    if (bins < 1) throw DataError("kl_divergence: bins must be positive");
    double lo = p_samples[0], hi = p_samples[0];
    for (double v : p_samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : q_samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> p(size_t(bins), 0.0), q(size_t(bins), 0.0);
    const double width = hi - lo;
    auto bin_of = [&](double v) {
        if (width <= 0.0) return 0;
        int b = int((v - lo) / width * bins);
        return b >= bins ? bins - 1 : (b < 0 ? 0 : b);
    };
    for (double v : p_samples) p[size_t(bin_of(v))] += 1.0;
    for (double v : q_samples) q[size_t(bin_of(v))] += 1.0;
    constexpr double eps = 1e-10;
    double psum = 0.0, qsum = 0.0;
    for (int b = 0; b < bins; ++b) {
        p[size_t(b)] += eps;
        q[size_t(b)] += eps;
        psum += p[size_t(b)];
        qsum += q[size_t(b)];
    }
    double d = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double pb = p[size_t(b)] / psum;
        const double qb = q[size_t(b)] / qsum;
        d += pb * std::log(pb / qb);
    }
    return d;
}

double median(std::vector<double> v) {
    if (v.empty()) throw DataError("median: empty input");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

// day key -> flow values for the 288 buckets, only for complete gap-free days
std::map<int64_t, std::vector<double>> full_days(const Series& s) {
    std::map<int64_t, std::vector<double>> by_day;
    std::map<int64_t, bool> damaged;
    for (size_t i = 0; i < s.size(); ++i) {
        const int64_t day = s.t[i] / 86400;
        if (!s.gap.empty() && s.gap[i]) {
            damaged[day] = true;
            continue;
        }
        by_day[day].push_back(s.flow[i]);
    }
    std::map<int64_t, std::vector<double>> out;
    for (auto& [day, values] : by_day)
        if (int(values.size()) == kBucketsPerDay && !damaged.count(day))
            out.emplace(day, std::move(values));
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double sab = 0.0, sa = 0.0, sb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        sa += (a[i] - ma) * (a[i] - ma);
        sb += (b[i] - mb) * (b[i] - mb);
    }
    if (sa <= 0.0 || sb <= 0.0) return 0.0;
    return sab / std::sqrt(sa * sb);
}

} // namespace

SimilarityReport similarity_report(const Series& training, const Series& candidate, int days,
                                   int bins) {
    if (days < 1) throw DataError("similarity_report: days must be positive");
    auto train_days = full_days(training);
    auto cand_days = full_days(candidate);
    SimilarityReport rep;
    rep.station_id = candidate.station_id;
    for (auto& [day, tvals] : train_days) {
        auto it = cand_days.find(day);
        if (it == cand_days.end()) continue;
        rep.day_start.push_back(day * 86400);
        rep.kl.push_back(kl_divergence(it->second, tvals, bins));
        rep.correlation.push_back(pearson(tvals, it->second));
        if (int(rep.day_start.size()) == days) break;
    }
    if (int(rep.day_start.size()) < days)
        throw DataError("similarity_report: only " + std::to_string(rep.day_start.size()) +
                        " matching full days, need " + std::to_string(days));
    rep.median_kl = median(rep.kl);
    rep.median_correlation = median(rep.correlation);
    return rep;
}

std::vector<size_t> rank_stations(const std::vector<SimilarityReport>& reports) {
    std::vector<size_t> order(reports.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return reports[a].median_kl < reports[b].median_kl;
    });
    return order;
}

SynthProfile SynthProfile::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("synth profile: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("synth profile: expected a JSON object");
    SynthProfile p;
    auto take = [&](const char* key, double& field) {
        if (j.contains(key)) {
            if (!j[key].is_number())
                throw DataError(std::string("synth profile: '") + key + "' must be a number");
            field = j[key].get<double>();
            j.erase(key);
        }
    };
    take("base", p.base);
    take("day_amp", p.day_amp);
    take("day_center", p.day_center);
    take("day_width", p.day_width);
    take("morning_peak", p.morning_peak);
    take("morning_hour", p.morning_hour);
    take("morning_width", p.morning_width);
    take("evening_peak", p.evening_peak);
    take("evening_hour", p.evening_hour);
    take("evening_width", p.evening_width);
    take("noise_base", p.noise_base);
    take("noise_scale", p.noise_scale);
    take("skew", p.skew);
    take("phase_shift_hours", p.phase_shift_hours);
    if (!j.empty())
        throw DataError("synth profile: unknown key '" + j.begin().key() + "'");
    if (p.base < 0 || p.day_amp < 0 || p.morning_peak < 0 || p.evening_peak < 0 ||
        p.noise_base < 0 || p.noise_scale < 0 || p.skew <= 0 || p.day_width <= 0 ||
        p.morning_width <= 0 || p.evening_width <= 0)
        throw DataError("synth profile: invalid parameter value");
    return p;
}

std::string SynthProfile::to_json_text() const {
    json j;
    j["base"] = base;
    j["day_amp"] = day_amp;
    j["day_center"] = day_center;
    j["day_width"] = day_width;
    j["morning_peak"] = morning_peak;
    j["morning_hour"] = morning_hour;
    j["morning_width"] = morning_width;
    j["evening_peak"] = evening_peak;
    j["evening_hour"] = evening_hour;
    j["evening_width"] = evening_width;
    j["noise_base"] = noise_base;
    j["noise_scale"] = noise_scale;
    j["skew"] = skew;
    j["phase_shift_hours"] = phase_shift_hours;
    return j.dump(1);
}

namespace {

double shape_raw(const SynthProfile& p, double tau) {
    auto bump = [](double t, double center, double width) {
        const double d = (t - center) / width;
        return std::exp(-d * d);
    };
    return p.day_amp * bump(tau, p.day_center, p.day_width) +
           p.morning_peak * bump(tau, p.morning_hour, p.morning_width) +
           p.evening_peak * bump(tau, p.evening_hour, p.evening_width);
}

double shape_max(const SynthProfile& p) {
    double m = 0.0;
    for (int b = 0; b < kBucketsPerDay; ++b)
        m = std::max(m, shape_raw(p, 24.0 * b / kBucketsPerDay));
    return m;
}

double shape01(const SynthProfile& p, double tau_hours) {
    double tau = std::fmod(tau_hours - p.phase_shift_hours, 24.0);
    if (tau < 0) tau += 24.0;
    const double m = shape_max(p);
    if (m <= 0.0) return 0.0;
    return std::pow(shape_raw(p, tau) / m, p.skew);
}

} // namespace

double synth_mean(const SynthProfile& p, double tau_hours) {
    return p.base + shape_max(p) * shape01(p, tau_hours);
}

double synth_sigma(const SynthProfile& p, double tau_hours) {
    return p.noise_base + p.noise_scale * shape01(p, tau_hours);
}

Series synth_generate(const SynthProfile& p, int days, uint64_t seed,
                      const std::string& station_id) {
    if (days < 1) throw UsageError("synth_generate: days must be positive");
    RngStream rng(seed);
    Series s;
    s.station_id = station_id;
    const size_t n = size_t(days) * kBucketsPerDay;
    s.t.resize(n);
    s.flow.resize(n);
    s.gap.assign(n, false);
    for (size_t i = 0; i < n; ++i) {
        const int64_t ts = kSynthStartEpoch + int64_t(i) * kBucketSeconds;
        const double tau = double(ts % 86400) / 3600.0;
        const double v = synth_mean(p, tau) + synth_sigma(p, tau) * rng.normal();
        s.t[i] = ts;
        s.flow[i] = std::max(0.0, double(std::llround(v)));
    }
    return s;
}

} // namespace uqcast

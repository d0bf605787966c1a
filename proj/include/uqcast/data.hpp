#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uqcast/matrix.hpp"
#include "uqcast/rng.hpp"
#include "uqcast/scaler.hpp"

namespace uqcast {

constexpr int64_t kBucketSeconds = 300;
constexpr int kBucketsPerDay = 288;
/// Synthetic series start: 2022-01-03 00:00:00 UTC (a Monday, midnight-aligned).
constexpr int64_t kSynthStartEpoch = 1641168000;

/// Flow series at uniform spacing. After aggregation the grid is contiguous
/// 5-minute buckets; buckets with missing sub-samples carry a gap flag.
struct Series {
    std::string station_id;
    std::vector<int64_t> t; // epoch seconds, strictly increasing
    std::vector<double> flow;
    std::vector<bool> gap;

    size_t size() const { return t.size(); }
};

struct LoadReport {
    int out_of_order_rows = 0;
};

/// CSV with header `timestamp,flow`; timestamps ISO-8601 or epoch seconds.
/// Rows are sorted if needed (warning counted); duplicate timestamps and
/// negative flows are rejected with the offending line number.
Series load_csv(const std::string& path, LoadReport* report = nullptr);
void save_csv(const Series& s, const std::string& path);

int64_t parse_timestamp(const std::string& text); // throws DataError

/// Sum of counts per aligned 5-minute bucket. Buckets with missing
/// sub-samples (or absent entirely) are emitted with a gap flag; the output
/// grid is contiguous. The input cadence must divide 5 minutes.
Series aggregate_5min(const Series& raw);

Scaler fit_scaler(const std::vector<double>& train_values);
Series apply_scaler(const Scaler& s, const Series& series);

/// Stride-1 sliding windows with the target `horizon` steps past the window
/// end. Windows touching a flagged gap are dropped (counted, not imputed).
/// Chronological split over the surviving window count with the floor rule
/// train = floor(f_tr*n), val = floor(f_va*n), test = remainder.
struct WindowedDataset {
    int lookback = 0;
    int horizon = 0;
    Matrix x_raw; // (n, L) unscaled inputs
    Matrix x;     // (n, L) scaled inputs (after apply_scaler)
    std::vector<double> y_raw;
    std::vector<double> y_scaled;
    std::vector<int64_t> target_ts;
    std::vector<size_t> start_idx; // first raw-series index of each window
    size_t n_train = 0, n_val = 0, n_test = 0;
    int dropped_gap_windows = 0;
    Scaler scaler;
    bool scaled = false;

    size_t size() const { return y_raw.size(); }
    size_t val_begin() const { return n_train; }
    size_t test_begin() const { return n_train + n_val; }
};

WindowedDataset make_windows(const Series& s, int lookback, int horizon);
void split_chronological(WindowedDataset& ds, double train_frac, double val_frac,
                         double test_frac);
/// Min/max over the raw inputs and targets of the train windows only.
Scaler fit_scaler(const WindowedDataset& ds);
void apply_scaler(WindowedDataset& ds, const Scaler& s);

/// load -> (aggregate) -> window -> split -> scale in one step; pass a fixed
/// scaler to evaluate foreign data in a trained model's units.
WindowedDataset build_dataset(const Series& s, int lookback, int horizon,
                              const Scaler* fixed_scaler = nullptr);

/// Histogram KL with `bins` equal bins on the shared sample range and
/// additive smoothing 1e-10 before normalization: D(P||Q) = sum p ln(p/q).
double kl_divergence(const std::vector<double>& p_samples, const std::vector<double>& q_samples,
                     int bins = 50);

struct SimilarityReport {
    std::string station_id;
    std::vector<int64_t> day_start; // matched full days, ascending
    std::vector<double> kl;         // D(candidate day || training day)
    std::vector<double> correlation;
    double median_kl = 0.0;
    double median_correlation = 0.0;
};

/// Day-by-day comparison over the first `days` UTC days that are complete in
/// both series; per-day KL of the flow distributions plus Pearson correlation
/// of the paired 5-minute flows, with medians over days.
SimilarityReport similarity_report(const Series& training, const Series& candidate, int days = 30,
                                   int bins = 50);

/// Indices into `reports` ordered by ascending median KL (rank 1 = closest).
std::vector<size_t> rank_stations(const std::vector<SimilarityReport>& reports);

double median(std::vector<double> v);

/// Daily profile: broad daytime hump plus morning/evening peak bumps over a
/// night-time base, a flow-proportional noise schedule and a skew exponent
/// that pushes mass toward low flows.
struct SynthProfile {
    double base = 30.0;
    double day_amp = 220.0;
    double day_center = 13.0;
    double day_width = 5.5;
    double morning_peak = 120.0;
    double morning_hour = 8.0;
    double morning_width = 1.2;
    double evening_peak = 150.0;
    double evening_hour = 17.5;
    double evening_width = 1.5;
    double noise_base = 2.0;
    double noise_scale = 12.0;
    double skew = 1.0;
    double phase_shift_hours = 0.0;

    static SynthProfile from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Deterministic mean flow at time-of-day tau (hours in [0, 24)).
double synth_mean(const SynthProfile& p, double tau_hours);
/// Known noise standard deviation schedule at tau.
double synth_sigma(const SynthProfile& p, double tau_hours);
/// Vehicles per 5 minutes, >= 0, deterministic given the seed; 288 buckets
/// per day starting at kSynthStartEpoch.
Series synth_generate(const SynthProfile& p, int days, uint64_t seed,
                      const std::string& station_id = "synthetic");

} // namespace uqcast

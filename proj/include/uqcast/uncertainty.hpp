#pragma once

#include <string>
#include <vector>

#include "uqcast/model.hpp"
#include "uqcast/scaler.hpp"

namespace uqcast {

/// Per-pass stochastic forward results: T passes over n windows.
struct McEnsemble {
    int passes = 0;
    std::vector<std::vector<double>> y_hat; // [pass][sample]
    std::vector<std::vector<double>> s;     // [pass][sample] log-variance

    size_t samples() const { return y_hat.empty() ? 0 : y_hat[0].size(); }
};

/// T independent mc-mode forwards per window; pass t draws its masks from
/// rng.split(t), so results are bit-reproducible and passes may run on
/// worker threads (bounded by UQCAST_THREADS).
McEnsemble mc_sample(const Model& m, const Matrix& windows, int passes, const RngStream& rng);

struct UncertaintyEstimate {
    double mean = 0.0;
    double epistemic_var = 0.0;
    double aleatoric_var = 0.0;
    double total_var = 0.0; // epistemic + aleatoric, same floating sequence
    double lower95 = 0.0;
    double upper95 = 0.0;
};

/// Population-form decomposition over the T passes:
/// epistemic = (1/T) sum yhat^2 - ((1/T) sum yhat)^2 (divide-by-T, not T-1),
/// aleatoric = (1/T) sum exp(s). Interval is mean +/- 1.96 sqrt(total).
std::vector<UncertaintyEstimate> decompose(const McEnsemble& ens);

/// Variances scale by range^2; mean and bounds invert affinely.
UncertaintyEstimate to_unscaled(const UncertaintyEstimate& e, const Scaler& s);
std::vector<UncertaintyEstimate> to_unscaled(const std::vector<UncertaintyEstimate>& es,
                                             const Scaler& s);

/// Box statistics with R-7 linear-interpolation quantiles; whiskers reach the
/// most extreme data point within 1.5 IQR of the box.
struct BoxStats {
    size_t count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;
    double whisker_hi = 0.0;
};

BoxStats box_stats(std::vector<double> values);

struct GroupedBox {
    std::string group;
    BoxStats stats;
};

/// One box per expected group, in the given order; a group with no samples
/// is an error naming it. Pass a single group to summarize ungrouped.
std::vector<GroupedBox> summarize_uncertainty(const std::vector<double>& values,
                                              const std::vector<std::string>& labels,
                                              const std::vector<std::string>& expected_groups);

/// Per-sample CSV in unscaled units: timestamp, y_true, mean, epistemic_std,
/// aleatoric_std, total_std, lower95, upper95.
void write_uncertainty_csv(const std::vector<int64_t>& ts, const std::vector<double>& y_true,
                           const std::vector<UncertaintyEstimate>& estimates,
                           const std::string& path);

/// Worker count: min(UQCAST_THREADS, hardware), at least 1.
int worker_count();

} // namespace uqcast

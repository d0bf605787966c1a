#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uqcast/model.hpp"

namespace uqcast {

struct Metrics {
    double rmse = 0.0; // unscaled units (vehicles / 5 min)
    double mape = 0.0; // ratio
    double r2 = 0.0;
    size_t n = 0;
    size_t mape_excluded = 0; // |y| < 1e-8 terms left out, reported when nonzero
};

Metrics compute_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred);

/// Time-of-day traffic regimes: low [0,6)h, increasing [6,8)h, high [8,18)h,
/// decreasing [18,24)h.
enum class Regime { low, increasing, high, decreasing };

std::string to_string(Regime r);
Regime regime_of(int64_t timestamp);
std::vector<Regime> label_regimes(const std::vector<int64_t>& timestamps);
std::vector<std::string> regime_labels(const std::vector<int64_t>& timestamps);
const std::vector<std::string>& all_regime_names();

/// Gradients of the predicted mean with respect to each input lag
/// (deterministic forward), plus a per-day min-max normalization of the map.
struct SaliencyMap {
    Matrix raw;        // (n, L)
    Matrix normalized; // (n, L) mapped to [0, 1] within each target day
    std::vector<int64_t> target_ts;
};

SaliencyMap input_gradients(const Model& m, const Matrix& windows,
                            const std::vector<int64_t>& target_ts);

void write_saliency_csv(const SaliencyMap& map, const std::string& path);

/// Per-regime dispersion of the penultimate features: sum over the feature
/// dimensions of the per-dimension sample variance (divide by n-1).
struct FeatureStats {
    std::vector<std::string> regime;
    std::vector<double> variance;
    std::vector<size_t> count;
};

FeatureStats feature_dispersion(const Model& m, const Matrix& windows,
                                const std::vector<Regime>& labels);

void write_metrics_csv(const Metrics& metrics, const std::string& path);
void write_dispersion_csv(const FeatureStats& stats, const std::string& path);

} // namespace uqcast

#pragma once

#include <string>
#include <vector>

namespace uqcast {

/// Line-plus-band chart: truth and mean polylines over a shaded 95% band.
/// Emitted with primitive paths only; no timestamps or other run-dependent
/// bytes, so identical inputs give identical files.
struct BandChart {
    std::string title;
    std::string x_label = "hours";
    std::string y_label = "flow (veh/5min)";
    std::vector<double> x;
    std::vector<double> y_true;
    std::vector<double> y_mean;
    std::vector<double> lower;
    std::vector<double> upper;
};

void write_band_chart_svg(const BandChart& chart, const std::string& path);

} // namespace uqcast

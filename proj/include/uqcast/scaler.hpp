#pragma once

namespace uqcast {

/// Min-max scaler fitted on the training split only. Values outside the
/// training range map outside [0, 1]; out-of-distribution data is not
/// clipped by design.
struct Scaler {
    double min = 0.0;
    double max = 1.0;
    bool fitted = false;

    double range() const { return max - min; }
    double apply(double x) const { return (x - min) / (max - min); }
    double invert(double x) const { return min + x * (max - min); }
};

} // namespace uqcast

#pragma once

#include <functional>
#include <vector>

namespace uqcast {

/// Central finite differences (f(x+h*e_i) - f(x-h*e_i)) / (2h) per coordinate.
/// Independent oracle for tape gradients; never calls into the tape.
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> theta,
    double h);

/// Relative error used by every gradient check:
/// |g1 - g2| / max(1e-8, |g1| + |g2|).
double gradient_rel_error(double g1, double g2);

} // namespace uqcast

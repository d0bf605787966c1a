#include "uqcast/gradcheck.hpp"

#include <cmath>

#include "uqcast/errors.hpp"

namespace uqcast {

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> theta,
    double h) {
    if (h <= 0.0) throw NumericError("finite_difference_gradient: step must be positive");
    std::vector<double> grad(theta.size());
    for (size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        theta[i] = orig + h;
        const double fp = f(theta);
        theta[i] = orig - h;
        const double fm = f(theta);
        theta[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double gradient_rel_error(double g1, double g2) {
    const double denom = std::abs(g1) + std::abs(g2);
    return std::abs(g1 - g2) / (denom < 1e-8 ? 1e-8 : denom);
}

} // namespace uqcast

#include "uqcast/eig.hpp"

#include <algorithm>
#include <cmath>

#include "uqcast/errors.hpp"

namespace uqcast {

std::vector<double> jacobi_eigenvalues(Matrix a, int max_sweeps) {
    if (a.rows() != a.cols()) throw ShapeError("jacobi: matrix not square " + a.shape_str());
    const int n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(size_t(n));
    for (int i = 0; i < n; ++i) eig[size_t(i)] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

double largest_singular_value_oracle(const Matrix& w) {
    const Matrix wtw = matmul_tn(w, w);
    const std::vector<double> eig = jacobi_eigenvalues(wtw);
    const double lmax = eig.empty() ? 0.0 : eig.back();
    return std::sqrt(std::max(0.0, lmax));
}

} // namespace uqcast

#pragma once

#include <vector>

#include "uqcast/matrix.hpp"

namespace uqcast {

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Independent
/// of the power-iteration path; serves as the spectral-norm oracle.
std::vector<double> jacobi_eigenvalues(Matrix a, int max_sweeps = 64);

/// sqrt(lambda_max(W^T W)) -- the largest singular value of W.
double largest_singular_value_oracle(const Matrix& w);

} // namespace uqcast

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace uqcast {

struct VerifyResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Gradient-check, spectral-norm-oracle, decomposition and windowing
/// invariant suites; `fast` runs reduced sizes.
std::vector<VerifyResult> run_verification(bool fast);

/// Prints one line per check; returns the number of failures.
int report_verification(const std::vector<VerifyResult>& results, std::ostream& out);

} // namespace uqcast

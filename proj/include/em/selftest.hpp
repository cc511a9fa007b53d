#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace em::selftest {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;   // first few failure messages, empty on pass
    double seconds = 0.0;
    int criterion = 0;    // 1..11 for acceptance checks, 0 for invariant checks
};

// Runs the whole invariant + acceptance suite in a fixed order with fixed
// seeds; deterministic across runs and platforms.
std::vector<CheckResult> run_all();

// Delta-method standard error of the fitted visibility for binomial counts on
// the given grid, at the true fringe c0 * (1 + v cos(phi - alpha)). Used to
// calibrate shot-noise tolerances.
double propagated_visibility_sigma(double c0, double v, double alpha,
                                   const std::vector<double>& grid, long long shots);

} // namespace em::selftest

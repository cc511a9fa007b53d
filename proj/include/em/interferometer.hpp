#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "em/qmat.hpp"

namespace em {

// One interference scan: phases with the matching bright-port intensities.
// Sampled runs also carry the raw counts and the per-point shot budget.
struct InterferencePattern {
    std::vector<double> phases;
    std::vector<double> intensities;          // in [0, 1]
    std::vector<long long> counts;            // sampled runs only
    std::optional<long long> shots;           // sampled runs only
};

void validate_pattern(const InterferencePattern& p);

struct FringeFit {
    double mean_level = 0.0;   // fitted c0 in c0 * (1 + V cos(phi - alpha))
    double visibility = 0.0;   // in [0, 1]
    double phase = 0.0;        // alpha in (-pi, pi]; 0 by convention when undefined
    double residual = 0.0;     // rms misfit
    bool phase_undefined = false;
};

// Ancilla-controlled interferometer step: Hadamard on the ancilla, a relative
// phase phi on its |0> arm, U on the system conditioned on |1>, then a second
// Hadamard. Input is |0><0| (x) rho; the returned state lives on 2*dim.
DensityMatrix evolve(const DensityMatrix& rho, const UnitaryOperator& u, double phi);

// Probability of finding the ancilla back in |0> after the scan step.
double intensity(const DensityMatrix& rho, const UnitaryOperator& u, double phi);

std::vector<double> default_phase_grid(int n); // n equispaced points on [0, 2pi)

InterferencePattern run_exact(const DensityMatrix& rho, const UnitaryOperator& u,
                              const std::vector<double>& grid);
InterferencePattern run_sampled(const DensityMatrix& rho, const UnitaryOperator& u,
                                const std::vector<double>& grid, long long shots,
                                std::uint64_t seed);

// Least-squares fit of c0 + c1 cos(phi) + c2 sin(phi); visibility and phase
// are ratio-based, so any uniform rescaling of the intensities drops out.
FringeFit fit_fringe(const InterferencePattern& p);

// Convenience: exact 16-point scan plus fit.
struct VisibilityPhase {
    double visibility;
    double phase;
};
VisibilityPhase visibility_and_phase(const DensityMatrix& rho, const UnitaryOperator& u);

// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

// CSV with header phi,intensity or phi,intensity,counts,shots.
std::string pattern_to_csv(const InterferencePattern& p);

} // namespace em

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "em/interferometer.hpp"
#include "em/qmat.hpp"
#include "em/states.hpp"

namespace em {

enum class RunMode { exact, sampled };
enum class Verdict { entangled, separable, inconclusive, not_applicable };
enum class Pairing { same, conjugate };

std::string to_string(RunMode m);
std::string to_string(Verdict v);

struct RunOptions {
    RunMode mode = RunMode::exact;
    long long shots = 100000;
    int phases = 16;
    std::uint64_t seed = 42;
};

// Uniform result record for every protocol run. `state` is filled in by the
// caller that knows the input spec (the CLI does); `oracle` carries the
// independent reference value when one is defined for the input.
struct ProtocolReport {
    std::string protocol; // linear_entropy | negativity | mutual_predictability | witness
    std::optional<StateSpec> state;
    RunMode mode = RunMode::exact;
    std::optional<long long> shots; // sampled runs only
    std::optional<std::uint64_t> seed;
    std::vector<double> visibility; // one entry per interferometer unitary
    std::vector<double> phase;
    bool multi_unitary = false;     // serialize visibility/phase as arrays
    double estimate = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::optional<double> oracle;
    std::vector<std::string> flags;
};

// --- operator constructions -------------------------------------------------

// All-ones-minus-identity operator: |i><j| summed over i != j.
struct XOperator {
    int d = 0;
    MatC mat;
};
XOperator x_operator(int d);

// Integer coefficient pair (f_n, g_n) with X^n = f_n X + g_n I:
// f_n = ((d-1)^n - (-1)^n) / d, g_n = (d-1) f_{n-1}.
struct LucasCoefficients {
    int d = 0;
    int n = 0;
    double f_n = 0.0;
    double g_n = 0.0;
};
LucasCoefficients lucas_coefficients(int d, int n);

// Closed form of exp(i theta X) on one d-level system.
UnitaryOperator negativity_unitary(int d, double theta);

// Mutually unbiased bases (columns are basis vectors): computational first,
// then the quadratic-phase family for odd prime d (m <= d+1), the Pauli
// eigenbases for d=2 (m <= 3), or just the Fourier basis otherwise (m <= 2).
struct MubSet {
    int d = 0;
    int m = 0;
    std::vector<UnitaryOperator> bases;
};
MubSet mub_set(int d, int m);
int max_mub_count(int d);
UnitaryOperator conjugate_basis(const UnitaryOperator& basis);

// I - 2 sum_k |a_k><a_k| (x) |b_k><b_k| for one correlated-basis pair.
UnitaryOperator mp_unitary(const UnitaryOperator& basis_a, const UnitaryOperator& basis_b);

// Reflection I - 2|psi><psi| about a pure state.
UnitaryOperator oracle_unitary(const DensityMatrix& psi);

// --- protocols ---------------------------------------------------------------

// Linear entropy of entanglement for a pure bipartite state: feeds
// rho_A (x) I/d through the interferometer with the reflection about psi and
// reads E = 1 - (d/2)(1 - V) off the fitted visibility.
ProtocolReport linear_entropy_protocol(const DensityMatrix& psi, const BipartiteShape& shape,
                                       const RunOptions& opts = {});

// Upper bound 1 - d(1 - V)/2 on the convex-roof linear entropy, clamped to [0,1].
double linear_entropy_upper_bound(const DensityMatrix& rho, const BipartiteShape& shape,
                                  double visibility);

// Mixed-state route: same scan against the reflection about a purification of
// rho_A; the estimate is the clamped upper bound rather than the entropy itself.
ProtocolReport linear_entropy_bound_protocol(const DensityMatrix& rho,
                                             const BipartiteShape& shape,
                                             const RunOptions& opts = {});

// Negativity of a Schmidt-basis pure state from a single visibility, using
// exp(i theta X) (x) exp(i theta X) with theta = pi/d unless overridden.
ProtocolReport negativity_protocol_pure(const DensityMatrix& psi, const BipartiteShape& shape,
                                        const RunOptions& opts = {},
                                        std::optional<double> theta = {});

// Same scan calibrated for the maximally-entangled/classically-correlated
// mixture family (and other states with vanishing X-marginals).
ProtocolReport negativity_protocol_cna(const DensityMatrix& rho, int d,
                                       const RunOptions& opts = {},
                                       std::optional<double> theta = {});

// Mutual-predictability sum over m correlated MUB pairs against the
// separability bound 1 + (m-1)/d.
struct MpDetails {
    std::vector<double> predictabilities; // C_k per basis pair
    double sum_c = 0.0;
    double bound = 0.0;                   // 1 + (m-1)/d
    double signed_visibility_sum = 0.0;   // sum of sign-resolved visibilities
    double visibility_bound_upper = 0.0;  // 2*bound - m
    double visibility_bound_lower = 0.0;  // m - 2*bound
    bool predictability_violated = false; // sum_c > bound
    bool visibility_violated = false;     // signed sum > 2*bound - m
};
struct MpRun {
    ProtocolReport report;
    MpDetails details;
};
MpRun mutual_predictability_run(const DensityMatrix& rho, int d, int m, Pairing pairing,
                                const RunOptions& opts = {});
ProtocolReport mutual_predictability_protocol(const DensityMatrix& rho, int d, int m,
                                              Pairing pairing, const RunOptions& opts = {});

// SWAP witness: estimate tr(F rho) = V cos(alpha) from one scan with U = F.
ProtocolReport witness_swap_protocol(const DensityMatrix& rho, int d,
                                     const RunOptions& opts = {});

// Small-rotation witness: U = exp(i theta W); fitted phase / theta estimates
// tr(W rho) to first order. theta must lie in (0, 0.01].
ProtocolReport witness_small_theta_protocol(const DensityMatrix& rho, const MatC& w,
                                            double theta, const RunOptions& opts = {});

} // namespace em

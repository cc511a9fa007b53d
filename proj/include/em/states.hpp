#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "em/qmat.hpp"
#include "em/rng.hpp"

namespace em {

// Schmidt coefficients (probabilities): non-negative, summing to 1.
struct SchmidtSpec {
    std::vector<double> lambdas;
};

void validate_schmidt(const SchmidtSpec& s); // throws InvalidInput naming the bad field

enum class StateKind { pure_schmidt, max_entangled, werner, isotropic, cna, dense, ensemble };

// Parsed description of a bipartite input state. Only the fields relevant to
// `kind` are populated; `prepare_state` turns it into an actual state.
struct StateSpec {
    StateKind kind = StateKind::max_entangled;
    SchmidtSpec schmidt;               // pure_schmidt
    int d = 0;                         // max_entangled / werner / isotropic / cna
    double x = 0.0;                    // werner / isotropic / cna
    int dA = 0, dB = 0;                // dense
    std::vector<std::vector<double>> re, im; // dense entries
    std::vector<double> weights;       // ensemble
    std::vector<SchmidtSpec> members;  // ensemble (pure Schmidt members)
};

// Pure-state members retained alongside the mixture so convex-roof style
// bounds can be checked against the generating decomposition.
struct EnsembleDecomposition {
    std::vector<double> weights;
    std::vector<DensityMatrix> members;
};

struct PreparedState {
    DensityMatrix rho;
    BipartiteShape shape;
    StateSpec spec;
    std::optional<EnsembleDecomposition> ensemble;
};

// State factories. All results pass DensityMatrix validation.
PreparedState make_pure_schmidt(const SchmidtSpec& s);
DensityMatrix make_max_entangled(int d);
DensityMatrix make_werner(int d, double x);    // x = symmetric weight; tr(F rho) = 2x - 1
DensityMatrix make_isotropic(int d, double x); // x * |Phi+><Phi+| + (1-x) I/d^2
DensityMatrix make_cna(int d, double x);       // x * |Phi+><Phi+| + (1-x)/d sum |jj><jj|

// SWAP operator F |i,j> = |j,i> on d (x) d.
MatC swap_operator(int d);
MatC maximally_mixed(int d);

// JSON state-spec handling. parse_state_spec accepts the serialized object,
// validates, and prepares the state.
StateSpec state_spec_from_json_text(const std::string& text);
PreparedState prepare_state(const StateSpec& spec);
PreparedState parse_state_spec(const std::string& text);

// Seeded random states/unitaries for tests and self-checks.
DensityMatrix random_pure(int d, std::uint64_t seed); // Haar on d (x) d, shape (d, d)
SchmidtSpec random_schmidt(int d, Rng& rng);
MatC random_unitary_mat(int n, Rng& rng);
MatC random_matrix(int rows, int cols, Rng& rng); // iid complex Gaussian entries

} // namespace em

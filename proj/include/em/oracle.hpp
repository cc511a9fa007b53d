#pragma once

#include "em/qmat.hpp"
#include "em/states.hpp"

namespace em::oracle {

// Reference values computed directly from the density matrix, with no
// interferometer simulation or fringe fitting anywhere in the call graph.
// Protocol estimates are checked against these.

double purity(const DensityMatrix& rho); // tr(rho^2)

// Negativity (||rho^{T_B}||_1 - 1) / 2 via partial transpose + eigenvalues.
double negativity_ppt(const DensityMatrix& rho, const BipartiteShape& shape);

// Closed form for a pure state with the given Schmidt coefficients:
// (1/2) * sum_{i != j} sqrt(lambda_i lambda_j).
double schmidt_negativity(const SchmidtSpec& s);

// sum_k <a_k b_k| rho |a_k b_k> with basis vectors as columns.
double mutual_predictability_direct(const DensityMatrix& rho, const UnitaryOperator& basis_a,
                                    const UnitaryOperator& basis_b);

double witness_expectation(const DensityMatrix& rho, const MatC& w); // tr(W rho)

} // namespace em::oracle

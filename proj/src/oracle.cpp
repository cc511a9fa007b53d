#include "em/oracle.hpp"

#include <cmath>

namespace em::oracle {

double purity(const DensityMatrix& rho) {
    // tr(rho^2) is real for Hermitian rho.
    return trace_product(rho.mat(), rho.mat()).real();
}

double negativity_ppt(const DensityMatrix& rho, const BipartiteShape& shape) {
    const double tn = trace_norm(partial_transpose(rho, shape, Subsystem::B));
    return std::max(0.0, 0.5 * (tn - 1.0));
}

double schmidt_negativity(const SchmidtSpec& s) {
    validate_schmidt(s);
    const int d = static_cast<int>(s.lambdas.size());
    double sum = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) sum += std::sqrt(s.lambdas[i] * s.lambdas[j]);
    return 0.5 * sum;
}

double mutual_predictability_direct(const DensityMatrix& rho, const UnitaryOperator& basis_a,
                                    const UnitaryOperator& basis_b) {
    const int d = basis_a.dim();
    if (basis_b.dim() != d || rho.dim() != d * d)
        throw InvalidInput("dimension mismatch between state and bases");
    const MatC& m = rho.mat();
    double sum = 0.0;
    for (int k = 0; k < d; ++k) {
        // |v> = |a_k> (x) |b_k>; add <v| rho |v>.
        cplx acc = 0.0;
        for (int i = 0; i < d; ++i)
            for (int ib = 0; ib < d; ++ib) {
                const cplx vi = basis_a.mat()(i, k) * basis_b.mat()(ib, k);
                for (int j = 0; j < d; ++j)
                    for (int jb = 0; jb < d; ++jb) {
                        const cplx vj = basis_a.mat()(j, k) * basis_b.mat()(jb, k);
                        acc += std::conj(vi) * m(i * d + ib, j * d + jb) * vj;
                    }
            }
        sum += acc.real();
    }
    return sum;
}

double witness_expectation(const DensityMatrix& rho, const MatC& w) {
    if (hermiticity_defect(w) > kHermitianTol)
        throw InvalidInput("witness operator failed hermitian check");
    if (w.rows != rho.dim()) throw InvalidInput("dimension mismatch between state and witness");
    return trace_product(w, rho.mat()).real();
}

} // namespace em::oracle

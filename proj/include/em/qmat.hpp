#pragma once

#include <complex>
#include <vector>

#include "em/errors.hpp"

namespace em {

using cplx = std::complex<double>;

// Validation tolerances shared across the library.
inline constexpr double kHermitianTol = 1e-10; // max |M - M†| entry
inline constexpr double kTraceTol     = 1e-10; // |tr(rho) - 1|
inline constexpr double kMinEigTol    = 1e-9;  // eigenvalues >= -kMinEigTol
inline constexpr double kUnitaryTol   = 1e-10; // max |U†U - I| entry
inline constexpr double kUnbiasedTol  = 1e-9;  // MUB overlap tolerance

// Dense complex matrix, row-major. Dimensions here stay small (<= ~64), so
// the implementation favors clarity and exact reproducibility over speed.
struct MatC {
    int rows = 0;
    int cols = 0;
    std::vector<cplx> a;

    MatC() = default;
    MatC(int r, int c);
    MatC(int r, int c, std::vector<cplx> entries);

    static MatC identity(int n);
    static MatC zero(int r, int c) { return MatC(r, c); }

    cplx& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    const cplx& operator()(int i, int j) const {
        return a[static_cast<std::size_t>(i) * cols + j];
    }
};

MatC operator+(const MatC& x, const MatC& y);
MatC operator-(const MatC& x, const MatC& y);
MatC operator*(const MatC& x, const MatC& y); // matrix product
MatC operator*(cplx s, const MatC& x);

MatC dagger(const MatC& m);
MatC kron(const MatC& x, const MatC& y); // row-major, x-major ordering
cplx trace(const MatC& m);
cplx trace_product(const MatC& x, const MatC& y); // tr(x*y) without forming the product

double max_abs(const MatC& m);
double max_abs_diff(const MatC& x, const MatC& y);
double hermiticity_defect(const MatC& m); // max |m - m†|
double unitarity_defect(const MatC& m);   // max |m†m - I|
bool all_finite(const MatC& m);

// Bipartite A (x) B index layout: composite row index i = a * dB + b.
struct BipartiteShape {
    int dA = 0;
    int dB = 0;

    BipartiteShape(int a, int b);
    int dim() const { return dA * dB; }
};

enum class Subsystem { A, B };

// Validated quantum state: square, finite, Hermitian, unit trace, eigenvalues
// above -kMinEigTol. Construction is the single validation point; every API
// that hands out a state goes through it.
class DensityMatrix {
public:
    explicit DensityMatrix(MatC m);

    int dim() const { return m_.rows; }
    const MatC& mat() const { return m_; }

private:
    MatC m_;
};

// Validated unitary: square, finite, |U†U - I| <= kUnitaryTol.
class UnitaryOperator {
public:
    explicit UnitaryOperator(MatC m);

    int dim() const { return m_.rows; }
    const MatC& mat() const { return m_; }

private:
    MatC m_;
};

DensityMatrix partial_trace(const DensityMatrix& rho, const BipartiteShape& shape,
                            Subsystem keep);
MatC partial_transpose(const DensityMatrix& rho, const BipartiteShape& shape,
                       Subsystem side);

struct EighResult {
    std::vector<double> eigenvalues; // ascending
    UnitaryOperator eigenvectors;    // columns; h = V diag(w) V†
};

// Cyclic complex Jacobi eigensolver for Hermitian input. Rejects input with
// hermiticity defect above kHermitianTol.
EighResult eigh(const MatC& h);

// exp(i * theta * h) for Hermitian h, via the eigendecomposition.
UnitaryOperator expm_hermitian(const MatC& h, double theta);

// Sum of absolute eigenvalues (input must be Hermitian).
double trace_norm(const MatC& m);

} // namespace em

#include "em/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace em {

MatC::MatC(int r, int c) : rows(r), cols(c) {
    if (r <= 0 || c <= 0) throw InvalidInput("matrix dimensions must be positive");
    a.assign(static_cast<std::size_t>(r) * c, cplx(0.0, 0.0));
}

MatC::MatC(int r, int c, std::vector<cplx> entries) : rows(r), cols(c), a(std::move(entries)) {
    if (r <= 0 || c <= 0) throw InvalidInput("matrix dimensions must be positive");
    if (a.size() != static_cast<std::size_t>(r) * c)
        throw InvalidInput("entry count does not match rows*cols");
    for (const cplx& z : a)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw InvalidInput("matrix entries must be finite");
}

MatC MatC::identity(int n) {
    MatC m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

MatC operator+(const MatC& x, const MatC& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw InvalidInput("dimension mismatch in add");
    MatC r(x.rows, x.cols);
    for (std::size_t k = 0; k < x.a.size(); ++k) r.a[k] = x.a[k] + y.a[k];
    return r;
}

MatC operator-(const MatC& x, const MatC& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw InvalidInput("dimension mismatch in sub");
    MatC r(x.rows, x.cols);
    for (std::size_t k = 0; k < x.a.size(); ++k) r.a[k] = x.a[k] - y.a[k];
    return r;
}

MatC operator*(const MatC& x, const MatC& y) {
    if (x.cols != y.rows) throw InvalidInput("dimension mismatch in matmul");
    MatC r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const cplx xik = x(i, k);
            if (xik == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

MatC operator*(cplx s, const MatC& x) {
    MatC r(x.rows, x.cols);
    for (std::size_t k = 0; k < x.a.size(); ++k) r.a[k] = s * x.a[k];
    return r;
}

MatC dagger(const MatC& m) {
    MatC r(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(j, i) = std::conj(m(i, j));
    return r;
}

MatC kron(const MatC& x, const MatC& y) {
    MatC r(x.rows * y.rows, x.cols * y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) {
            const cplx xij = x(i, j);
            if (xij == cplx(0.0, 0.0)) continue;
            for (int k = 0; k < y.rows; ++k)
                for (int l = 0; l < y.cols; ++l)
                    r(i * y.rows + k, j * y.cols + l) = xij * y(k, l);
        }
    return r;
}

cplx trace(const MatC& m) {
    if (m.rows != m.cols) throw InvalidInput("trace of non-square matrix");
    cplx t = 0.0;
    for (int i = 0; i < m.rows; ++i) t += m(i, i);
    return t;
}

cplx trace_product(const MatC& x, const MatC& y) {
    if (x.cols != y.rows || x.rows != y.cols) throw InvalidInput("dimension mismatch in trace_product");
    cplx t = 0.0;
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) t += x(i, j) * y(j, i);
    return t;
}

double max_abs(const MatC& m) {
    double r = 0.0;
    for (const cplx& z : m.a) r = std::max(r, std::abs(z));
    return r;
}

double max_abs_diff(const MatC& x, const MatC& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw InvalidInput("dimension mismatch in max_abs_diff");
    double r = 0.0;
    for (std::size_t k = 0; k < x.a.size(); ++k) r = std::max(r, std::abs(x.a[k] - y.a[k]));
    return r;
}

double hermiticity_defect(const MatC& m) {
    if (m.rows != m.cols) throw InvalidInput("hermiticity check on non-square matrix");
    double r = 0.0;
    for (int i = 0; i < m.rows; ++i)
        for (int j = i; j < m.cols; ++j)
            r = std::max(r, std::abs(m(i, j) - std::conj(m(j, i))));
    return r;
}

double unitarity_defect(const MatC& m) {
    if (m.rows != m.cols) throw InvalidInput("unitarity check on non-square matrix");
    return max_abs_diff(dagger(m) * m, MatC::identity(m.rows));
}

bool all_finite(const MatC& m) {
    for (const cplx& z : m.a)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

BipartiteShape::BipartiteShape(int a, int b) : dA(a), dB(b) {
    if (a < 2 || b < 2) throw InvalidInput("local dimensions must be at least 2");
}

namespace {

// Cyclic Jacobi for a Hermitian matrix. Each rotation zeroes one off-diagonal
// pair exactly; sweeps repeat until the off-diagonal Frobenius norm falls
// below 1e-12 (or a hard cap of 100 sweeps). Eigenvectors accumulate in v.
void jacobi_hermitian(MatC a, std::vector<double>& evals, MatC& v) {
    const int n = a.rows;
    // Work on the exactly-Hermitian part so roundoff in the input cannot leak.
    for (int i = 0; i < n; ++i) {
        a(i, i) = cplx(a(i, i).real(), 0.0);
        for (int j = i + 1; j < n; ++j) {
            const cplx m = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = m;
            a(j, i) = std::conj(m);
        }
    }
    v = MatC::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off2 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off2 += 2.0 * std::norm(a(i, j));
        if (std::sqrt(off2) < 1e-12) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double r = std::abs(apq);
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                if (r <= 1e-18 * (std::abs(app) + std::abs(aqq))) continue;
                if (r == 0.0) continue;
                // Unitary plane rotation J with J(p,p)=e^{i phi} c,
                // J(p,q)=e^{i phi} s, J(q,p)=-s, J(q,q)=c zeroes a(p,q).
                const cplx phase = apq / r;
                const double tau = (aqq - app) / (2.0 * r);
                double t;
                if (tau == 0.0)
                    t = 1.0;
                else
                    t = (tau > 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const cplx aip = a(i, p);
                    const cplx aiq = a(i, q);
                    a(i, p) = phase * c * aip - s * aiq;
                    a(i, q) = phase * s * aip + c * aiq;
                    a(p, i) = std::conj(a(i, p));
                    a(q, i) = std::conj(a(i, q));
                }
                a(p, p) = app * c * c - 2.0 * r * s * c + aqq * s * s;
                a(q, q) = app * s * s + 2.0 * r * s * c + aqq * c * c;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int i = 0; i < n; ++i) {
                    const cplx vip = v(i, p);
                    const cplx viq = v(i, q);
                    v(i, p) = phase * c * vip - s * viq;
                    v(i, q) = phase * s * vip + c * viq;
                }
            }
    }
    evals.resize(n);
    for (int i = 0; i < n; ++i) evals[i] = a(i, i).real();
    // Sort ascending, permuting eigenvector columns to match.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return evals[x] < evals[y]; });
    std::vector<double> we(n);
    MatC vp(n, n);
    for (int j = 0; j < n; ++j) {
        we[j] = evals[idx[j]];
        for (int i = 0; i < n; ++i) vp(i, j) = v(i, idx[j]);
    }
    evals = std::move(we);
    v = std::move(vp);
}

std::vector<double> hermitian_eigenvalues(const MatC& h) {
    std::vector<double> w;
    MatC v;
    jacobi_hermitian(h, w, v);
    return w;
}

} // namespace

DensityMatrix::DensityMatrix(MatC m) : m_(std::move(m)) {
    if (m_.rows != m_.cols) throw InvalidInput("density matrix must be square");
    if (m_.rows < 2) throw InvalidInput("density matrix dimension must be at least 2");
    if (!all_finite(m_)) throw InvalidInput("density matrix entries must be finite");
    if (hermiticity_defect(m_) > kHermitianTol)
        throw InvalidInput("density matrix failed hermitian check");
    if (std::abs(trace(m_) - cplx(1.0, 0.0)) > kTraceTol)
        throw InvalidInput("density matrix failed trace check");
    const std::vector<double> w = hermitian_eigenvalues(m_);
    if (w.front() < -kMinEigTol)
        throw InvalidInput("density matrix failed psd check");
}

UnitaryOperator::UnitaryOperator(MatC m) : m_(std::move(m)) {
    if (m_.rows != m_.cols) throw InvalidInput("unitary must be square");
    if (!all_finite(m_)) throw InvalidInput("unitary entries must be finite");
    if (unitarity_defect(m_) > kUnitaryTol) throw InvalidInput("operator failed unitarity check");
}

DensityMatrix partial_trace(const DensityMatrix& rho, const BipartiteShape& shape,
                            Subsystem keep) {
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    const int dA = shape.dA, dB = shape.dB;
    const MatC& m = rho.mat();
    if (keep == Subsystem::A) {
        MatC r(dA, dA);
        for (int i = 0; i < dA; ++i)
            for (int j = 0; j < dA; ++j)
                for (int b = 0; b < dB; ++b) r(i, j) += m(i * dB + b, j * dB + b);
        return DensityMatrix(std::move(r));
    }
    MatC r(dB, dB);
    for (int i = 0; i < dB; ++i)
        for (int j = 0; j < dB; ++j)
            for (int a = 0; a < dA; ++a) r(i, j) += m(a * dB + i, a * dB + j);
    return DensityMatrix(std::move(r));
}

MatC partial_transpose(const DensityMatrix& rho, const BipartiteShape& shape, Subsystem side) {
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    const int dA = shape.dA, dB = shape.dB;
    const MatC& m = rho.mat();
    MatC r(shape.dim(), shape.dim());
    for (int a = 0; a < dA; ++a)
        for (int b = 0; b < dB; ++b)
            for (int c = 0; c < dA; ++c)
                for (int d = 0; d < dB; ++d) {
                    if (side == Subsystem::B)
                        r(a * dB + d, c * dB + b) = m(a * dB + b, c * dB + d);
                    else
                        r(c * dB + b, a * dB + d) = m(a * dB + b, c * dB + d);
                }
    return r;
}

EighResult eigh(const MatC& h) {
    if (h.rows != h.cols) throw InvalidInput("eigh requires a square matrix");
    if (!all_finite(h)) throw InvalidInput("eigh requires finite entries");
    if (hermiticity_defect(h) > kHermitianTol) throw InvalidInput("eigh requires hermitian input");
    std::vector<double> w;
    MatC v;
    jacobi_hermitian(h, w, v);
    return EighResult{std::move(w), UnitaryOperator(std::move(v))};
}

UnitaryOperator expm_hermitian(const MatC& h, double theta) {
    const EighResult e = eigh(h);
    const int n = h.rows;
    const MatC& v = e.eigenvectors.mat();
    MatC r(n, n);
    for (int k = 0; k < n; ++k) {
        const cplx ph = std::exp(cplx(0.0, theta * e.eigenvalues[k]));
        for (int i = 0; i < n; ++i) {
            const cplx vik = v(i, k) * ph;
            for (int j = 0; j < n; ++j) r(i, j) += vik * std::conj(v(j, k));
        }
    }
    return UnitaryOperator(std::move(r));
}

double trace_norm(const MatC& m) {
    if (hermiticity_defect(m) > kHermitianTol)
        throw InvalidInput("trace_norm requires hermitian input");
    const std::vector<double> w = hermitian_eigenvalues(m);
    double s = 0.0;
    for (double x : w) s += std::abs(x);
    return s;
}

} // namespace em

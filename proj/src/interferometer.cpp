#include "em/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "em/rng.hpp"
#include "em/serialize.hpp"

namespace em {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The step unitary (Hadamard, |0>-arm phase phi, controlled U, Hadamard) maps
// the |0> ancilla column to (|0> (x) A + |1> (x) B) / 2 with
// A = e^{i phi} I + U and B = e^{i phi} I - U. Evolving |0><0| (x) rho and
// conjugating therefore gives the four system blocks A rho A†, A rho B†,
// B rho A†, B rho B† (each / 4). This is the exact matrix evolution written
// block-wise; nothing about the fringe shape is assumed.
MatC arm_operator(const MatC& u, double phi, double sign) {
    MatC a = u;
    if (sign < 0)
        for (cplx& z : a.a) z = -z;
    const cplx ph = std::exp(cplx(0.0, phi));
    for (int i = 0; i < a.rows; ++i) a(i, i) += ph;
    return a;
}

MatC evolve_raw(const DensityMatrix& rho, const UnitaryOperator& u, double phi) {
    if (rho.dim() != u.dim()) throw InvalidInput("dimension mismatch between state and unitary");
    const int n = rho.dim();
    const MatC a = arm_operator(u.mat(), phi, +1.0);
    const MatC b = arm_operator(u.mat(), phi, -1.0);
    const MatC ar = a * rho.mat();
    const MatC br = b * rho.mat();
    const MatC ad = dagger(a);
    const MatC bd = dagger(b);
    const MatC b00 = ar * ad;
    const MatC b01 = ar * bd;
    const MatC b10 = br * ad;
    const MatC b11 = br * bd;
    MatC out(2 * n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            out(i, j) = 0.25 * b00(i, j);
            out(i, j + n) = 0.25 * b01(i, j);
            out(i + n, j) = 0.25 * b10(i, j);
            out(i + n, j + n) = 0.25 * b11(i, j);
        }
    return out;
}

// Bright-port probability: trace of the |0><0| ancilla block of the evolved
// state, i.e. tr(A rho A†) / 4.
double intensity_raw(const DensityMatrix& rho, const UnitaryOperator& u, double phi) {
    const MatC a = arm_operator(u.mat(), phi, +1.0);
    const MatC ar = a * rho.mat();
    cplx t = 0.0;
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t += ar(i, j) * std::conj(a(i, j));
    return 0.25 * t.real();
}

int distinct_phases(const std::vector<double>& grid) {
    std::vector<double> w;
    for (double phi : grid) {
        double v = std::fmod(phi, kTwoPi);
        if (v < 0) v += kTwoPi;
        w.push_back(v);
    }
    std::sort(w.begin(), w.end());
    int n = static_cast<int>(w.size());
    if (n == 0) return 0;
    int distinct = 1;
    for (int i = 1; i < n; ++i)
        if (w[i] - w[i - 1] > 1e-9) ++distinct;
    // First and last can alias across the 2pi seam.
    if (distinct > 1 && (w.front() + kTwoPi) - w.back() <= 1e-9) --distinct;
    return distinct;
}

void require_grid(const std::vector<double>& grid) {
    for (double phi : grid)
        if (!std::isfinite(phi)) throw InvalidInput("phase grid entries must be finite");
    if (distinct_phases(grid) < 3)
        throw InvalidInput("degenerate phase grid: need at least 3 distinct phases");
}

// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
void solve3(double m[3][3], double b[3], double out[3]) {
    int piv[3] = {0, 1, 2};
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(m[i][j]));
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[piv[r]][col]) > std::abs(m[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double p = m[piv[col]][col];
        if (std::abs(p) <= 1e-12 * scale)
            throw InvalidInput("degenerate phase grid: singular fit system");
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[piv[r]][col] / p;
            for (int c = col; c < 3; ++c) m[piv[r]][c] -= f * m[piv[col]][c];
            b[piv[r]] -= f * b[piv[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double s = b[piv[col]];
        for (int c = col + 1; c < 3; ++c) s -= m[piv[col]][c] * out[c];
        out[col] = s / m[piv[col]][col];
    }
}

} // namespace

void validate_pattern(const InterferencePattern& p) {
    if (p.phases.size() != p.intensities.size())
        throw InvalidInput("pattern phases and intensities must have equal length");
    if (p.phases.empty()) throw InvalidInput("pattern must be non-empty");
    for (double phi : p.phases)
        if (!std::isfinite(phi)) throw InvalidInput("pattern phases must be finite");
    for (double y : p.intensities)
        if (!(y >= -1e-12 && y <= 1.0 + 1e-12)) throw InvalidInput("intensities out of [0,1]");
    if (p.shots.has_value()) {
        if (*p.shots <= 0) throw InvalidInput("shots must be positive");
        if (p.counts.size() != p.phases.size())
            throw InvalidInput("pattern counts must match phases");
        for (long long c : p.counts)
            if (c < 0 || c > *p.shots) throw InvalidInput("counts out of [0, shots]");
    } else if (!p.counts.empty()) {
        throw InvalidInput("counts present without shots");
    }
}

DensityMatrix evolve(const DensityMatrix& rho, const UnitaryOperator& u, double phi) {
    return DensityMatrix(evolve_raw(rho, u, phi));
}

double intensity(const DensityMatrix& rho, const UnitaryOperator& u, double phi) {
    return std::clamp(intensity_raw(rho, u, phi), 0.0, 1.0);
}

std::vector<double> default_phase_grid(int n) {
    if (n < 3) throw InvalidInput("phase grid needs at least 3 points");
    std::vector<double> grid(n);
    for (int k = 0; k < n; ++k) grid[k] = kTwoPi * k / n;
    return grid;
}

InterferencePattern run_exact(const DensityMatrix& rho, const UnitaryOperator& u,
                              const std::vector<double>& grid) {
    require_grid(grid);
    InterferencePattern p;
    p.phases = grid;
    for (double phi : grid) p.intensities.push_back(intensity(rho, u, phi));
    return p;
}

InterferencePattern run_sampled(const DensityMatrix& rho, const UnitaryOperator& u,
                                const std::vector<double>& grid, long long shots,
                                std::uint64_t seed) {
    require_grid(grid);
    if (shots < 100) throw InvalidInput("sampled mode requires shots >= 100");
    const Rng master(seed);
    InterferencePattern p;
    p.phases = grid;
    p.shots = shots;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double prob = intensity(rho, u, grid[i]);
        // One child stream per phase point: results do not depend on the order
        // in which points are evaluated.
        Rng stream = master.child(i);
        const long long c = sample_binomial(stream, shots, prob);
        p.counts.push_back(c);
        p.intensities.push_back(static_cast<double>(c) / static_cast<double>(shots));
    }
    return p;
}

FringeFit fit_fringe(const InterferencePattern& p) {
    validate_pattern(p);
    if (distinct_phases(p.phases) < 3)
        throw InvalidInput("degenerate phase grid: need at least 3 distinct phases");
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double b[3] = {0, 0, 0};
    for (std::size_t k = 0; k < p.phases.size(); ++k) {
        const double f[3] = {1.0, std::cos(p.phases[k]), std::sin(p.phases[k])};
        for (int i = 0; i < 3; ++i) {
            b[i] += f[i] * p.intensities[k];
            for (int j = 0; j < 3; ++j) m[i][j] += f[i] * f[j];
        }
    }
    double c[3];
    solve3(m, b, c);
    if (!(c[0] > 0.0)) throw InvalidInput("fit failed: non-positive mean level");

    FringeFit fit;
    fit.mean_level = c[0];
    const double r = std::hypot(c[1], c[2]);
    const double ratio = r / c[0];
    fit.visibility = std::clamp(ratio, 0.0, 1.0);
    if (ratio < 1e-12) {
        fit.phase_undefined = true;
        fit.phase = 0.0;
    } else {
        fit.phase = wrap_angle(std::atan2(c[2], c[1]));
    }
    double ss = 0.0;
    for (std::size_t k = 0; k < p.phases.size(); ++k) {
        const double model = c[0] + c[1] * std::cos(p.phases[k]) + c[2] * std::sin(p.phases[k]);
        ss += (p.intensities[k] - model) * (p.intensities[k] - model);
    }
    fit.residual = std::sqrt(ss / static_cast<double>(p.phases.size()));
    return fit;
}

VisibilityPhase visibility_and_phase(const DensityMatrix& rho, const UnitaryOperator& u) {
    const FringeFit fit = fit_fringe(run_exact(rho, u, default_phase_grid(16)));
    return VisibilityPhase{fit.visibility, fit.phase};
}

double wrap_angle(double a) {
    double w = std::remainder(a, kTwoPi);
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

std::string pattern_to_csv(const InterferencePattern& p) {
    validate_pattern(p);
    std::ostringstream out;
    const bool sampled = p.shots.has_value();
    out << (sampled ? "phi,intensity,counts,shots\n" : "phi,intensity\n");
    for (std::size_t k = 0; k < p.phases.size(); ++k) {
        out << format_double17(p.phases[k]) << ',' << format_double17(p.intensities[k]);
        if (sampled) out << ',' << p.counts[k] << ',' << *p.shots;
        out << '\n';
    }
    return out.str();
}

} // namespace em

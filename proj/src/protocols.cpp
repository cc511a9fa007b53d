#include "em/protocols.hpp"

#include <cmath>
#include <numbers>

#include "em/oracle.hpp"
#include "em/rng.hpp"
#include "em/serialize.hpp"

namespace em {

namespace {

constexpr double kVerdictTol = 1e-9;

bool is_prime(int d) {
    if (d < 2) return false;
    for (int k = 2; k * k <= d; ++k)
        if (d % k == 0) return false;
    return true;
}

double state_purity(const DensityMatrix& rho) {
    return trace_product(rho.mat(), rho.mat()).real();
}

void require_pure(const DensityMatrix& rho, const char* who) {
    if (state_purity(rho) < 1.0 - kVerdictTol)
        throw PreconditionError(std::string(who) + " requires a pure input state");
}

// |tr((X (x) I) rho)| or |tr((I (x) X) rho)| on d (x) d.
double x_marginal_abs(const DensityMatrix& rho, int d, Subsystem side) {
    const MatC x = x_operator(d).mat;
    const MatC op = side == Subsystem::A ? kron(x, MatC::identity(d))
                                         : kron(MatC::identity(d), x);
    return std::abs(trace_product(op, rho.mat()));
}

void require_vanishing_x_marginals(const DensityMatrix& rho, int d, const char* who) {
    if (x_marginal_abs(rho, d, Subsystem::A) > 1e-8 ||
        x_marginal_abs(rho, d, Subsystem::B) > 1e-8)
        throw PreconditionError(std::string(who) +
                                ": off-diagonal marginal check failed (state is not "
                                "expressed in its Schmidt basis)");
}

struct FringeOutcome {
    double visibility = 0.0;
    double phase = 0.0;
    bool phase_undefined = false;
};

// One interferometer scan + fit under the requested run options. For
// multi-unitary protocols each unitary gets its own child seed so the
// combined run stays reproducible and order-independent.
FringeOutcome scan(const DensityMatrix& rho, const UnitaryOperator& u, const RunOptions& opts,
                   std::uint64_t unitary_index = 0) {
    const std::vector<double> grid = default_phase_grid(opts.phases);
    InterferencePattern pattern;
    if (opts.mode == RunMode::exact) {
        pattern = run_exact(rho, u, grid);
    } else {
        const std::uint64_t seed =
            unitary_index == 0 ? opts.seed : Rng(opts.seed).child(unitary_index).seed();
        pattern = run_sampled(rho, u, grid, opts.shots, seed);
    }
    const FringeFit fit = fit_fringe(pattern);
    return FringeOutcome{fit.visibility, fit.phase, fit.phase_undefined};
}

void stamp_run(ProtocolReport& r, const RunOptions& opts) {
    r.mode = opts.mode;
    if (opts.mode == RunMode::sampled) {
        r.shots = opts.shots;
        r.seed = opts.seed;
    }
}

void note_phase_undefined(ProtocolReport& r, const FringeOutcome& f) {
    if (f.phase_undefined) r.flags.push_back("phase_undefined");
}

// Invert tr(U rho) = e^{-2 i theta} / d^2 * [2 (z-1)^2 N + (z + d - 1)^2]
// (z = e^{i theta d}) for N, given the fitted complex visibility.
double invert_negativity_trace(int d, double theta, double visibility, double phase) {
    const cplx z = std::exp(cplx(0.0, theta * d));
    if (std::abs(z - cplx(1.0, 0.0)) < 1e-6)
        throw InvalidInput("theta is degenerate: exp(i theta d) too close to 1");
    const cplx w = visibility * std::exp(cplx(0.0, phase));
    const cplx num = static_cast<double>(d) * static_cast<double>(d) *
                         std::exp(cplx(0.0, 2.0 * theta)) * w -
                     (z + cplx(d - 1.0, 0.0)) * (z + cplx(d - 1.0, 0.0));
    return (num / (2.0 * (z - 1.0) * (z - 1.0))).real();
}

void clamp_estimate(ProtocolReport& r, double lo, double hi) {
    const double clamped = std::clamp(r.estimate, lo, hi);
    if (std::abs(clamped - r.estimate) > 1e-12) r.flags.push_back("clamped");
    r.estimate = clamped;
}

} // namespace

std::string to_string(RunMode m) { return m == RunMode::exact ? "exact" : "sampled"; }

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::entangled: return "entangled";
    case Verdict::separable: return "separable";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::not_applicable: return "not_applicable";
    }
    return "inconclusive";
}

XOperator x_operator(int d) {
    if (d < 2) throw InvalidInput("d must be at least 2");
    MatC x(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) x(i, j) = 1.0;
    return XOperator{d, std::move(x)};
}

LucasCoefficients lucas_coefficients(int d, int n) {
    if (d < 2) throw InvalidInput("d must be at least 2");
    if (n < 1) throw InvalidInput("n must be at least 1");
    // (d-1)^k stays exact in 64-bit integers for every n we allow.
    long long pow_prev = 1; // (d-1)^{n-1}
    for (int k = 1; k < n; ++k) {
        if (pow_prev > (1ll << 62) / std::max(1, d - 1))
            throw InvalidInput("n too large for exact integer evaluation");
        pow_prev *= (d - 1);
    }
    const long long pow_n = pow_prev * (d - 1);
    const long long sign_n = (n % 2 == 0) ? 1 : -1;
    const long long f_n = (pow_n - sign_n) / d;       // exact: (d-1)^n = (-1)^n mod d
    const long long f_prev = (pow_prev - (-sign_n)) / d;
    return LucasCoefficients{d, n, static_cast<double>(f_n),
                             static_cast<double>((d - 1) * f_prev)};
}

UnitaryOperator negativity_unitary(int d, double theta) {
    if (d < 2) throw InvalidInput("d must be at least 2");
    const cplx z = std::exp(cplx(0.0, theta * d));
    const cplx pre = std::exp(cplx(0.0, -theta)) / static_cast<double>(d);
    const MatC x = x_operator(d).mat;
    const MatC u = pre * ((z - 1.0) * x + (z + cplx(d - 1.0, 0.0)) * MatC::identity(d));
    return UnitaryOperator(u);
}

int max_mub_count(int d) {
    if (d == 2) return 3;
    if (d % 2 == 1 && is_prime(d)) return d + 1;
    return 2;
}

MubSet mub_set(int d, int m) {
    if (d < 2) throw InvalidInput("d must be at least 2");
    if (m < 1) throw InvalidInput("m must be at least 1");
    if (m > max_mub_count(d))
        throw InvalidInput("m exceeds the available unbiased bases for this dimension");
    std::vector<UnitaryOperator> bases;
    bases.emplace_back(MatC::identity(d));
    if (d == 2) {
        const double s = 1.0 / std::sqrt(2.0);
        MatC bx(2, 2), by(2, 2);
        bx(0, 0) = s;  bx(0, 1) = s;
        bx(1, 0) = s;  bx(1, 1) = -s;
        by(0, 0) = s;          by(0, 1) = s;
        by(1, 0) = cplx(0, s); by(1, 1) = cplx(0, -s);
        if (m >= 2) bases.emplace_back(std::move(bx));
        if (m >= 3) bases.emplace_back(std::move(by));
    } else if (d % 2 == 1 && is_prime(d)) {
        // Quadratic-phase construction for odd prime d: basis b, vector j has
        // k-th component omega^{b k^2 + j k} / sqrt(d). b = 0 is the Fourier basis.
        const double s = 1.0 / std::sqrt(static_cast<double>(d));
        for (int b = 0; b < m - 1; ++b) {
            MatC mat(d, d);
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    const long long e = (static_cast<long long>(b) * k * k +
                                         static_cast<long long>(j) * k) % d;
                    mat(k, j) = s * std::exp(cplx(0.0, 2.0 * std::numbers::pi * e / d));
                }
            bases.emplace_back(std::move(mat));
        }
    } else if (m == 2) {
        const double s = 1.0 / std::sqrt(static_cast<double>(d));
        MatC mat(d, d);
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                const long long e = (static_cast<long long>(j) * k) % d;
                mat(k, j) = s * std::exp(cplx(0.0, 2.0 * std::numbers::pi * e / d));
            }
        bases.emplace_back(std::move(mat));
    }
    // Construction check: every pair of distinct bases must be unbiased.
    for (std::size_t p = 0; p < bases.size(); ++p)
        for (std::size_t q = p + 1; q < bases.size(); ++q)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    cplx dot = 0.0;
                    for (int k = 0; k < d; ++k)
                        dot += std::conj(bases[p].mat()(k, i)) * bases[q].mat()(k, j);
                    if (std::abs(std::norm(dot) - 1.0 / d) > kUnbiasedTol)
                        throw InvalidInput("basis construction failed unbiasedness check");
                }
    return MubSet{d, m, std::move(bases)};
}

UnitaryOperator conjugate_basis(const UnitaryOperator& basis) {
    MatC m = basis.mat();
    for (cplx& z : m.a) z = std::conj(z);
    return UnitaryOperator(std::move(m));
}

UnitaryOperator mp_unitary(const UnitaryOperator& basis_a, const UnitaryOperator& basis_b) {
    const int d = basis_a.dim();
    if (basis_b.dim() != d) throw InvalidInput("basis dimension mismatch");
    MatC u = MatC::identity(d * d);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int ib = 0; ib < d; ++ib) {
                const cplx vi = basis_a.mat()(i, k) * basis_b.mat()(ib, k);
                for (int j = 0; j < d; ++j)
                    for (int jb = 0; jb < d; ++jb) {
                        const cplx vj = basis_a.mat()(j, k) * basis_b.mat()(jb, k);
                        u(i * d + ib, j * d + jb) -= 2.0 * vi * std::conj(vj);
                    }
            }
    return UnitaryOperator(std::move(u));
}

UnitaryOperator oracle_unitary(const DensityMatrix& psi) {
    require_pure(psi, "oracle unitary");
    // Reflect about the dominant eigenvector; exactly unitary even when the
    // input purity sits at the tolerance edge.
    const EighResult e = eigh(psi.mat());
    const int n = psi.dim();
    const MatC& v = e.eigenvectors.mat();
    MatC u = MatC::identity(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            u(i, j) -= 2.0 * v(i, n - 1) * std::conj(v(j, n - 1));
    return UnitaryOperator(std::move(u));
}

ProtocolReport linear_entropy_protocol(const DensityMatrix& psi, const BipartiteShape& shape,
                                       const RunOptions& opts) {
    if (psi.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    require_pure(psi, "linear-entropy protocol");
    const int d = shape.dB;
    const DensityMatrix rho_a = partial_trace(psi, shape, Subsystem::A);
    const DensityMatrix working(kron(rho_a.mat(), maximally_mixed(d)));
    const UnitaryOperator u = oracle_unitary(psi);
    const FringeOutcome f = scan(working, u, opts);

    ProtocolReport r;
    r.protocol = "linear_entropy";
    stamp_run(r, opts);
    r.visibility = {f.visibility};
    r.phase = {f.phase};
    r.estimate = 1.0 - 0.5 * d * (1.0 - f.visibility);
    r.verdict = r.estimate > kVerdictTol ? Verdict::entangled : Verdict::separable;
    r.oracle = 1.0 - oracle::purity(rho_a);
    note_phase_undefined(r, f);
    return r;
}

double linear_entropy_upper_bound(const DensityMatrix& rho, const BipartiteShape& shape,
                                  double visibility) {
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    if (!(visibility >= 0.0 && visibility <= 1.0 + 1e-9))
        throw InvalidInput("visibility out of range [0,1]");
    return std::clamp(1.0 - 0.5 * shape.dB * (1.0 - visibility), 0.0, 1.0);
}

ProtocolReport linear_entropy_bound_protocol(const DensityMatrix& rho,
                                             const BipartiteShape& shape,
                                             const RunOptions& opts) {
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    const int d = shape.dA;
    const DensityMatrix rho_a = partial_trace(rho, shape, Subsystem::A);
    // Canonical purification of rho_A on A (x) A': sum_n sqrt(q_n) |v_n>|n>.
    const EighResult e = eigh(rho_a.mat());
    std::vector<cplx> psi(static_cast<std::size_t>(d) * d, 0.0);
    double norm2 = 0.0;
    for (int n = 0; n < d; ++n) {
        const double q = std::max(0.0, e.eigenvalues[n]);
        for (int i = 0; i < d; ++i) {
            psi[static_cast<std::size_t>(i) * d + n] = std::sqrt(q) * e.eigenvectors.mat()(i, n);
        }
        norm2 += q;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    MatC proj(d * d, d * d);
    for (int i = 0; i < d * d; ++i)
        for (int j = 0; j < d * d; ++j)
            proj(i, j) = psi[i] * std::conj(psi[j]) * inv * inv;
    const DensityMatrix purification(std::move(proj));
    const DensityMatrix working(kron(rho_a.mat(), maximally_mixed(d)));
    const UnitaryOperator u = oracle_unitary(purification);
    const FringeOutcome f = scan(working, u, opts);

    ProtocolReport r;
    r.protocol = "linear_entropy";
    stamp_run(r, opts);
    r.visibility = {f.visibility};
    r.phase = {f.phase};
    r.estimate = linear_entropy_upper_bound(rho, BipartiteShape(d, d), f.visibility);
    r.verdict = r.estimate <= kVerdictTol ? Verdict::separable : Verdict::inconclusive;
    r.oracle = 1.0 - oracle::purity(rho_a);
    r.flags.push_back("convex_roof_upper_bound");
    note_phase_undefined(r, f);
    return r;
}

ProtocolReport negativity_protocol_pure(const DensityMatrix& psi, const BipartiteShape& shape,
                                        const RunOptions& opts, std::optional<double> theta) {
    if (psi.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    if (shape.dA != shape.dB)
        throw InvalidInput("negativity protocol requires equal local dimensions");
    require_pure(psi, "negativity protocol");
    const int d = shape.dA;
    require_vanishing_x_marginals(psi, d, "negativity protocol");

    const double th = theta.value_or(std::numbers::pi / d);
    const UnitaryOperator ua = negativity_unitary(d, th);
    const UnitaryOperator u(kron(ua.mat(), ua.mat()));
    const FringeOutcome f = scan(psi, u, opts);

    ProtocolReport r;
    r.protocol = "negativity";
    stamp_run(r, opts);
    r.visibility = {f.visibility};
    r.phase = {f.phase};
    if (theta.has_value()) {
        r.estimate = invert_negativity_trace(d, th, f.visibility, f.phase);
        r.flags.push_back("general_theta_inversion");
    } else {
        r.estimate = (d * d * f.visibility - (d - 2.0) * (d - 2.0)) / 8.0;
        const double expected = wrap_angle(-2.0 * std::numbers::pi / d);
        if (!f.phase_undefined && std::abs(wrap_angle(f.phase - expected)) > 1e-8)
            r.flags.push_back("phase_deviation");
    }
    clamp_estimate(r, 0.0, 0.5 * (d - 1.0));
    r.verdict = r.estimate > kVerdictTol ? Verdict::entangled : Verdict::separable;
    r.oracle = oracle::negativity_ppt(psi, shape);
    note_phase_undefined(r, f);
    return r;
}

ProtocolReport negativity_protocol_cna(const DensityMatrix& rho, int d, const RunOptions& opts,
                                       std::optional<double> theta) {
    const BipartiteShape shape(d, d);
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    require_vanishing_x_marginals(rho, d, "negativity protocol");

    const double th = theta.value_or(std::numbers::pi / d);
    const UnitaryOperator ua = negativity_unitary(d, th);
    const UnitaryOperator u(kron(ua.mat(), ua.mat()));
    const FringeOutcome f = scan(rho, u, opts);

    // Joint expectation t = tr((X (x) X) rho), then N = t/2 for this family.
    double t;
    ProtocolReport r;
    if (theta.has_value()) {
        const cplx z = std::exp(cplx(0.0, th * d));
        if (std::abs(z - cplx(1.0, 0.0)) < 1e-6)
            throw InvalidInput("theta is degenerate: exp(i theta d) too close to 1");
        const cplx w = f.visibility * std::exp(cplx(0.0, f.phase));
        t = ((static_cast<double>(d) * d * std::exp(cplx(0.0, 2.0 * th)) * w -
              (z + cplx(d - 1.0, 0.0)) * (z + cplx(d - 1.0, 0.0))) /
             ((z - 1.0) * (z - 1.0)))
                .real();
        r.flags.push_back("general_theta_inversion");
    } else {
        t = (d * d * f.visibility - (d - 2.0) * (d - 2.0)) / 4.0;
        const double expected = wrap_angle(-2.0 * std::numbers::pi / d);
        if (!f.phase_undefined && std::abs(wrap_angle(f.phase - expected)) > 1e-8)
            r.flags.push_back("phase_deviation");
    }
    r.protocol = "negativity";
    stamp_run(r, opts);
    r.visibility = {f.visibility};
    r.phase = {f.phase};
    r.estimate = 0.5 * t;
    clamp_estimate(r, 0.0, 0.5 * (d - 1.0));
    r.verdict = r.estimate > kVerdictTol ? Verdict::entangled : Verdict::separable;
    r.oracle = oracle::negativity_ppt(rho, shape);
    note_phase_undefined(r, f);
    return r;
}

MpRun mutual_predictability_run(const DensityMatrix& rho, int d, int m, Pairing pairing,
                                const RunOptions& opts) {
    const BipartiteShape shape(d, d);
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    const MubSet mubs = mub_set(d, m);

    ProtocolReport r;
    r.protocol = "mutual_predictability";
    r.multi_unitary = true;
    stamp_run(r, opts);

    MpDetails det;
    double oracle_sum = 0.0;
    for (int k = 0; k < m; ++k) {
        const UnitaryOperator& a = mubs.bases[k];
        const UnitaryOperator b =
            pairing == Pairing::conjugate ? conjugate_basis(a) : a;
        const UnitaryOperator u = mp_unitary(a, b);
        const FringeOutcome f = scan(rho, u, opts, static_cast<std::uint64_t>(k));
        r.visibility.push_back(f.visibility);
        r.phase.push_back(f.phase);
        // tr(U rho) = 1 - 2 C_k is real; the fitted phase picks the sign.
        double c;
        if (f.phase_undefined)
            c = 0.5;
        else
            c = std::abs(f.phase) > 0.5 * std::numbers::pi ? 0.5 * (1.0 + f.visibility)
                                                           : 0.5 * (1.0 - f.visibility);
        det.predictabilities.push_back(c);
        det.sum_c += c;
        det.signed_visibility_sum += c >= 0.5 ? f.visibility : -f.visibility;
        oracle_sum += oracle::mutual_predictability_direct(rho, a, b);
    }
    det.bound = 1.0 + (m - 1.0) / d;
    det.visibility_bound_upper = 2.0 * det.bound - m;
    det.visibility_bound_lower = m - 2.0 * det.bound;
    det.predictability_violated = det.sum_c > det.bound + kVerdictTol;
    // Same test expressed on sign-resolved visibilities:
    // sum_k s_k V_k = 2 sum_k C_k - m, so the thresholds match 2:1.
    det.visibility_violated =
        det.signed_visibility_sum > det.visibility_bound_upper + 2.0 * kVerdictTol;

    r.estimate = det.sum_c;
    r.verdict = det.predictability_violated ? Verdict::entangled : Verdict::inconclusive;
    r.oracle = oracle_sum;
    if (det.visibility_bound_lower < 0.0) r.flags.push_back("visibility_bound_lower_vacuous");
    if (det.visibility_bound_upper < 0.0) r.flags.push_back("visibility_bound_upper_vacuous");
    return MpRun{std::move(r), std::move(det)};
}

ProtocolReport mutual_predictability_protocol(const DensityMatrix& rho, int d, int m,
                                              Pairing pairing, const RunOptions& opts) {
    return mutual_predictability_run(rho, d, m, pairing, opts).report;
}

ProtocolReport witness_swap_protocol(const DensityMatrix& rho, int d, const RunOptions& opts) {
    const BipartiteShape shape(d, d);
    if (rho.dim() != shape.dim()) throw InvalidInput("shape does not match state dimension");
    const MatC f_op = swap_operator(d);
    const UnitaryOperator u(f_op);
    const FringeOutcome f = scan(rho, u, opts);

    ProtocolReport r;
    r.protocol = "witness";
    stamp_run(r, opts);
    r.visibility = {f.visibility};
    r.phase = {f.phase};
    r.estimate = f.visibility * std::cos(f.phase);
    if (r.estimate < -kVerdictTol) {
        r.verdict = Verdict::entangled;
    } else {
        r.verdict = Verdict::inconclusive;
        r.flags.push_back("witness_nonnegative");
    }
    r.oracle = oracle::witness_expectation(rho, f_op);
    r.flags.push_back("variant=swap");
    note_phase_undefined(r, f);
    return r;
}

ProtocolReport witness_small_theta_protocol(const DensityMatrix& rho, const MatC& w,
                                            double theta, const RunOptions& opts) {
    if (!(theta > 0.0 && theta <= 0.01))
        throw InvalidInput("theta out of range (0, 0.01]");
    if (w.rows != rho.dim()) throw InvalidInput("dimension mismatch between state and witness");
    const UnitaryOperator u = expm_hermitian(w, theta);
    const FringeOutcome f = scan(rho, u, opts);

    double wnorm = 0.0; // spectral norm of the (Hermitian) witness
    for (double ev : eigh(w).eigenvalues) wnorm = std::max(wnorm, std::abs(ev));
    const double error_bound = 0.5 * theta * wnorm * wnorm * wnorm * wnorm;
    const double tol = std::max(kVerdictTol, 2.0 * error_bound);

    ProtocolReport r;
    r.protocol = "witness";
    stamp_run(r, opts);
    r.visibility = {f.visibility};
    r.phase = {f.phase};
    r.estimate = f.phase / theta;
    r.verdict = r.estimate < -tol ? Verdict::entangled : Verdict::inconclusive;
    r.oracle = oracle::witness_expectation(rho, w);
    r.flags.push_back("variant=small_theta");
    r.flags.push_back("first_order_error_bound=" + format_double17(error_bound));
    note_phase_undefined(r, f);
    return r;
}

} // namespace em

#include "em/selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "em/interferometer.hpp"
#include "em/oracle.hpp"
#include "em/protocols.hpp"
#include "em/qmat.hpp"
#include "em/rng.hpp"
#include "em/serialize.hpp"
#include "em/states.hpp"

namespace em::selftest {

namespace {

constexpr double kPi = std::numbers::pi;

struct Ctx {
    bool pass = true;
    int failures = 0;
    std::ostringstream msg;

    void fail(const std::string& what) {
        pass = false;
        if (++failures <= 4) {
            if (failures > 1) msg << "; ";
            msg << what;
        }
    }
    void expect(bool ok, const std::string& what) {
        if (!ok) fail(what);
    }
    void expect_near(double a, double b, double tol, const std::string& what) {
        if (!(std::abs(a - b) <= tol))
            fail(what + ": |" + format_double17(a) + " - " + format_double17(b) + "| > " +
                 format_double17(tol));
    }
};

DensityMatrix random_density(int n, Rng& rng) {
    const MatC g = random_matrix(n, n, rng);
    MatC m = g * dagger(g);
    const double t = trace(m).real();
    return DensityMatrix(cplx(1.0 / t, 0.0) * m);
}

// --- qmat invariants ---------------------------------------------------------

void check_kron_algebra(Ctx& c) {
    Rng rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const MatC a = random_matrix(2, 2, rng);
        const MatC b = random_matrix(3, 3, rng);
        const MatC d = random_matrix(2, 2, rng);
        c.expect(max_abs_diff(kron(kron(a, b), d), kron(a, kron(b, d))) <= 1e-12,
                 "kron associativity");
        c.expect_near(std::abs(trace(kron(a, b)) - trace(a) * trace(b)), 0.0, 1e-12,
                      "kron trace multiplicativity");
        const MatC x = random_matrix(2, 3, rng);
        const MatC y = random_matrix(3, 2, rng);
        c.expect(max_abs_diff(kron(a, x) * kron(d, y), kron(a * d, x * y)) <= 1e-11,
                 "kron mixed-product rule");
    }
}

void check_partial_trace(Ctx& c) {
    Rng rng(102);
    for (int da = 2; da <= 3; ++da)
        for (int db = 2; db <= 3; ++db) {
            const DensityMatrix ra = random_density(da, rng);
            const DensityMatrix rb = random_density(db, rng);
            const DensityMatrix prod(kron(ra.mat(), rb.mat()));
            const BipartiteShape shape(da, db);
            c.expect(max_abs_diff(partial_trace(prod, shape, Subsystem::A).mat(), ra.mat()) <=
                         1e-12,
                     "partial trace recovers A factor");
            c.expect(max_abs_diff(partial_trace(prod, shape, Subsystem::B).mat(), rb.mat()) <=
                         1e-12,
                     "partial trace recovers B factor");
            const DensityMatrix joint = random_density(da * db, rng);
            c.expect_near(trace(partial_trace(joint, shape, Subsystem::A).mat()).real(), 1.0,
                          1e-12, "partial trace preserves trace");
        }
}

void check_partial_transpose(Ctx& c) {
    Rng rng(103);
    for (int d = 2; d <= 3; ++d) {
        const BipartiteShape shape(d, d);
        const DensityMatrix joint = random_density(d * d, rng);
        const MatC pt = partial_transpose(joint, shape, Subsystem::B);
        // independent index-swap undoes the transpose (pt itself is usually not PSD)
        MatC back(pt.rows, pt.cols);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int a2 = 0; a2 < d; ++a2)
                    for (int b2 = 0; b2 < d; ++b2)
                        back(a * d + b, a2 * d + b2) = pt(a * d + b2, a2 * d + b);
        c.expect(max_abs_diff(back, joint.mat()) <= 1e-12,
                 "partial transpose is an involution");
        c.expect_near(trace(pt).real(), 1.0, 1e-12, "partial transpose preserves trace");
        c.expect(hermiticity_defect(pt) <= 1e-12, "partial transpose preserves hermiticity");
        //

        const DensityMatrix ra = random_density(d, rng);
        const DensityMatrix rb = random_density(d, rng);
        const DensityMatrix prod(kron(ra.mat(), rb.mat()));
        const std::vector<double> w =
            eigh(partial_transpose(prod, shape, Subsystem::B)).eigenvalues;
        c.expect(w.front() >= -1e-12, "product state stays positive under partial transpose");
    }
}

void check_eigh(Ctx& c) {
    Rng rng(104);
    for (int n : {2, 3, 4, 6, 9, 16, 36}) {
        const MatC g = random_matrix(n, n, rng);
        const MatC h = 0.5 * (g + dagger(g));
        const EighResult e = eigh(h);
        const MatC& v = e.eigenvectors.mat();
        MatC rec(n, n);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    rec(i, j) += e.eigenvalues[k] * v(i, k) * std::conj(v(j, k));
        c.expect(max_abs_diff(rec, h) <= 1e-9, "eigen reconstruction at n=" + std::to_string(n));
        c.expect(unitarity_defect(v) <= 1e-10, "eigenvector unitarity");
        for (int k = 1; k < n; ++k)
            c.expect(e.eigenvalues[k - 1] <= e.eigenvalues[k], "eigenvalues ascending");
    }
}

void check_expm(Ctx& c) {
    Rng rng(105);
    for (int n : {2, 3, 6}) {
        const MatC g = random_matrix(n, n, rng);
        const MatC h = 0.5 * (g + dagger(g));
        const double t1 = rng.next_double() * 2.0 - 1.0;
        const double t2 = rng.next_double() * 2.0 - 1.0;
        c.expect(max_abs_diff(expm_hermitian(h, t1).mat() * expm_hermitian(h, t2).mat(),
                              expm_hermitian(h, t1 + t2).mat()) <= 1e-9,
                 "exponential additivity");
        c.expect(max_abs_diff(expm_hermitian(h, 0.0).mat(), MatC::identity(n)) <= 1e-12,
                 "exponential at theta=0 is identity");
    }
    // Frozen SWAP values: F^2 = I forces exp(i pi F) = -I, and at pi/2 the
    // exponential equals i F = i (I - 2 P_antisym), a global phase away from
    // the reflection about the antisymmetric subspace.
    const MatC f = swap_operator(2);
    c.expect(max_abs_diff(expm_hermitian(f, kPi).mat(), cplx(-1.0, 0.0) * MatC::identity(4)) <=
                 1e-12,
             "exp(i pi SWAP) = -I");
    c.expect(max_abs_diff(expm_hermitian(f, kPi / 2).mat(), cplx(0.0, 1.0) * f) <= 1e-12,
             "exp(i pi/2 SWAP) = i SWAP");
}

void check_trace_norm(Ctx& c) {
    Rng rng(106);
    for (int n : {2, 4, 6}) {
        const DensityMatrix rho = random_density(n, rng);
        c.expect_near(trace_norm(rho.mat()), 1.0, 1e-10, "trace norm of a state is 1");
        const MatC g = random_matrix(n, n, rng);
        const MatC h = 0.5 * (g + dagger(g));
        c.expect(trace_norm(h) >= std::abs(trace(h)) - 1e-10,
                 "trace norm dominates |trace|");
    }
    const DensityMatrix bell = make_max_entangled(2);
    c.expect_near(trace_norm(partial_transpose(bell, BipartiteShape(2, 2), Subsystem::B)), 2.0,
                  1e-10, "Bell partial transpose trace norm");
}

// --- states invariants -------------------------------------------------------

void check_state_factories(Ctx& c) {
    for (int d = 2; d <= 4; ++d) {
        const MatC f = swap_operator(d);
        for (double x : {0.0, 0.3, 0.7, 1.0}) {
            const DensityMatrix w = make_werner(d, x);
            c.expect_near(trace_product(f, w.mat()).real(), 2.0 * x - 1.0, 1e-12,
                          "werner swap expectation");
            c.expect(max_abs_diff(f * w.mat() * f, w.mat()) <= 1e-12,
                     "werner swap invariance");
            const DensityMatrix iso = make_isotropic(d, x);
            const DensityMatrix phi = make_max_entangled(d);
            c.expect_near(trace_product(phi.mat(), iso.mat()).real(),
                          x + (1.0 - x) / (d * d), 1e-12, "isotropic fidelity with phi+");
            make_cna(d, x); // construction itself validates
        }
    }
    const PreparedState prod = make_pure_schmidt(SchmidtSpec{{1.0, 0.0}});
    c.expect_near(oracle::purity(prod.rho), 1.0, 1e-12, "pure schmidt purity");
}

void check_isotropic_twirl(Ctx& c) {
    Rng rng(107);
    for (int d = 2; d <= 3; ++d) {
        const DensityMatrix iso = make_isotropic(d, 0.6);
        for (int trial = 0; trial < 5; ++trial) {
            const MatC u = random_unitary_mat(d, rng);
            MatC uc = u;
            for (cplx& z : uc.a) z = std::conj(z);
            const MatC g = kron(u, uc);
            c.expect(max_abs_diff(g * iso.mat() * dagger(g), iso.mat()) <= 1e-9,
                     "isotropic state is U (x) U* invariant");
        }
    }
}

void check_cna_marginals(Ctx& c) {
    const MatC x2 = x_operator(2).mat;
    for (double x : {0.0, 0.5, 1.0}) {
        const DensityMatrix rho = make_cna(2, x);
        const BipartiteShape shape(2, 2);
        c.expect(max_abs_diff(partial_trace(rho, shape, Subsystem::A).mat(),
                              maximally_mixed(2)) <= 1e-12,
                 "qubit cna marginal is maximally mixed");
        c.expect(std::abs(trace_product(kron(x2, MatC::identity(2)), rho.mat())) <= 1e-10,
                 "cna X marginal vanishes");
    }
}

void check_random_pure(Ctx& c) {
    for (int d = 2; d <= 3; ++d) {
        const DensityMatrix a = random_pure(d, 2024);
        const DensityMatrix b = random_pure(d, 2024);
        c.expect(max_abs_diff(a.mat(), b.mat()) == 0.0, "random_pure is seed-deterministic");
        c.expect_near(oracle::purity(a), 1.0, 1e-12, "random_pure purity");
    }
}

// --- interferometer invariants -------------------------------------------------

void check_fit_matches_trace(Ctx& c) {
    Rng rng(108);
    for (int n : {2, 3, 4}) {
        const DensityMatrix rho = random_density(n, rng);
        const UnitaryOperator u(random_unitary_mat(n, rng));
        const cplx t = trace_product(u.mat(), rho.mat());
        const InterferencePattern p = run_exact(rho, u, default_phase_grid(16));
        const FringeFit fit = fit_fringe(p);
        c.expect_near(fit.visibility, std::abs(t), 1e-10, "fitted visibility = |tr(U rho)|");
        if (std::abs(t) > 1e-9)
            c.expect(std::abs(wrap_angle(fit.phase - std::arg(t))) <= 1e-10,
                     "fitted phase = arg tr(U rho)");
        c.expect(fit.residual <= 1e-12, "exact pattern fit residual");
        c.expect_near(fit.mean_level, 0.5, 1e-10, "exact pattern mean level");
    }
}

void check_fit_rescale_invariance(Ctx& c) {
    const DensityMatrix rho = make_max_entangled(2);
    const UnitaryOperator u(swap_operator(2));
    InterferencePattern p = run_exact(rho, u, default_phase_grid(12));
    const FringeFit base = fit_fringe(p);
    for (double& y : p.intensities) y *= 0.37;
    const FringeFit scaled = fit_fringe(p);
    c.expect_near(scaled.visibility, base.visibility, 1e-12,
                  "visibility invariant under uniform rescaling");
    c.expect_near(scaled.mean_level, 0.37 * base.mean_level, 1e-12, "mean level scales");
    c.expect_near(scaled.phase, base.phase, 1e-12, "phase invariant under rescaling");
}

void check_global_phase_and_grid_shift(Ctx& c) {
    Rng rng(109);
    const DensityMatrix rho = random_density(3, rng);
    const MatC u = random_unitary_mat(3, rng);
    const double gamma = 0.87;
    const UnitaryOperator u0(u);
    const UnitaryOperator u1(std::exp(cplx(0.0, gamma)) * u);
    const FringeFit f0 = fit_fringe(run_exact(rho, u0, default_phase_grid(16)));
    const FringeFit f1 = fit_fringe(run_exact(rho, u1, default_phase_grid(16)));
    c.expect_near(f1.visibility, f0.visibility, 1e-10, "global phase leaves visibility");
    c.expect(std::abs(wrap_angle(f1.phase - f0.phase - gamma)) <= 1e-10,
             "global phase shifts fitted phase");

    // Relabeling the grid by delta shifts the fitted phase by delta.
    const double delta = 0.41;
    InterferencePattern p = run_exact(rho, u0, default_phase_grid(16));
    for (double& phi : p.phases) phi += delta;
    const FringeFit shifted = fit_fringe(p);
    c.expect(std::abs(wrap_angle(shifted.phase - f0.phase - delta)) <= 1e-10,
             "grid shift moves fitted phase");
    c.expect_near(shifted.visibility, f0.visibility, 1e-10, "grid shift keeps visibility");
}

void check_flat_pattern(Ctx& c) {
    // U with tr(U rho) = 0 gives a flat fringe: visibility 0, phase 0 by
    // convention.
    MatC z(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    const DensityMatrix rho(maximally_mixed(2));
    const FringeFit fit = fit_fringe(run_exact(rho, UnitaryOperator(z), default_phase_grid(8)));
    c.expect(fit.phase_undefined, "flat pattern flags undefined phase");
    c.expect_near(fit.visibility, 0.0, 1e-12, "flat pattern visibility 0");
    c.expect_near(fit.phase, 0.0, 0.0, "flat pattern phase reported as 0");
}

void check_sampled_determinism(Ctx& c) {
    const DensityMatrix rho = make_max_entangled(2);
    const UnitaryOperator u(swap_operator(2));
    const std::vector<double> grid = default_phase_grid(16);
    const InterferencePattern a = run_sampled(rho, u, grid, 1000, 7);
    const InterferencePattern b = run_sampled(rho, u, grid, 1000, 7);
    c.expect(a.counts == b.counts, "same seed reproduces identical counts");
    c.expect(pattern_to_csv(a) == pattern_to_csv(b), "same seed reproduces identical CSV");
    const InterferencePattern d = run_sampled(rho, u, grid, 1000, 8);
    c.expect(a.counts != d.counts, "different seed changes counts");
    for (std::size_t i = 0; i < a.counts.size(); ++i)
        c.expect(a.counts[i] >= 0 && a.counts[i] <= 1000, "counts within [0, shots]");
}

void check_sampled_convergence(Ctx& c) {
    // shots -> infinity limit at a fixed large budget: each point within
    // 3 binomial standard errors of the exact intensity.
    const DensityMatrix rho = make_max_entangled(2);
    const UnitaryOperator u(swap_operator(2));
    const std::vector<double> grid = default_phase_grid(8);
    const long long shots = 1000000;
    const InterferencePattern p = run_sampled(rho, u, grid, shots, 4242);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double truth = intensity(rho, u, grid[i]);
        const double sigma = std::sqrt(std::max(truth * (1.0 - truth), 1e-12) /
                                       static_cast<double>(shots));
        c.expect(std::abs(p.intensities[i] - truth) <= 3.0 * sigma + 1e-9,
                 "sampled intensity within 3 sigma at point " + std::to_string(i));
    }
}

// --- protocol invariants -------------------------------------------------------

void check_lucas_recursion(Ctx& c) {
    for (int d = 2; d <= 6; ++d) {
        for (int n = 2; n <= 8; ++n) {
            const LucasCoefficients f = lucas_coefficients(d, n);
            const LucasCoefficients f1 = lucas_coefficients(d, n - 1);
            const double f2 = n >= 3 ? lucas_coefficients(d, n - 2).f_n : 0.0; // f_0 = 0
            c.expect_near(f.f_n, (d - 2.0) * f1.f_n + (d - 1.0) * f2, 0.0,
                          "lucas recursion f_n");
            c.expect_near(f.g_n, (d - 1.0) * f1.f_n, 0.0, "g_n = (d-1) f_{n-1}");
        }
        c.expect_near(lucas_coefficients(d, 1).f_n, 1.0, 0.0, "f_1 = 1");
        c.expect_near(lucas_coefficients(d, 1).g_n, 0.0, 0.0, "g_1 = 0");
    }
}

void check_schmidt_x_marginals(Ctx& c) {
    Rng rng(110);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 3;
        const PreparedState st = make_pure_schmidt(random_schmidt(d, rng));
        const MatC x = x_operator(d).mat;
        c.expect(std::abs(trace_product(kron(x, MatC::identity(d)), st.rho.mat())) <= 1e-10,
                 "A-side X marginal vanishes in the Schmidt basis");
        c.expect(std::abs(trace_product(kron(MatC::identity(d), x), st.rho.mat())) <= 1e-10,
                 "B-side X marginal vanishes in the Schmidt basis");
    }
}

void check_joint_x_expectation(Ctx& c) {
    Rng rng(111);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 2 + trial % 4;
        const SchmidtSpec s = random_schmidt(d, rng);
        const PreparedState st = make_pure_schmidt(s);
        const MatC x = x_operator(d).mat;
        const double joint = trace_product(kron(x, x), st.rho.mat()).real();
        c.expect_near(joint, 2.0 * oracle::schmidt_negativity(s), 1e-9,
                      "tr((X (x) X) rho) = 2N for Schmidt states");
    }
}

void check_negativity_trace_formula(Ctx& c) {
    Rng rng(112);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 4;
        double theta = (rng.next_double() * 2.0 - 1.0) * kPi;
        if (std::abs(std::exp(cplx(0.0, theta * d)) - cplx(1.0, 0.0)) < 1e-2) theta += 0.5;
        const SchmidtSpec s = random_schmidt(d, rng);
        const PreparedState st = make_pure_schmidt(s);
        const UnitaryOperator ua = negativity_unitary(d, theta);
        const cplx direct = trace_product(kron(ua.mat(), ua.mat()), st.rho.mat());
        const cplx z = std::exp(cplx(0.0, theta * d));
        const cplx formula = std::exp(cplx(0.0, -2.0 * theta)) / cplx(d * d, 0.0) *
                             (2.0 * (z - 1.0) * (z - 1.0) * oracle::schmidt_negativity(s) +
                              (z + cplx(d - 1.0, 0.0)) * (z + cplx(d - 1.0, 0.0)));
        c.expect(std::abs(direct - formula) <= 1e-10,
                 "closed-form interference trace for Schmidt states");
    }
}

void check_mub_sets(Ctx& c) {
    for (int d : {2, 3, 5, 4, 6}) {
        const int m = max_mub_count(d);
        const MubSet set = mub_set(d, m);
        c.expect(static_cast<int>(set.bases.size()) == m, "basis count");
        for (int p = 0; p < m; ++p)
            for (int q = p + 1; q < m; ++q)
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        cplx dot = 0.0;
                        for (int k = 0; k < d; ++k)
                            dot += std::conj(set.bases[p].mat()(k, i)) *
                                   set.bases[q].mat()(k, j);
                        c.expect(std::abs(std::norm(dot) - 1.0 / d) <= 1e-9,
                                 "pairwise unbiasedness d=" + std::to_string(d));
                    }
    }
    bool threw = false;
    try {
        mub_set(4, 3);
    } catch (const InvalidInput&) {
        threw = true;
    }
    c.expect(threw, "m beyond the constructible family is rejected");
}

void check_mp_sign_resolution(Ctx& c) {
    struct Case {
        DensityMatrix rho;
        int d;
    };
    const std::vector<Case> cases = {
        {make_max_entangled(2), 2},
        {make_isotropic(3, 0.5), 3},
        {make_werner(2, 0.3), 2},
        {make_pure_schmidt(SchmidtSpec{{1.0, 0.0, 0.0}}).rho, 3},
    };
    for (const Case& cs : cases) {
        const int m = max_mub_count(cs.d);
        const MpRun run = mutual_predictability_run(cs.rho, cs.d, m, Pairing::conjugate);
        const MubSet set = mub_set(cs.d, m);
        for (int k = 0; k < m; ++k) {
            const UnitaryOperator b = conjugate_basis(set.bases[k]);
            const double direct = oracle::mutual_predictability_direct(cs.rho, set.bases[k], b);
            c.expect_near(run.details.predictabilities[k], direct, 1e-9,
                          "sign-resolved C matches direct computation");
        }
        c.expect_near(run.report.estimate, *run.report.oracle, 1e-9,
                      "summed C matches direct oracle");
    }
}

void check_d2_linear_entropy_identity(Ctx& c) {
    Rng rng(113);
    for (int trial = 0; trial < 10; ++trial) {
        const DensityMatrix psi =
            trial % 2 == 0 ? make_pure_schmidt(random_schmidt(2, rng)).rho
                           : random_pure(2, 5000 + trial);
        const ProtocolReport r = linear_entropy_protocol(psi, BipartiteShape(2, 2));
        c.expect_near(r.estimate, r.visibility.at(0), 1e-12,
                      "two-qubit estimate equals fitted visibility");
    }
}

void check_witness_signs(Ctx& c) {
    const MatC f = swap_operator(2);
    const ProtocolReport singlet = witness_swap_protocol(make_werner(2, 0.0), 2);
    c.expect(singlet.verdict == Verdict::entangled, "singlet detected by SWAP witness");
    c.expect_near(singlet.estimate, -1.0, 1e-10, "singlet SWAP expectation");
    const ProtocolReport sym = witness_swap_protocol(make_werner(2, 1.0), 2);
    c.expect(sym.verdict == Verdict::inconclusive, "symmetric Werner not flagged");
    c.expect_near(sym.estimate, 1.0, 1e-10, "symmetric Werner SWAP expectation");
    const ProtocolReport phi = witness_swap_protocol(make_max_entangled(2), 2);
    c.expect(phi.verdict == Verdict::inconclusive,
             "phi+ sits on the positive side of the SWAP witness");
    c.expect_near(phi.estimate, oracle::witness_expectation(make_max_entangled(2), f), 1e-10,
                  "phi+ SWAP expectation matches oracle");
}

void check_serialization_roundtrip(Ctx& c) {
    const DensityMatrix bell = make_max_entangled(2);
    RunOptions opts;
    opts.mode = RunMode::sampled;
    opts.shots = 2000;
    opts.seed = 99;
    ProtocolReport r = linear_entropy_protocol(bell, BipartiteShape(2, 2), opts);
    StateSpec spec;
    spec.kind = StateKind::max_entangled;
    spec.d = 2;
    r.state = spec;
    const std::string text = report_to_json(r);
    const std::string text2 = report_to_json(r);
    c.expect(text == text2, "report serialization is deterministic");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (...) {
        c.fail("report JSON does not parse");
        return;
    }
    c.expect(j["protocol"] == "linear_entropy", "protocol field");
    c.expect(j["mode"] == "sampled", "mode field");
    c.expect(j["shots"].get<long long>() == 2000, "shots field");
    c.expect(j["seed"].get<std::uint64_t>() == 99, "seed field");
    c.expect(j["visibility"].get<double>() == r.visibility.at(0),
             "visibility round-trips bit-exactly");
    c.expect(j["estimate"].get<double>() == r.estimate, "estimate round-trips bit-exactly");
    c.expect(j["state"]["kind"] == "max_entangled", "state echo");
    c.expect(j.contains("oracle") && j.contains("discrepancy") && j.contains("flags"),
             "schema fields present");
}

// --- acceptance criteria -------------------------------------------------------

void acceptance_linear_entropy_random_schmidt(Ctx& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    for (int i = 0; i < 100; ++i) {
        const int d = 2 + i % 4;
        const SchmidtSpec s = random_schmidt(d, rng);
        const PreparedState st = make_pure_schmidt(s);
        const ProtocolReport r = linear_entropy_protocol(st.rho, st.shape);
        double purity = 0.0;
        for (double l : s.lambdas) purity += l * l;
        c.expect_near(r.estimate, 1.0 - purity, 1e-9, "estimate vs 1 - sum(lambda^2)");
        c.expect_near(r.estimate, *r.oracle, 1e-9, "estimate vs reduced-purity oracle");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 5.0, "100 exact runs complete in under 5 s");
}

void acceptance_two_qubit_visibility_equals_entropy(Ctx& c) {
    for (int i = 0; i < 100; ++i) {
        const DensityMatrix psi = random_pure(2, 3000 + i);
        const ProtocolReport r = linear_entropy_protocol(psi, BipartiteShape(2, 2));
        c.expect_near(r.visibility.at(0), *r.oracle, 1e-9,
                      "fitted visibility equals the linear entropy for two qubits");
    }
}

void acceptance_negativity_random_schmidt(Ctx& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1003);
    for (int i = 0; i < 100; ++i) {
        const int d = 2 + i % 4;
        const SchmidtSpec s = random_schmidt(d, rng);
        const PreparedState st = make_pure_schmidt(s);
        const ProtocolReport r = negativity_protocol_pure(st.rho, st.shape);
        c.expect_near(r.estimate, oracle::negativity_ppt(st.rho, st.shape), 1e-9,
                      "estimate vs partial-transpose oracle");
        const double expected_phase = wrap_angle(-2.0 * kPi / d);
        c.expect(std::abs(wrap_angle(r.phase.at(0) - expected_phase)) <= 1e-8,
                 "fitted phase is -2 pi / d");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 10.0, "100 exact runs complete in under 10 s");
}

void acceptance_lucas_and_closed_form(Ctx& c) {
    for (int d = 2; d <= 6; ++d) {
        const MatC x = x_operator(d).mat;
        MatC power = MatC::identity(d);
        for (int n = 1; n <= 8; ++n) {
            power = power * x;
            const LucasCoefficients lc = lucas_coefficients(d, n);
            const MatC expected = cplx(lc.f_n, 0.0) * x + cplx(lc.g_n, 0.0) * MatC::identity(d);
            c.expect(max_abs_diff(power, expected) <= 1e-9,
                     "X^n = f_n X + g_n I at d=" + std::to_string(d) +
                         ", n=" + std::to_string(n));
        }
    }
    Rng rng(1004);
    for (int i = 0; i < 50; ++i) {
        const int d = 2 + i % 5;
        const double theta = (rng.next_double() * 2.0 - 1.0) * kPi;
        const MatC x = x_operator(d).mat;
        c.expect(max_abs_diff(negativity_unitary(d, theta).mat(),
                              expm_hermitian(x, theta).mat()) <= 1e-10,
                 "closed form matches eigendecomposition exponential");
    }
}

void acceptance_cna_family(Ctx& c) {
    for (int d = 2; d <= 4; ++d)
        for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const DensityMatrix rho = make_cna(d, x);
            const ProtocolReport r = negativity_protocol_cna(rho, d);
            c.expect_near(r.estimate, x * (d - 1.0) / 2.0, 1e-9,
                          "family negativity x (d-1) / 2");
            c.expect_near(r.estimate, *r.oracle, 1e-9, "estimate vs partial-transpose oracle");
        }
}

void acceptance_isotropic_mp(Ctx& c) {
    for (double x : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        const DensityMatrix rho = make_isotropic(3, x);
        const MpRun run = mutual_predictability_run(rho, 3, 4, Pairing::conjugate);
        const double expected_c = x + (1.0 - x) / 3.0;
        for (double cv : run.details.predictabilities)
            c.expect_near(cv, expected_c, 1e-9, "per-basis C is x + (1-x)/3");
        const bool should_flag = x > 0.25;
        c.expect((run.report.verdict == Verdict::entangled) == should_flag,
                 "verdict flips exactly at x = 1/4");
    }
}

void acceptance_mp_formulations_agree(Ctx& c) {
    struct Case {
        DensityMatrix rho;
        int d;
        int m;
    };
    std::vector<Case> cases;
    for (double x : {0.1, 0.25, 0.4, 0.7, 0.9})
        for (int m = 2; m <= 4; ++m) cases.push_back({make_isotropic(3, x), 3, m});
    cases.push_back({make_max_entangled(2), 2, 3});
    cases.push_back({make_pure_schmidt(SchmidtSpec{{1.0, 0.0, 0.0}}).rho, 3, 4});
    cases.push_back({make_werner(2, 0.2), 2, 3});
    for (const Case& cs : cases) {
        const MpRun run = mutual_predictability_run(cs.rho, cs.d, cs.m, Pairing::conjugate);
        c.expect(run.details.predictability_violated == run.details.visibility_violated,
                 "predictability-sum and visibility-sum tests agree");
    }
}

void acceptance_werner_swap(Ctx& c) {
    for (int d = 2; d <= 3; ++d)
        for (double x : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
            const DensityMatrix rho = make_werner(d, x);
            const ProtocolReport r = witness_swap_protocol(rho, d);
            c.expect_near(r.estimate, 2.0 * x - 1.0, 1e-9, "witness estimate is 2x - 1");
            if (x < 0.5 - 1e-12)
                c.expect(std::abs(wrap_angle(r.phase.at(0) - kPi)) <= 1e-8,
                         "negative side fits phase pi");
            else if (x > 0.5 + 1e-12)
                c.expect(std::abs(r.phase.at(0)) <= 1e-8, "positive side fits phase 0");
            c.expect((r.verdict == Verdict::entangled) == (2.0 * x - 1.0 < -1e-9),
                     "verdict matches the sign of tr(F rho)");
        }
}

void acceptance_small_theta_witness(Ctx& c) {
    const MatC f = swap_operator(2);
    const ProtocolReport singlet =
        witness_small_theta_protocol(make_werner(2, 0.0), f, 1e-3);
    c.expect_near(singlet.estimate, -1.0, 1e-3, "singlet small-rotation estimate");
    c.expect(singlet.verdict == Verdict::entangled, "singlet flagged entangled");
    const ProtocolReport phi = witness_small_theta_protocol(make_max_entangled(2), f, 1e-3);
    c.expect_near(phi.estimate, 1.0, 1e-3, "phi+ small-rotation estimate");
    c.expect(phi.verdict == Verdict::inconclusive, "phi+ not flagged");
}

void acceptance_shot_noise_calibration(Ctx& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const DensityMatrix bell = make_max_entangled(2);
    const BipartiteShape shape(2, 2);
    const std::vector<double> grid = default_phase_grid(16);
    // True fringe for the Bell linear-entropy scan: c0 = 1/2, V = 1/2, alpha = 0.
    const double sigma = propagated_visibility_sigma(0.5, 0.5, 0.0, grid, 100000);
    int within = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        RunOptions opts;
        opts.mode = RunMode::sampled;
        opts.shots = 100000;
        opts.phases = 16;
        opts.seed = 1 + static_cast<std::uint64_t>(i);
        const ProtocolReport r = linear_entropy_protocol(bell, shape, opts);
        if (std::abs(r.estimate - 0.5) <= 4.0 * sigma) ++within;
    }
    c.expect(within >= 198, "at least 99% of estimates within 4 propagated sigma (got " +
                                std::to_string(within) + "/200)");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 60.0, "200 sampled runs complete in under 60 s");
}

void acceptance_mixed_bound_chain(Ctx& c) {
    Rng rng(1011);
    for (int i = 0; i < 50; ++i) {
        const int d = 2 + i % 2;
        const int members = 2 + static_cast<int>(rng.next_u64() % 3);
        StateSpec spec;
        spec.kind = StateKind::ensemble;
        double wsum = 0.0;
        for (int k = 0; k < members; ++k) {
            spec.members.push_back(random_schmidt(d, rng));
            const double w = rng.next_open_double();
            spec.weights.push_back(w);
            wsum += w;
        }
        for (double& w : spec.weights) w /= wsum;
        spec.weights[0] += 1.0 - [&] {
            double s = 0.0;
            for (double w : spec.weights) s += w;
            return s;
        }();
        const PreparedState st = prepare_state(spec);
        // Concavity chain: the mixture's reduced linear entropy dominates the
        // ensemble average of the members'.
        const DensityMatrix rho_a = partial_trace(st.rho, st.shape, Subsystem::A);
        const double mix_entropy = 1.0 - oracle::purity(rho_a);
        double avg = 0.0;
        for (std::size_t k = 0; k < st.ensemble->members.size(); ++k) {
            const DensityMatrix ma =
                partial_trace(st.ensemble->members[k], st.shape, Subsystem::A);
            avg += st.ensemble->weights[k] * (1.0 - oracle::purity(ma));
        }
        c.expect(mix_entropy >= avg - 1e-10, "ensemble-average bound chain");
        // The interferometric bound reproduces the mixture value.
        const ProtocolReport r = linear_entropy_bound_protocol(st.rho, st.shape);
        c.expect_near(r.estimate, std::clamp(mix_entropy, 0.0, 1.0), 1e-9,
                      "measured bound equals mixture linear entropy");
    }
    // For pure states the bound collapses to the estimate itself.
    Rng rng2(1012);
    for (int i = 0; i < 20; ++i) {
        const int d = 2 + i % 3;
        const PreparedState st = make_pure_schmidt(random_schmidt(d, rng2));
        const ProtocolReport r = linear_entropy_protocol(st.rho, st.shape);
        const double bound = linear_entropy_upper_bound(st.rho, st.shape, r.visibility.at(0));
        c.expect_near(bound, std::clamp(r.estimate, 0.0, 1.0), 1e-12,
                      "pure-state bound equals the estimate");
    }
}

struct Check {
    std::string name;
    int criterion;
    std::function<void(Ctx&)> fn;
};

const std::vector<Check>& registry() {
    static const std::vector<Check> checks = {
        {"qmat.kron_algebra", 0, check_kron_algebra},
        {"qmat.partial_trace", 0, check_partial_trace},
        {"qmat.partial_transpose", 0, check_partial_transpose},
        {"qmat.eigh", 0, check_eigh},
        {"qmat.expm", 0, check_expm},
        {"qmat.trace_norm", 0, check_trace_norm},
        {"states.factories", 0, check_state_factories},
        {"states.isotropic_twirl", 0, check_isotropic_twirl},
        {"states.cna_marginals", 0, check_cna_marginals},
        {"states.random_pure", 0, check_random_pure},
        {"interferometer.fit_matches_trace", 0, check_fit_matches_trace},
        {"interferometer.rescale_invariance", 0, check_fit_rescale_invariance},
        {"interferometer.phase_shifts", 0, check_global_phase_and_grid_shift},
        {"interferometer.flat_pattern", 0, check_flat_pattern},
        {"interferometer.sampled_determinism", 0, check_sampled_determinism},
        {"interferometer.sampled_convergence", 0, check_sampled_convergence},
        {"protocols.lucas_recursion", 0, check_lucas_recursion},
        {"protocols.schmidt_x_marginals", 0, check_schmidt_x_marginals},
        {"protocols.joint_x_expectation", 0, check_joint_x_expectation},
        {"protocols.negativity_trace_formula", 0, check_negativity_trace_formula},
        {"protocols.mub_sets", 0, check_mub_sets},
        {"protocols.mp_sign_resolution", 0, check_mp_sign_resolution},
        {"protocols.d2_linear_entropy_identity", 0, check_d2_linear_entropy_identity},
        {"protocols.witness_signs", 0, check_witness_signs},
        {"serialize.report_roundtrip", 0, check_serialization_roundtrip},
        {"acceptance.linear_entropy_random_schmidt", 1, acceptance_linear_entropy_random_schmidt},
        {"acceptance.two_qubit_visibility_equals_entropy", 2,
         acceptance_two_qubit_visibility_equals_entropy},
        {"acceptance.negativity_random_schmidt", 3, acceptance_negativity_random_schmidt},
        {"acceptance.lucas_and_closed_form", 4, acceptance_lucas_and_closed_form},
        {"acceptance.cna_family", 5, acceptance_cna_family},
        {"acceptance.isotropic_mutual_predictability", 6, acceptance_isotropic_mp},
        {"acceptance.mp_formulations_agree", 7, acceptance_mp_formulations_agree},
        {"acceptance.werner_swap_witness", 8, acceptance_werner_swap},
        {"acceptance.small_theta_witness", 9, acceptance_small_theta_witness},
        {"acceptance.shot_noise_calibration", 10, acceptance_shot_noise_calibration},
        {"acceptance.mixed_bound_chain", 11, acceptance_mixed_bound_chain},
    };
    return checks;
}

} // namespace

std::vector<CheckResult> run_all() {
    std::vector<CheckResult> results;
    for (const Check& check : registry()) {
        Ctx ctx;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            check.fn(ctx);
        } catch (const std::exception& e) {
            ctx.fail(std::string("exception: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results.push_back(CheckResult{check.name, ctx.pass, ctx.msg.str(), secs, check.criterion});
    }
    return results;
}

double propagated_visibility_sigma(double c0, double v, double alpha,
                                   const std::vector<double>& grid, long long shots) {
    // Unweighted least squares c = (M^-1) Phi^T y with M = Phi^T Phi gives
    // Cov(c) = M^-1 Phi^T D Phi M^-1, D = diag(p_i (1 - p_i) / shots).
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double mid[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (double phi : grid) {
        const double f[3] = {1.0, std::cos(phi), std::sin(phi)};
        const double p = c0 * (1.0 + v * std::cos(phi - alpha));
        const double var = p * (1.0 - p) / static_cast<double>(shots);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                m[i][j] += f[i] * f[j];
                mid[i][j] += var * f[i] * f[j];
            }
    }
    // Invert the symmetric 3x3 normal matrix via the adjugate.
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    double inv[3][3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) cov[i][j] += inv[i][k] * mid[k][l] * inv[l][j];
    // Gradient of V = sqrt(c1^2 + c2^2) / c0 at the true coefficients.
    const double c1 = c0 * v * std::cos(alpha);
    const double c2 = c0 * v * std::sin(alpha);
    const double r = std::max(std::hypot(c1, c2), 1e-300);
    const double g[3] = {-r / (c0 * c0), c1 / (c0 * r), c2 / (c0 * r)};
    double var_v = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) var_v += g[i] * cov[i][j] * g[j];
    return std::sqrt(std::max(var_v, 0.0));
}

} // namespace em::selftest

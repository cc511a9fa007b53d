#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "em/interferometer.hpp"
#include "em/qmat.hpp"
#include "em/states.hpp"

using em::cplx;
using em::MatC;

namespace {

constexpr double pi = std::numbers::pi;
const cplx I1(0.0, 1.0);

// The full circuit built naively from public pieces: Hadamard on the ancilla,
// controlled phase / controlled-U, Hadamard again. evolve() must agree with
// conjugation by this dense matrix.
MatC dense_step(const MatC& u, double phi) {
    const int n = u.rows;
    const double s = 1.0 / std::sqrt(2.0);
    const MatC h(2, 2, {s, s, s, -s});
    MatC ctrl(2 * n, 2 * n);
    const cplx arm0 = std::exp(I1 * phi);
    for (int i = 0; i < n; ++i) ctrl(i, i) = arm0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ctrl(n + i, n + j) = u(i, j);
    const MatC hi = em::kron(h, MatC::identity(n));
    return hi * ctrl * hi;
}

} // namespace

TEST_CASE("evolve matches the dense circuit and intensity reads the bright port") {
    const em::DensityMatrix rho = em::random_pure(2, 91); // 4-dim bipartite state
    const em::UnitaryOperator u(em::swap_operator(2));
    for (double phi : {0.0, 0.7, 2.0, 5.5}) {
        const em::DensityMatrix out = em::evolve(rho, u, phi);
        const MatC s = dense_step(u.mat(), phi);
        const MatC in = em::kron(MatC(2, 2, {1, 0, 0, 0}), rho.mat());
        const MatC expect = s * in * em::dagger(s);
        CHECK(em::max_abs_diff(out.mat(), expect) < 1e-12);

        double bright = 0.0;
        for (int i = 0; i < 4; ++i) bright += out.mat()(i, i).real();
        CHECK(em::intensity(rho, u, phi) == doctest::Approx(bright).epsilon(1e-12));
    }
}

TEST_CASE("identity unitary gives the full-visibility fringe (1 + cos phi)/2") {
    const em::DensityMatrix rho = em::random_pure(3, 17);
    const em::UnitaryOperator id(MatC::identity(9));
    for (double phi : {0.0, 0.3, pi / 2, pi, 4.0})
        CHECK(em::intensity(rho, id, phi) ==
              doctest::Approx(0.5 * (1.0 + std::cos(phi))).epsilon(1e-12));
}

TEST_CASE("fringe fit recovers a synthetic pattern exactly") {
    em::InterferencePattern p;
    p.phases = em::default_phase_grid(16);
    const double alpha = -2.0 * pi / 3.0;
    for (double phi : p.phases)
        p.intensities.push_back(0.5 * (1.0 + 0.5 * std::cos(phi - alpha)));
    const em::FringeFit f = em::fit_fringe(p);
    CHECK(f.mean_level == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.visibility == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.phase == doctest::Approx(alpha).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
    CHECK_FALSE(f.phase_undefined);

    // uniform rescaling must not move visibility or phase
    em::InterferencePattern scaled = p;
    for (double& v : scaled.intensities) v *= 0.37;
    const em::FringeFit g = em::fit_fringe(scaled);
    CHECK(g.visibility == doctest::Approx(f.visibility).epsilon(1e-12));
    CHECK(g.phase == doctest::Approx(f.phase).epsilon(1e-12));
}

TEST_CASE("flat pattern yields zero visibility with the phase flagged undefined") {
    const em::DensityMatrix mixed(cplx(0.5) * MatC::identity(2));
    const em::UnitaryOperator z(MatC(2, 2, {1, 0, 0, -1}));
    const em::InterferencePattern p = em::run_exact(mixed, z, em::default_phase_grid(16));
    const em::FringeFit f = em::fit_fringe(p);
    CHECK(f.visibility == doctest::Approx(0.0));
    CHECK(f.phase == 0.0);
    CHECK(f.phase_undefined);
}

TEST_CASE("a global phase on the unitary shifts the fringe by that angle") {
    const em::DensityMatrix bell = em::make_max_entangled(2);
    const double gamma = 0.87;
    const em::UnitaryOperator f(std::exp(I1 * gamma) * em::swap_operator(2));
    const em::VisibilityPhase vp = em::visibility_and_phase(bell, f);
    CHECK(vp.visibility == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vp.phase == doctest::Approx(gamma).epsilon(1e-12));
}

TEST_CASE("exact scan of a Bell state against swap has unit visibility") {
    const em::DensityMatrix bell = em::make_max_entangled(2);
    const em::UnitaryOperator f(em::swap_operator(2));
    const em::VisibilityPhase vp = em::visibility_and_phase(bell, f);
    CHECK(vp.visibility == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vp.phase == doctest::Approx(0.0));
}

TEST_CASE("phase grid construction and validation") {
    const std::vector<double> g = em::default_phase_grid(8);
    REQUIRE(g.size() == 8);
    CHECK(g[0] == 0.0);
    CHECK(g[3] == doctest::Approx(3.0 * 2.0 * pi / 8.0).epsilon(1e-15));
    CHECK_THROWS_AS(em::default_phase_grid(2), em::InvalidInput);

    const em::DensityMatrix bell = em::make_max_entangled(2);
    const em::UnitaryOperator f(em::swap_operator(2));
    CHECK_THROWS_AS(em::run_exact(bell, f, {0.0, 1.0}), em::InvalidInput);
    // three points where two coincide mod 2pi do not span the fit
    CHECK_THROWS_AS(em::run_exact(bell, f, {0.0, 2.0 * pi, 1.0}), em::InvalidInput);
    CHECK_NOTHROW(em::run_exact(bell, f, {0.0, 1.0, 2.0}));
}

TEST_CASE("sampled runs are reproducible and carry counts") {
    const em::DensityMatrix bell = em::make_max_entangled(2);
    const em::UnitaryOperator f(em::swap_operator(2));
    const std::vector<double> grid = em::default_phase_grid(16);
    const em::InterferencePattern a = em::run_sampled(bell, f, grid, 1000, 7);
    const em::InterferencePattern b = em::run_sampled(bell, f, grid, 1000, 7);
    const em::InterferencePattern c = em::run_sampled(bell, f, grid, 1000, 8);
    REQUIRE(a.counts.size() == grid.size());
    REQUIRE(a.shots.has_value());
    CHECK(*a.shots == 1000);
    CHECK(a.counts == b.counts);
    CHECK(a.counts != c.counts);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(a.intensities[i] ==
              doctest::Approx(static_cast<double>(a.counts[i]) / 1000.0).epsilon(1e-15));
    CHECK_THROWS_AS(em::run_sampled(bell, f, grid, 50, 7), em::InvalidInput);
}

TEST_CASE("pattern validation and csv rendering") {
    em::InterferencePattern p;
    p.phases = {0.0, 1.0, 2.0};
    p.intensities = {0.1, 0.2};
    CHECK_THROWS_AS(em::validate_pattern(p), em::InvalidInput);
    p.intensities = {0.1, 0.2, 1.5};
    CHECK_THROWS_AS(em::validate_pattern(p), em::InvalidInput);
    p.intensities = {0.1, 0.2, 0.3};
    CHECK_NOTHROW(em::validate_pattern(p));

    const std::string csv = em::pattern_to_csv(p);
    CHECK(csv.rfind("phi,intensity\n", 0) == 0);

    p.counts = {100, 200, 300};
    p.shots = 1000;
    const std::string csv2 = em::pattern_to_csv(p);
    CHECK(csv2.rfind("phi,intensity,counts,shots\n", 0) == 0);
    CHECK(csv2.find(",100,1000") != std::string::npos);
}

TEST_CASE("wrap_angle maps onto (-pi, pi]") {
    CHECK(em::wrap_angle(0.5) == doctest::Approx(0.5));
    CHECK(em::wrap_angle(pi) == doctest::Approx(pi));
    CHECK(em::wrap_angle(-pi) == doctest::Approx(pi));
    CHECK(em::wrap_angle(3.0 * pi) == doctest::Approx(pi));
    CHECK(em::wrap_angle(2.0 * pi) == doctest::Approx(0.0));
    CHECK(em::wrap_angle(-0.25) == doctest::Approx(-0.25));
}

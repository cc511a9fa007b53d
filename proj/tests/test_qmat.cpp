#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "em/qmat.hpp"
#include "em/states.hpp"

using em::cplx;
using em::MatC;

namespace {

const cplx I1(0.0, 1.0);
constexpr double pi = std::numbers::pi;

MatC pauli_x() { return MatC(2, 2, {0, 1, 1, 0}); }
MatC pauli_y() { return MatC(2, 2, {0, -I1, I1, 0}); }
MatC pauli_z() { return MatC(2, 2, {1, 0, 0, -1}); }

} // namespace

TEST_CASE("matrix construction validates shape and finiteness") {
    CHECK_THROWS_AS(MatC(2, 2, {1, 2, 3}), em::InvalidInput);
    CHECK_THROWS_AS(MatC(2, 2, {1, 2, 3, cplx(std::nan(""), 0)}), em::InvalidInput);
    const MatC id = MatC::identity(3);
    CHECK(id(0, 0) == cplx(1.0));
    CHECK(id(0, 1) == cplx(0.0));
}

TEST_CASE("arithmetic, dagger, trace") {
    const MatC a(2, 2, {1, 2, 3, 4});
    const MatC b(2, 2, {0, 1, 1, 0});
    const MatC sum = a + b;
    CHECK(sum(0, 1) == cplx(3.0));
    const MatC prod = a * b; // rows of a against columns of b
    CHECK(prod(0, 0) == cplx(2.0));
    CHECK(prod(1, 0) == cplx(4.0));
    CHECK(trace(a) == cplx(5.0));
    CHECK(em::trace_product(a, b) == trace(a * b));

    const MatC c(2, 2, {cplx(0, 1), 0, 0, 0});
    CHECK(em::dagger(c)(0, 0) == cplx(0, -1));
    CHECK(em::hermiticity_defect(pauli_y()) == 0.0);
    CHECK(em::hermiticity_defect(c) == doctest::Approx(2.0));
}

TEST_CASE("kron uses left-major ordering") {
    const MatC d12(2, 2, {1, 0, 0, 2});
    const MatC d34(2, 2, {3, 0, 0, 4});
    const MatC k = em::kron(d12, d34);
    REQUIRE(k.rows == 4);
    CHECK(k(0, 0) == cplx(3.0));
    CHECK(k(1, 1) == cplx(4.0));
    CHECK(k(2, 2) == cplx(6.0));
    CHECK(k(3, 3) == cplx(8.0));
}

TEST_CASE("density matrix constructor enforces the state invariants") {
    CHECK_NOTHROW(em::DensityMatrix(0.5 * MatC::identity(2)));
    // non-hermitian
    CHECK_THROWS_WITH_AS(em::DensityMatrix(MatC(2, 2, {0.5, 1, 0, 0.5})),
                         doctest::Contains("hermitian"), em::InvalidInput);
    // trace != 1
    CHECK_THROWS_WITH_AS(em::DensityMatrix(MatC::identity(2)),
                         doctest::Contains("trace"), em::InvalidInput);
    // hermitian, unit trace, but indefinite
    CHECK_THROWS_WITH_AS(em::DensityMatrix(MatC(2, 2, {1.5, 0, 0, -0.5})),
                         doctest::Contains("psd"), em::InvalidInput);
    // a tiny negative eigenvalue within tolerance is accepted
    CHECK_NOTHROW(em::DensityMatrix(MatC(2, 2, {1.0 + 1e-10, 0, 0, -1e-10})));
}

TEST_CASE("unitary constructor enforces unitarity") {
    CHECK_NOTHROW(em::UnitaryOperator{pauli_y()});
    CHECK_THROWS_AS(em::UnitaryOperator(MatC(2, 2, {1, 0, 0, 2})), em::InvalidInput);
}

TEST_CASE("partial trace of a Bell state gives maximally mixed marginals") {
    const em::DensityMatrix bell = em::make_max_entangled(2);
    const em::BipartiteShape shape(2, 2);
    const em::DensityMatrix ra = em::partial_trace(bell, shape, em::Subsystem::A);
    const em::DensityMatrix rb = em::partial_trace(bell, shape, em::Subsystem::B);
    CHECK(em::max_abs_diff(ra.mat(), 0.5 * MatC::identity(2)) < 1e-15);
    CHECK(em::max_abs_diff(rb.mat(), 0.5 * MatC::identity(2)) < 1e-15);
}

TEST_CASE("partial trace keeps the asymmetric factor straight") {
    // rho = |0><0| (x) (I/3) on 2 x 3
    const MatC p0(2, 2, {1, 0, 0, 0});
    const MatC rho = em::kron(p0, cplx(1.0 / 3.0) * MatC::identity(3));
    const em::BipartiteShape shape(2, 3);
    const em::DensityMatrix dm(rho);
    CHECK(em::max_abs_diff(em::partial_trace(dm, shape, em::Subsystem::A).mat(), p0) < 1e-15);
    CHECK(em::max_abs_diff(em::partial_trace(dm, shape, em::Subsystem::B).mat(),
                           cplx(1.0 / 3.0) * MatC::identity(3)) < 1e-15);
}

TEST_CASE("partial transpose of a Bell state has eigenvalues {-1/2, 1/2, 1/2, 1/2}") {
    const em::DensityMatrix bell = em::make_max_entangled(2);
    const MatC pt = em::partial_transpose(bell, em::BipartiteShape(2, 2), em::Subsystem::B);
    const em::EighResult eg = em::eigh(pt);
    REQUIRE(eg.eigenvalues.size() == 4);
    CHECK(eg.eigenvalues[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(eg.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eg.eigenvalues[3] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(em::trace_norm(pt) == doctest::Approx(2.0).epsilon(1e-12));

    // transposing either side gives the same spectrum
    const MatC pt_a = em::partial_transpose(bell, em::BipartiteShape(2, 2), em::Subsystem::A);
    CHECK(em::trace_norm(pt_a) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("eigh solves small frozen cases") {
    SUBCASE("real symmetric 2x2") {
        const em::EighResult eg = em::eigh(MatC(2, 2, {2, 1, 1, 2}));
        CHECK(eg.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(eg.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-13));
    }
    SUBCASE("complex hermitian 2x2") {
        const em::EighResult eg = em::eigh(MatC(2, 2, {1, I1, -I1, 1}));
        CHECK(eg.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-13));
        CHECK(eg.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-13));
    }
    SUBCASE("tridiagonal 3x3: eigenvalues 2 - sqrt(2), 2, 2 + sqrt(2)") {
        const em::EighResult eg = em::eigh(MatC(3, 3, {2, 1, 0, 1, 2, 1, 0, 1, 2}));
        CHECK(eg.eigenvalues[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-13));
        CHECK(eg.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(eg.eigenvalues[2] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-13));
    }
}

TEST_CASE("eigh reconstructs the input and rejects non-hermitian matrices") {
    em::Rng rng(2024);
    const MatC g = em::random_matrix(6, 6, rng);
    const MatC h = cplx(0.5) * (g + em::dagger(g));
    const em::EighResult eg = em::eigh(h);

    MatC d6(6, 6);
    for (int i = 0; i < 6; ++i) d6(i, i) = eg.eigenvalues[i];
    const MatC rebuilt = eg.eigenvectors.mat() * d6 * em::dagger(eg.eigenvectors.mat());
    CHECK(em::max_abs_diff(rebuilt, h) < 1e-11);
    for (std::size_t i = 1; i < eg.eigenvalues.size(); ++i)
        CHECK(eg.eigenvalues[i - 1] <= eg.eigenvalues[i]);

    CHECK_THROWS_AS(em::eigh(MatC(2, 2, {0, 1, 0, 0})), em::InvalidInput);
}

TEST_CASE("expm_hermitian matches closed forms on the swap operator") {
    const MatC f = em::swap_operator(2);
    // eigenvalues of F are +/-1, so exp(i pi F) = -I
    const em::UnitaryOperator u_pi = em::expm_hermitian(f, pi);
    CHECK(em::max_abs_diff(u_pi.mat(), cplx(-1.0) * MatC::identity(4)) < 1e-12);
    // and exp(i pi/2 F) = i F
    const em::UnitaryOperator u_half = em::expm_hermitian(f, 0.5 * pi);
    CHECK(em::max_abs_diff(u_half.mat(), I1 * f) < 1e-12);
}

TEST_CASE("expm_hermitian matches the rotation formula for a Pauli generator") {
    const double theta = 0.37;
    const em::UnitaryOperator u = em::expm_hermitian(pauli_x(), theta);
    const MatC expect = cplx(std::cos(theta)) * MatC::identity(2) +
                        cplx(0, std::sin(theta)) * pauli_x();
    CHECK(em::max_abs_diff(u.mat(), expect) < 1e-13);
}

TEST_CASE("trace_norm sums absolute eigenvalues") {
    MatC d(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = -2.0;
    d(2, 2) = 3.0;
    CHECK(em::trace_norm(d) == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(em::trace_norm(pauli_z()) == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("bipartite shape validation") {
    CHECK_THROWS_AS(em::BipartiteShape(1, 2), em::InvalidInput);
    CHECK_THROWS_AS(em::BipartiteShape(2, 0), em::InvalidInput);
    CHECK(em::BipartiteShape(2, 3).dim() == 6);
}

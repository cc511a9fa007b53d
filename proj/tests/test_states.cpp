#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "em/oracle.hpp"
#include "em/qmat.hpp"
#include "em/states.hpp"

using em::cplx;
using em::MatC;

TEST_CASE("schmidt validation names the offending field") {
    CHECK_NOTHROW(em::validate_schmidt({{0.5, 0.5}}));
    CHECK_THROWS_WITH_AS(em::validate_schmidt({{0.6, 0.6}}), doctest::Contains("lambdas"),
                         em::InvalidInput);
    CHECK_THROWS_WITH_AS(em::validate_schmidt({{1.2, -0.2}}), doctest::Contains("lambdas"),
                         em::InvalidInput);
    CHECK_THROWS_AS(em::validate_schmidt({{}}), em::InvalidInput);
}

TEST_CASE("pure schmidt state has the requested marginal spectrum") {
    const em::PreparedState st = em::make_pure_schmidt({{0.5, 0.25, 0.25}});
    REQUIRE(st.shape.dA == 3);
    REQUIRE(st.shape.dB == 3);
    CHECK(em::oracle::purity(st.rho) == doctest::Approx(1.0).epsilon(1e-12));

    const em::DensityMatrix ra = em::partial_trace(st.rho, st.shape, em::Subsystem::A);
    CHECK(ra.mat()(0, 0).real() == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(ra.mat()(1, 1).real() == doctest::Approx(0.25).epsilon(1e-13));
    // marginal purity 1/4 + 1/16 + 1/16 = 3/8
    CHECK(em::oracle::purity(ra) == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("maximally entangled state matches the flat schmidt vector") {
    const em::DensityMatrix phi = em::make_max_entangled(2);
    const em::PreparedState flat = em::make_pure_schmidt({{0.5, 0.5}});
    CHECK(em::max_abs_diff(phi.mat(), flat.rho.mat()) < 1e-15);
    CHECK_THROWS_AS(em::make_max_entangled(1), em::InvalidInput);
}

TEST_CASE("werner family reproduces the swap expectation 2x - 1") {
    for (int d : {2, 3, 4}) {
        const MatC f = em::swap_operator(d);
        for (double x : {0.0, 0.3, 0.5, 1.0}) {
            const em::DensityMatrix w = em::make_werner(d, x);
            CHECK(em::trace_product(f, w.mat()).real() ==
                  doctest::Approx(2.0 * x - 1.0).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(em::make_werner(2, 1.5), em::InvalidInput);
    CHECK_THROWS_AS(em::make_werner(2, -0.1), em::InvalidInput);
}

TEST_CASE("isotropic family interpolates between noise and the entangled projector") {
    const int d = 3;
    const em::DensityMatrix phi = em::make_max_entangled(d);
    for (double x : {0.0, 0.4, 1.0}) {
        const em::DensityMatrix iso = em::make_isotropic(d, x);
        const double overlap = em::trace_product(phi.mat(), iso.mat()).real();
        CHECK(overlap == doctest::Approx(x + (1.0 - x) / (d * d)).epsilon(1e-12));
        const em::DensityMatrix ra =
            em::partial_trace(iso, em::BipartiteShape(d, d), em::Subsystem::A);
        CHECK(em::max_abs_diff(ra.mat(), cplx(1.0 / d) * MatC::identity(d)) < 1e-13);
    }
}

TEST_CASE("correlated-noise family endpoints") {
    const int d = 3;
    CHECK(em::max_abs_diff(em::make_cna(d, 1.0).mat(), em::make_max_entangled(d).mat()) <
          1e-15);
    // x = 0 is the classically correlated mixture sum_j |jj><jj| / d
    const em::DensityMatrix cc = em::make_cna(d, 0.0);
    for (int j = 0; j < d; ++j)
        CHECK(cc.mat()(j * d + j, j * d + j).real() == doctest::Approx(1.0 / d));
    CHECK(cc.mat()(0, d + 1) == cplx(0.0)); // no coherence between |00> and |11>
    // marginals stay maximally mixed across the family
    const em::DensityMatrix mid = em::make_cna(d, 0.5);
    const em::DensityMatrix ra =
        em::partial_trace(mid, em::BipartiteShape(d, d), em::Subsystem::B);
    CHECK(em::max_abs_diff(ra.mat(), cplx(1.0 / d) * MatC::identity(d)) < 1e-13);
}

TEST_CASE("swap operator exchanges the factors") {
    const MatC f = em::swap_operator(3);
    CHECK(em::unitarity_defect(f) < 1e-15);
    CHECK(em::hermiticity_defect(f) < 1e-15);
    // F |1,2> = |2,1>: column 1*3+2 has its unit entry at row 2*3+1
    CHECK(f(2 * 3 + 1, 1 * 3 + 2) == cplx(1.0));
    CHECK(trace(f) == cplx(3.0));
}

TEST_CASE("state specs parse from json") {
    SUBCASE("pure schmidt") {
        const em::PreparedState st =
            em::parse_state_spec(R"({"kind":"pure_schmidt","lambdas":[0.5,0.25,0.25]})");
        CHECK(st.spec.kind == em::StateKind::pure_schmidt);
        CHECK(st.shape.dA == 3);
    }
    SUBCASE("parametric families") {
        CHECK(em::parse_state_spec(R"({"kind":"max_entangled","d":4})").shape.dA == 4);
        CHECK(em::parse_state_spec(R"({"kind":"werner","d":2,"x":0.2})").shape.dB == 2);
        CHECK(em::parse_state_spec(R"({"kind":"isotropic","d":3,"x":0.9})").shape.dA == 3);
        CHECK(em::parse_state_spec(R"({"kind":"cna","d":3,"x":0.5})").shape.dA == 3);
    }
    SUBCASE("dense") {
        const em::PreparedState st = em::parse_state_spec(
            R"({"kind":"dense","dA":2,"dB":2,)"
            R"("re":[[0.5,0,0,0.5],[0,0,0,0],[0,0,0,0],[0.5,0,0,0.5]],)"
            R"("im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]})");
        CHECK(em::max_abs_diff(st.rho.mat(), em::make_max_entangled(2).mat()) < 1e-15);
    }
    SUBCASE("ensemble keeps its decomposition") {
        const em::PreparedState st = em::parse_state_spec(
            R"({"kind":"ensemble","weights":[0.5,0.5],"members":[)"
            R"({"kind":"pure_schmidt","lambdas":[0.5,0.5]},)"
            R"({"kind":"pure_schmidt","lambdas":[1.0,0.0]}]})");
        REQUIRE(st.ensemble.has_value());
        CHECK(st.ensemble->members.size() == 2);
        CHECK(em::oracle::purity(st.rho) < 1.0);
    }
}

TEST_CASE("state spec parsing reports malformed input") {
    CHECK_THROWS_AS(em::parse_state_spec("not json"), em::InvalidInput);
    CHECK_THROWS_AS(em::parse_state_spec(R"({"kind":"unknown_kind"})"), em::InvalidInput);
    CHECK_THROWS_WITH_AS(em::parse_state_spec(R"({"kind":"werner","d":2,"x":1.5})"),
                         doctest::Contains("x out of range"), em::InvalidInput);
    CHECK_THROWS_WITH_AS(
        em::parse_state_spec(
            R"({"kind":"ensemble","weights":[0.7,0.7],"members":[)"
            R"({"kind":"pure_schmidt","lambdas":[0.5,0.5]},)"
            R"({"kind":"pure_schmidt","lambdas":[1.0,0.0]}]})"),
        doctest::Contains("weights"), em::InvalidInput);
    // dense input that is not a state fails the construction invariants
    CHECK_THROWS_AS(em::parse_state_spec(
                        R"({"kind":"dense","dA":2,"dB":2,)"
                        R"("re":[[1,0,0,0],[0,1,0,0],[0,0,0,0],[0,0,0,0]],)"
                        R"("im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]})"),
                    em::InvalidInput);
}

TEST_CASE("random states are deterministic in the seed and normalized") {
    const em::DensityMatrix a = em::random_pure(3, 77);
    const em::DensityMatrix b = em::random_pure(3, 77);
    const em::DensityMatrix c = em::random_pure(3, 78);
    CHECK(em::max_abs_diff(a.mat(), b.mat()) == 0.0);
    CHECK(em::max_abs_diff(a.mat(), c.mat()) > 1e-3);
    CHECK(em::oracle::purity(a) == doctest::Approx(1.0).epsilon(1e-12));

    em::Rng rng(5);
    const em::SchmidtSpec s = em::random_schmidt(4, rng);
    CHECK_NOTHROW(em::validate_schmidt(s));

    const MatC u = em::random_unitary_mat(5, rng);
    CHECK(em::unitarity_defect(u) < 1e-13);
}

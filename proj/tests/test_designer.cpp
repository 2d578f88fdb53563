// SPDX-License-Identifier: Apache-2.0
#include "fk/designer.hpp"

#include <doctest.h>

#include <cmath>

using namespace fk;

TEST_CASE("residual_vector") {
    // certified order-2 scheme has a zero vector through nu = 2
    for (double r : residual_vector(builtin::trapezoid(), 2)) CHECK(r == doctest::Approx(0.0));
    for (double r : residual_vector(builtin::midpoint_bridge(), 2))
        CHECK(r == doctest::Approx(0.0));

    // trapezoid at nu = 3 contains the 2/3 entry at the (2,1) l0^2 l1^2 slot
    auto res = residual_vector(builtin::trapezoid(), 3);
    bool found = false;
    for (double r : res)
        if (std::fabs(r - 2.0 / 3.0) < 1e-12) found = true;
    CHECK(found);

    // any symmetric normalized rule satisfies the nu = 1 conditions
    SchemeSpec s;
    s.name = "sym3";
    s.quadrature.knots = {0.2, 0.5, 0.8};
    s.quadrature.weights = {0.3, 0.4, 0.3};
    for (double r : residual_vector(s, 1)) CHECK(r == doctest::Approx(0.0));
}

TEST_CASE("design recovers the midpoint bridge value 1/2") {
    DesignProblem problem;
    problem.n_q = 1;
    problem.n_nu = 1;
    problem.target_order = 2;
    auto result = design_scheme(problem, 32, {7, 0});
    CHECK(result.certified);
    CHECK(result.certified_order >= 2);
    CHECK(result.residual_norm < 1e-8);
    REQUIRE(result.scheme.n_nu() == 1);
    CHECK(std::fabs(result.scheme.bridge.values[0][0]) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(result.scheme.quadrature.knots[0] == doctest::Approx(0.5));
    // symmetry preserved exactly by the chart
    CHECK(check_scheme_symmetry(result.scheme).pass());
    CHECK(result.log.size() == 32);
}

TEST_CASE("design recovers trapezoid weights with pinned knots") {
    DesignProblem problem;
    problem.n_q = 2;
    problem.n_nu = 0;
    problem.target_order = 2;
    problem.pinned_knots = std::vector<double>{0.0, 1.0};
    auto result = design_scheme(problem, 8, {11, 0});
    CHECK(result.certified);
    CHECK(result.scheme.quadrature.weights[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(result.scheme.quadrature.weights[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("infeasible problem is flagged not-certified") {
    DesignProblem problem;
    problem.n_q = 1;
    problem.n_nu = 0;
    problem.target_order = 2;
    auto result = design_scheme(problem, 4, {3, 0});
    CHECK_FALSE(result.certified);
    // gamma~(1/2,1/2) = 1/4 cannot reach 1/2 without a bridge
    CHECK(result.residual_norm > 0.2);
}

TEST_CASE("certification is non-degenerate under bridge scaling") {
    SchemeSpec mb = builtin::midpoint_bridge();
    CHECK(certify_order(mb, 2).certified_order == 2);
    SchemeSpec scaled = mb;
    scaled.quadrature.knots_exact.clear();
    scaled.quadrature.weights_exact.clear();
    scaled.bridge.values_exact.clear();
    scaled.bridge.values[0][0] *= 1.001;
    CHECK(certify_order(scaled, 2, 1e-10).certified_order < 2);
}

TEST_CASE("design result re-certifies independently") {
    DesignProblem problem;
    problem.n_q = 1;
    problem.n_nu = 1;
    problem.target_order = 2;
    auto result = design_scheme(problem, 8, {21, 0});
    REQUIRE(result.certified);
    auto rep = certify_order(result.scheme, 2, result.scheme.exact() ? 0.0 : 1e-9);
    CHECK(rep.certified_order >= 2);
}

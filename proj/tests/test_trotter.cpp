// SPDX-License-Identifier: Apache-2.0
#include "fk/trotter.hpp"

#include <doctest.h>

#include <cmath>

using namespace fk;

TEST_CASE("free particle kernel") {
    PhysicalParams p{1.0, 1.0, 1.0};
    CHECK(p.sigma() == doctest::Approx(1.0));
    CHECK(free_particle_kernel(0.0, 0.0, p) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
    CHECK(free_particle_kernel(1.0, 0.0, p) ==
          doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)));
    CHECK(free_particle_kernel(0.3, -0.4, p) == free_particle_kernel(-0.4, 0.3, p));
    CHECK_THROWS_AS(free_particle_kernel(0, 0, PhysicalParams{-1.0, 1.0, 1.0}), InputError);
}

TEST_CASE("reference harmonic kernel") {
    CHECK(reference_harmonic_kernel(0.0, 0.0, 1.0, 1.0) ==
          doctest::Approx(std::sqrt(1.0 / (2.0 * M_PI * std::sinh(1.0)))));
    CHECK(reference_harmonic_kernel(0.0, 0.0, 1.0, 1.0) == doctest::Approx(0.3680069).epsilon(1e-5));
    // omega -> 0 approaches the free particle
    PhysicalParams p{1.0, 1.0, 1.0};
    CHECK(reference_harmonic_kernel(0.4, -0.2, 1.0, 1e-4) ==
          doctest::Approx(free_particle_kernel(0.4, -0.2, p)).epsilon(1e-4));
    CHECK(reference_harmonic_kernel(0.7, 0.1, 2.0, 1.5) ==
          reference_harmonic_kernel(0.1, 0.7, 2.0, 1.5));
}

TEST_CASE("gauss-hermite rule") {
    auto rule = gauss_hermite(8);
    double w = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        w += rule.weights[i];
        m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
        m4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
        m6 += rule.weights[i] * std::pow(rule.nodes[i], 6);
    }
    CHECK(w == doctest::Approx(1.0));
    CHECK(m2 == doctest::Approx(1.0));   // E[Z^2]
    CHECK(m4 == doctest::Approx(3.0));   // E[Z^4]
    CHECK(m6 == doctest::Approx(15.0));  // E[Z^6]
}

TEST_CASE("short time kernel") {
    PhysicalParams p{0.1, 1.0, 1.0};
    SchemeSpec trap = builtin::trapezoid();
    SchemeSpec mb = builtin::midpoint_bridge();

    // V = 0 gives exactly rho_fp
    CHECK(short_time_kernel(trap, zero_potential(), 0.3, -0.2, p) ==
          doctest::Approx(free_particle_kernel(0.3, -0.2, p)));
    CHECK(short_time_kernel(mb, zero_potential(), 0.3, -0.2, p) ==
          doctest::Approx(free_particle_kernel(0.3, -0.2, p)));

    // n_nu = 0 trapezoid: closed form rho_fp exp(-beta (V(x)+V(x'))/2)
    auto V = harmonic_potential(1.0);
    double expected = free_particle_kernel(0.5, 1.0, p) *
                      std::exp(-p.beta * 0.5 * (V(0.5) + V(1.0)));
    CHECK(short_time_kernel(trap, V, 0.5, 1.0, p) == doctest::Approx(expected));

    // constant potential: rho_fp e^{-beta c} for every scheme
    PotentialSpec constant{"const", [](double) { return 2.5; }, 2.5};
    for (const auto& s : {trap, builtin::midpoint(), mb})
        CHECK(short_time_kernel(s, constant, 0.1, 0.2, p) ==
              doctest::Approx(free_particle_kernel(0.1, 0.2, p) * std::exp(-p.beta * 2.5)));

    // Monte Carlo integration agrees with Gauss-Hermite on the bridge scheme
    double gh = short_time_kernel(mb, V, 0.0, 0.0, p);
    double mc = short_time_kernel(mb, V, 0.0, 0.0, p,
                                  Integration::monte_carlo(200000, {99, 0}));
    CHECK(mc == doctest::Approx(gh).epsilon(2e-3));
}

TEST_CASE("trotter composition: V = 0 reproduces the free propagator") {
    PhysicalParams p{1.0, 1.0, 1.0};
    SpatialGrid grid{-8.0, 8.0, 129};  // step 1/8: test points are exact nodes
    auto res = trotter_compose(builtin::trapezoid(), zero_potential(), p, 7, grid);
    CHECK(res.factors == 8);
    CHECK_FALSE(res.boundary_warning);
    for (double x : {0.0, 0.5, -1.25})
        CHECK(res.at(x, 0.0) == doctest::Approx(free_particle_kernel(x, 0.0, p)).epsilon(1e-6));
}

TEST_CASE("trotter composition: harmonic diagonal and bounds") {
    PhysicalParams p{1.0, 1.0, 1.0};
    SpatialGrid grid{-8.0, 8.0, 512};
    auto V = harmonic_potential(1.0);
    auto res = trotter_compose(builtin::trapezoid(), V, p, 16, grid);
    CHECK(res.at(0.0, 0.0) == doctest::Approx(0.3680069).epsilon(1e-3 / 0.368));

    // domination: rho_n <= C(beta) rho_fp pointwise (V0 = 0 here, so C = 1)
    CHECK(res.domination_max <= 1.0 + 1e-9);
    CHECK(res.weight_sum == doctest::Approx(1.0));

    // Hermiticity for a symmetric scheme
    double asym = (res.rho - res.rho.transpose()).cwiseAbs().maxCoeff();
    CHECK(asym <= 1e-10 * res.rho.cwiseAbs().maxCoeff());
}

TEST_CASE("standard discretization MC") {
    PhysicalParams p{1.0, 1.0, 1.0};
    // V = 0 -> exactly 1 +- 0
    auto est = standard_discretization_mc(builtin::trapezoid(), zero_potential(), 0, 0, p, 3,
                                          200, {5, 0});
    CHECK(est.mean == doctest::Approx(1.0));
    CHECK(est.stderr_ == doctest::Approx(0.0));

    // V = c -> e^{-beta c} +- 0
    PotentialSpec constant{"const", [](double) { return 0.7; }, 0.7};
    est = standard_discretization_mc(builtin::midpoint_bridge(), constant, 0, 0, p, 3, 200,
                                     {5, 1});
    CHECK(est.mean == doctest::Approx(std::exp(-0.7)));
    CHECK(est.stderr_ < 1e-12);

    // harmonic ratio at the origin approaches Mehler / free-particle
    auto V = harmonic_potential(1.0);
    est = standard_discretization_mc(builtin::trapezoid(), V, 0, 0, p, 6, 40000, {11, 0});
    double target = reference_harmonic_kernel(0, 0, 1.0, 1.0) / free_particle_kernel(0, 0, p);
    // allow discretization bias at k=6 on top of 3 standard errors
    CHECK(std::fabs(est.mean - target) <= 3.0 * est.stderr_ + 2e-4);
}

TEST_CASE("estimate_convergence_order") {
    // synthetic c / n^2
    std::vector<std::pair<int, double>> errors;
    for (int n : {3, 7, 15, 31, 63}) errors.push_back({n, 0.37 / ((n + 1.0) * (n + 1.0))});
    auto fit = estimate_convergence_order(errors);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.slope_stderr == doctest::Approx(0.0));
    CHECK(fit.points_used == 5);

    // non-positive errors are excluded and reported
    errors.push_back({127, 0.0});
    fit = estimate_convergence_order(errors);
    CHECK(fit.excluded == std::vector<int>{127});
    CHECK(fit.points_used == 5);

    CHECK_THROWS_AS(estimate_convergence_order({{1, 0.5}, {3, 0.1}}), InputError);
}

TEST_CASE("empirical order matches certification (small grids)") {
    PhysicalParams p{1.0, 1.0, 1.0};
    SpatialGrid grid{-8.0, 8.0, 256};
    auto V = harmonic_potential(1.0);
    double ref = reference_harmonic_kernel(0, 0, 1.0, 1.0);

    std::vector<std::pair<int, double>> trap_errors, mid_errors;
    for (int n : {3, 7, 15, 31}) {
        trap_errors.push_back(
            {n, std::fabs(trotter_compose(builtin::trapezoid(), V, p, n, grid).at(0, 0) - ref)});
        mid_errors.push_back(
            {n, std::fabs(trotter_compose(builtin::midpoint(), V, p, n, grid).at(0, 0) - ref)});
    }
    CHECK(estimate_convergence_order(trap_errors).slope == doctest::Approx(-2.0).epsilon(0.1));
    CHECK(estimate_convergence_order(mid_errors).slope == doctest::Approx(-1.0).epsilon(0.15));
}

// SPDX-License-Identifier: Apache-2.0
#include "fk/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace fk;

TEST_CASE("schauder functions") {
    CHECK(schauder(1, 1, 0.5) == doctest::Approx(0.5));
    CHECK(schauder(2, 1, 0.25) == doctest::Approx(0.5 / std::sqrt(2.0)));
    CHECK(schauder(2, 2, 0.25) == doctest::Approx(0.0));
    CHECK(schauder(1, 1, -0.2) == 0.0);
    CHECK(schauder(1, 1, 1.3) == 0.0);
    CHECK_THROWS_AS(schauder(0, 1, 0.5), InputError);
    CHECK_THROWS_AS(schauder(2, 3, 0.5), InputError);
}

TEST_CASE("levy-ciesielski bridge structure") {
    // k=1 with a_{1,1}=1 gives the tent (0, 1/2, 0); reproduce by hand
    std::vector<std::vector<double>> a = {{}, {0.0, 1.0}};
    CHECK(levy_ciesielski_eval(a, 1, 0.5) == doctest::Approx(0.5));
    CHECK(levy_ciesielski_eval(a, 1, 0.0) == doctest::Approx(0.0));
    CHECK(levy_ciesielski_eval(a, 1, 1.0) == doctest::Approx(0.0));

    auto path = levy_ciesielski_bridge(6, RandomStream{42, 0});
    CHECK(path.values.size() == 65);
    CHECK(path.values.front() == 0.0);  // bridge pins exactly
    CHECK(path.values.back() == 0.0);

    // reproducibility: identical (seed, stream) -> identical paths bit-for-bit
    auto again = levy_ciesielski_bridge(6, RandomStream{42, 0});
    CHECK(path.values == again.values);
    auto other = levy_ciesielski_bridge(6, RandomStream{42, 1});
    CHECK(path.values != other.values);
}

TEST_CASE("bridge empirical covariance at (1/4, 3/4)") {
    const int k = 6, samples = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < samples; ++s) {
        auto path = levy_ciesielski_bridge(k, RandomStream{20260826, static_cast<std::uint64_t>(s)});
        double prod = path.at_index(16) * path.at_index(48);  // u = 1/4, 3/4
        sum += prod;
        sum2 += prod * prod;
    }
    double mean = sum / samples;
    double se = std::sqrt((sum2 / samples - mean * mean) / samples);
    // bridge covariance min(u,t) - u t = 1/4 - 3/16 = 0.0625
    CHECK(std::fabs(mean - 0.0625) <= 3.0 * se);
}

TEST_CASE("bridge interpolant and tail field") {
    SchemeSpec mb = builtin::midpoint_bridge();
    CHECK(bridge_interpolant(mb, 1, 0.5) == doctest::Approx(0.5));
    CHECK(bridge_interpolant(mb, 1, 0.25) == doctest::Approx(0.25));  // linear to (0,0)
    CHECK(bridge_interpolant(mb, 1, 0.0) == 0.0);
    CHECK(bridge_interpolant(mb, 1, 1.0) == 0.0);
    CHECK_THROWS_AS(bridge_interpolant(mb, 2, 0.5), InputError);

    // G_{1,1}(1/4) at k=1: 2^{-1/2} * Lambda~(1/2)
    CHECK(tail_field(mb, 1, 1, 1, 0.25) == doctest::Approx(0.5 / std::sqrt(2.0)));
    // zero outside the cell
    CHECK(tail_field(mb, 1, 1, 1, 0.75) == 0.0);
    CHECK_THROWS_AS(tail_field(mb, 0, 1, 1, 0.25), InputError);
}

TEST_CASE("composite measure") {
    SchemeSpec trap = builtin::trapezoid();
    auto w1 = composite_measure(trap, 1);
    REQUIRE(w1.size() == 3);
    CHECK(w1.knots_exact == std::vector<Rational>{0, Rational(1, 2), 1});
    CHECK(w1.weights_exact ==
          std::vector<Rational>{Rational(1, 4), Rational(1, 2), Rational(1, 4)});

    // k=0 is the scheme's own rule
    auto w0 = composite_measure(trap, 0);
    CHECK(w0.knots == trap.quadrature.knots);
    CHECK(w0.weights == trap.quadrature.weights);

    auto m2 = composite_measure(builtin::midpoint(), 2);
    REQUIRE(m2.size() == 4);
    CHECK(m2.knots_exact == std::vector<Rational>{Rational(1, 8), Rational(3, 8),
                                                  Rational(5, 8), Rational(7, 8)});
    for (const auto& w : m2.weights_exact) CHECK(w == Rational(1, 4));

    // identities: total weight exactly 1, int u domega = 1/2 exactly for all k
    for (int k = 1; k <= 3; ++k) {
        auto wk = composite_measure(trap, k);
        Rational total = 0, first = 0;
        for (std::size_t i = 0; i < wk.size(); ++i) {
            total += wk.weights_exact[i];
            first += wk.weights_exact[i] * wk.knots_exact[i];
        }
        CHECK(total == Rational(1));
        CHECK(first == Rational(1, 2));
    }

    // |int u^2 domega_k - 1/3| decreases monotonically in k
    Rational third(1, 3);
    Rational prev_err;
    for (int k = 1; k <= 3; ++k) {
        auto wk = composite_measure(trap, k);
        Rational second = 0;
        for (std::size_t i = 0; i < wk.size(); ++i)
            second += wk.weights_exact[i] * wk.knots_exact[i] * wk.knots_exact[i];
        Rational err = abs(second - third);
        if (k > 1) CHECK(err < prev_err);
        prev_err = err;
    }
}

TEST_CASE("tail sup statistic") {
    SchemeSpec mb = builtin::midpoint_bridge();
    // n_nu = 0 -> exactly zero
    auto none = tail_sup_statistic(builtin::trapezoid(), 4, 100, {1, 0});
    CHECK(none.mean == 0.0);
    CHECK(none.stderr_ == 0.0);

    for (int k : {2, 4, 6}) {
        auto est = tail_sup_statistic(mb, k, 10000, {7, 0});
        double bound = 3.0 * 1 * std::pow(0.5, 4) / std::ldexp(1.0, k);
        CHECK(est.bound == doctest::Approx(bound));
        CHECK(est.mean <= bound + 3.0 * est.stderr_);
        CHECK(est.mean > 0.0);
    }
}

TEST_CASE("normal generator reproducibility") {
    NormalGenerator g1({123, 5}), g2({123, 5}), g3({123, 6});
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        double a = g1(), b = g2(), c = g3();
        all_equal = all_equal && (a == b);
        any_diff = any_diff || (a != c);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

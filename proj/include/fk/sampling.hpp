// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/errors.hpp"
#include "fk/scheme.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace fk {

// ---------------------------------------------------------------------------
// Reproducible normal deviates.
//
// Deviates are generated by Box-Muller over mt19937_64, so identical
// (seed, stream) pairs reproduce identical sequences bit-for-bit on any
// platform (no reliance on implementation-defined std distributions).
// ---------------------------------------------------------------------------

struct RandomStream {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

class NormalGenerator {
public:
    explicit NormalGenerator(RandomStream rs)
        : engine_(detail::splitmix64(rs.seed) ^ detail::splitmix64(~rs.stream)) {}

    /// Standard normal deviate (Box-Muller; two uniforms per pair).
    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    double uniform_open() {
        // (0,1]: avoids log(0)
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Schauder functions and the Levy-Ciesielski bridge construction.
// ---------------------------------------------------------------------------

/// Mother tent: u on [0,1/2], 1-u on (1/2,1], zero elsewhere.
inline double schauder_mother(double u) {
    if (u < 0.0 || u > 1.0) return 0.0;
    return u <= 0.5 ? u : 1.0 - u;
}

/// Schauder function F_{l,j}(u) = 2^{-(l-1)/2} F_{1,1}(2^{l-1} u - j + 1).
inline double schauder(int l, int j, double u) {
    if (l < 1 || j < 1 || j > (1 << (l - 1)))
        throw InputError("schauder: invalid (l, j)");
    return std::pow(2.0, -0.5 * (l - 1)) * schauder_mother(std::ldexp(u, l - 1) - j + 1);
}

/// Brownian-bridge path values on the dyadic grid u = i/2^k.
struct DyadicPath {
    int level = 0;
    std::vector<double> values;  // length 2^k + 1

    double at_index(std::size_t i) const { return values[i]; }
};

/// Truncated Levy-Ciesielski series sum_{l=1}^{k} a_{l,[2^{l-1}u]+1} F_{l,.}(u)
/// evaluated at arbitrary u with a given coefficient table. Coefficient index
/// 2^{l-1}+1 (the u = 1 overflow cell) is treated as zero.
inline double levy_ciesielski_eval(const std::vector<std::vector<double>>& a, int k, double u) {
    double v = 0.0;
    for (int l = 1; l <= k; ++l) {
        int cell = static_cast<int>(std::floor(std::ldexp(u, l - 1))) + 1;
        if (cell < 1 || cell > (1 << (l - 1))) continue;  // overflow convention
        v += a[l][cell] * schauder(l, cell, u);
    }
    return v;
}

/// Samples a Brownian-bridge path on the dyadic grid of level k. Consumes
/// exactly 2^k - 1 normals, level-major.
inline DyadicPath levy_ciesielski_bridge(int k, NormalGenerator& gen) {
    if (k < 1) throw InputError("levy_ciesielski_bridge: k must be >= 1");
    std::vector<std::vector<double>> a(k + 1);
    for (int l = 1; l <= k; ++l) {
        a[l].resize((1 << (l - 1)) + 1, 0.0);
        for (int j = 1; j <= (1 << (l - 1)); ++j) a[l][j] = gen();
    }
    DyadicPath path;
    path.level = k;
    const int npts = (1 << k) + 1;
    path.values.resize(npts);
    for (int i = 0; i < npts; ++i)
        path.values[i] = levy_ciesielski_eval(a, k, static_cast<double>(i) / (1 << k));
    return path;
}

inline DyadicPath levy_ciesielski_bridge(int k, RandomStream stream) {
    NormalGenerator gen(stream);
    return levy_ciesielski_bridge(k, gen);
}

// ---------------------------------------------------------------------------
// Bridge-basis continuous extension and scaled tail fields.
// ---------------------------------------------------------------------------

/// Continuous extension of bridge function l (1-based): piecewise linear
/// through (0,0), the knot values, and (1,0); zero outside [0,1].
inline double bridge_interpolant(const SchemeSpec& s, int l, double u) {
    if (l < 1 || l > static_cast<int>(s.n_nu()))
        throw InputError("bridge_interpolant: basis index out of range");
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const auto& th = s.quadrature.knots;
    const auto& row = s.bridge.values[l - 1];
    double x0 = 0.0, y0 = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
        if (u <= th[i]) {
            if (th[i] == x0) return row[i];
            return y0 + (row[i] - y0) * (u - x0) / (th[i] - x0);
        }
        x0 = th[i];
        y0 = row[i];
    }
    if (x0 >= 1.0) return 0.0;
    return y0 + (0.0 - y0) * (u - x0) / (1.0 - x0);
}

/// Scaled tail function G_{l,j}(u) = 2^{-k/2} Lambda~_l(2^k u - j + 1).
inline double tail_field(const SchemeSpec& s, int k, int l, int j, double u) {
    if (k < 1) throw InputError("tail_field: k must be >= 1");
    if (j < 1 || j > (1 << k)) throw InputError("tail_field: cell index out of range");
    double t = std::ldexp(u, k) - j + 1;
    if (t < 0.0 || t > 1.0) return 0.0;
    return std::pow(2.0, -0.5 * k) * bridge_interpolant(s, l, t);
}

// ---------------------------------------------------------------------------
// Composite quadrature measure omega_k.
// ---------------------------------------------------------------------------

/// Contracted/translated rule: knots 2^{-k}(theta_i + j - 1), weights
/// 2^{-k} w_i over the 2^k dyadic cells; duplicate knots merged by weight
/// addition. Exact when the base scheme is exact.
inline QuadratureRule composite_measure(const SchemeSpec& s, int k) {
    if (k < 0) throw InputError("composite_measure: k must be >= 0");
    s.validate();
    QuadratureRule rule;
    const int cells = 1 << k;
    if (s.exact()) {
        std::map<Rational, Rational> merged;
        const Rational scale(1, BigInt(1) << k);
        for (int j = 1; j <= cells; ++j)
            for (std::size_t i = 0; i < s.n_q(); ++i) {
                Rational knot = scale * (s.quadrature.knots_exact[i] + (j - 1));
                merged[knot] += scale * s.quadrature.weights_exact[i];
            }
        for (const auto& [knot, w] : merged) {
            rule.knots_exact.push_back(knot);
            rule.weights_exact.push_back(w);
            rule.knots.push_back(to_double(knot));
            rule.weights.push_back(to_double(w));
        }
    } else {
        std::map<double, double> merged;
        const double scale = std::ldexp(1.0, -k);
        for (int j = 1; j <= cells; ++j)
            for (std::size_t i = 0; i < s.n_q(); ++i)
                merged[scale * (s.quadrature.knots[i] + (j - 1))] +=
                    scale * s.quadrature.weights[i];
        for (const auto& [knot, w] : merged) {
            rule.knots.push_back(knot);
            rule.weights.push_back(w);
        }
    }
    rule.validate();
    return rule;
}

// ---------------------------------------------------------------------------
// Tail-series sup-norm statistic.
// ---------------------------------------------------------------------------

struct TailSupEstimate {
    double mean = 0.0;    // estimate of E[(sup_u |T_k|)^4]
    double stderr_ = 0.0;
    double bound = 0.0;   // 3 n_nu M^4 / 2^k with M = max |knot value|
};

namespace detail {

struct KahanAccumulator {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

}  // namespace detail

/// Monte Carlo estimate of E[(max_u |T_k(b;u)|)^4] for the tail series
/// T_k(b;u) = sum_l b_{l,[2^k u]+1} G_{l,[2^k u]+1}(u). The sup is taken over
/// a per-cell grid of 16 points joined with the interpolant breakpoints, which
/// is exact for the piecewise-linear extension.
inline TailSupEstimate tail_sup_statistic(const SchemeSpec& s, int k, int samples,
                                          RandomStream stream) {
    if (k < 1) throw InputError("tail_sup_statistic: k must be >= 1");
    if (samples < 1) throw InputError("tail_sup_statistic: samples must be >= 1");
    s.validate();
    const int n_nu = static_cast<int>(s.n_nu());
    TailSupEstimate out;
    double big_m = 0.0;
    for (const auto& row : s.bridge.values)
        for (double v : row) big_m = std::max(big_m, std::fabs(v));
    out.bound = 3.0 * n_nu * std::pow(big_m, 4) / std::ldexp(1.0, k);
    if (n_nu == 0) return out;  // empty tail is identically zero

    // evaluation grid in cell-local coordinates: breakpoints + 16 uniform pts
    std::vector<double> grid;
    for (int g = 0; g <= 16; ++g) grid.push_back(g / 16.0);
    for (double th : s.quadrature.knots)
        if (th > 0.0 && th < 1.0) grid.push_back(th);
    std::vector<double> basis_at(n_nu * grid.size());
    for (int l = 1; l <= n_nu; ++l)
        for (std::size_t g = 0; g < grid.size(); ++g)
            basis_at[(l - 1) * grid.size() + g] = bridge_interpolant(s, l, grid[g]);

    NormalGenerator gen(stream);
    const int cells = 1 << k;
    const double scale = std::pow(2.0, -0.5 * k);
    std::vector<std::vector<double>> b(n_nu, std::vector<double>(cells));
    detail::KahanAccumulator acc, acc2;
    for (int sample = 0; sample < samples; ++sample) {
        for (int l = 0; l < n_nu; ++l)  // level-major draw order
            for (int j = 0; j < cells; ++j) b[l][j] = gen();
        double sup = 0.0;
        for (int j = 0; j < cells; ++j)
            for (std::size_t g = 0; g < grid.size(); ++g) {
                double t = 0.0;
                for (int l = 0; l < n_nu; ++l)
                    t += b[l][j] * basis_at[l * grid.size() + g];
                sup = std::max(sup, std::fabs(t) * scale);
            }
        double s4 = sup * sup * sup * sup;
        acc.add(s4);
        acc2.add(s4 * s4);
    }
    out.mean = acc.sum / samples;
    double var = std::max(0.0, acc2.sum / samples - out.mean * out.mean);
    out.stderr_ = std::sqrt(var / samples);
    return out;
}

}  // namespace fk

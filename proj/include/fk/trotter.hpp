// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/errors.hpp"
#include "fk/sampling.hpp"
#include "fk/scheme.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fk {

struct PhysicalParams {
    double beta = 1.0;
    double mass = 1.0;
    double hbar = 1.0;

    double sigma() const { return std::sqrt(hbar * hbar * beta / mass); }

    PhysicalParams with_beta(double b) const { return {b, mass, hbar}; }

    void validate() const {
        if (!(beta > 0.0) || !(mass > 0.0) || !(hbar > 0.0))
            throw InputError("physical params must be positive");
    }
};

/// One-dimensional potential: evaluator plus a declared lower bound.
struct PotentialSpec {
    std::string name;
    std::function<double(double)> eval;
    double lower_bound = 0.0;

    double operator()(double x) const { return eval(x); }
};

inline PotentialSpec harmonic_potential(double omega) {
    return {"harmonic(omega=" + std::to_string(omega) + ")",
            [omega](double x) { return 0.5 * omega * omega * x * x; }, 0.0};
}

inline PotentialSpec quartic_potential(double a) {
    return {"quartic(a=" + std::to_string(a) + ")",
            [a](double x) { return a * x * x * x * x; }, 0.0};
}

inline PotentialSpec zero_potential() {
    return {"zero", [](double) { return 0.0; }, 0.0};
}

/// Free-particle density matrix exp(-(x'-x)^2 / 2 sigma^2) / sqrt(2 pi sigma^2).
inline double free_particle_kernel(double x, double xp, const PhysicalParams& p) {
    p.validate();
    double s2 = p.sigma() * p.sigma();
    double d = xp - x;
    return std::exp(-d * d / (2.0 * s2)) / std::sqrt(2.0 * M_PI * s2);
}

/// Closed-form harmonic-oscillator density matrix (Mehler kernel), hbar=m=1.
inline double reference_harmonic_kernel(double x, double xp, double beta, double omega) {
    if (!(beta > 0.0) || !(omega > 0.0))
        throw InputError("reference_harmonic_kernel: beta, omega must be positive");
    double sh = std::sinh(omega * beta);
    double ch = std::cosh(omega * beta);
    return std::sqrt(omega / (2.0 * M_PI * sh)) *
           std::exp(-omega * ((x * x + xp * xp) * ch - 2.0 * x * xp) / (2.0 * sh));
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature for expectations over standard normals.
// ---------------------------------------------------------------------------

struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // sum to 1 (probabilists' normalization)
};

/// Golub-Welsch on the probabilists' Hermite recurrence; integrates
/// E[f(Z)], Z ~ N(0,1), exactly for polynomials up to degree 2*level - 1.
inline GaussHermiteRule gauss_hermite(int level) {
    if (level < 1) throw InputError("gauss_hermite: level must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(level, level);
    for (int i = 0; i + 1 < level; ++i) {
        double b = std::sqrt(static_cast<double>(i + 1));
        jacobi(i, i + 1) = b;
        jacobi(i + 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermiteRule rule;
    for (int i = 0; i < level; ++i) {
        rule.nodes.push_back(es.eigenvalues()(i));
        double v = es.eigenvectors()(0, i);
        rule.weights.push_back(v * v);
    }
    return rule;
}

// ---------------------------------------------------------------------------
// Short-time kernel (one Lie-Trotter factor).
// ---------------------------------------------------------------------------

struct Integration {
    enum class Kind { GaussHermite, MonteCarlo } kind = Kind::GaussHermite;
    int gh_level = 8;
    int mc_samples = 10000;
    RandomStream stream;

    static Integration gauss_hermite_level(int level) {
        Integration i;
        i.kind = Kind::GaussHermite;
        i.gh_level = level;
        return i;
    }
    static Integration monte_carlo(int samples, RandomStream rs) {
        Integration i;
        i.kind = Kind::MonteCarlo;
        i.mc_samples = samples;
        i.stream = rs;
        return i;
    }
};

inline constexpr int kTensorGaussHermiteMaxVars = 4;

/// rho_0(x,x';beta) = rho_fp * E exp{-beta sum_i w_i V[x_r(theta_i) +
/// sigma sum_k a_k Lambda~_k(theta_i)]}, a ~ N(0, I_{n_nu}).
inline double short_time_kernel(const SchemeSpec& s, const PotentialSpec& V, double x,
                                double xp, const PhysicalParams& p,
                                const Integration& integration = {}) {
    p.validate();
    const double sigma = p.sigma();
    const int nq = static_cast<int>(s.n_q());
    const int nv = static_cast<int>(s.n_nu());
    std::vector<double> xr(nq);
    for (int i = 0; i < nq; ++i) xr[i] = x + (xp - x) * s.quadrature.knots[i];

    auto boltzmann = [&](const std::vector<double>& a) {
        double action = 0.0;
        for (int i = 0; i < nq; ++i) {
            double arg = xr[i];
            for (int k = 0; k < nv; ++k) arg += sigma * a[k] * s.bridge.values[k][i];
            double v = V(arg);
            if (!std::isfinite(v)) throw InputError("short_time_kernel: non-finite potential");
            action += s.quadrature.weights[i] * v;
        }
        return std::exp(-p.beta * action);
    };

    double expectation = 0.0;
    if (nv == 0) {
        expectation = boltzmann({});
    } else if (integration.kind == Integration::Kind::GaussHermite) {
        if (nv > kTensorGaussHermiteMaxVars)
            throw CapacityError("short_time_kernel: tensor Gauss-Hermite capped at 4 variables");
        GaussHermiteRule rule = gauss_hermite(integration.gh_level);
        std::vector<double> a(nv, 0.0);
        auto rec = [&](auto&& self, int k, double wprod) -> void {
            if (k == nv) {
                expectation += wprod * boltzmann(a);
                return;
            }
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                a[k] = rule.nodes[q];
                self(self, k + 1, wprod * rule.weights[q]);
            }
        };
        rec(rec, 0, 1.0);
    } else {
        NormalGenerator gen(integration.stream);
        detail::KahanAccumulator acc;
        std::vector<double> a(nv);
        for (int it = 0; it < integration.mc_samples; ++it) {
            for (int k = 0; k < nv; ++k) a[k] = gen();
            acc.add(boltzmann(a));
        }
        expectation = acc.sum / integration.mc_samples;
    }
    return free_particle_kernel(x, xp, p) * expectation;
}

// ---------------------------------------------------------------------------
// Lie-Trotter composition on a spatial grid.
// ---------------------------------------------------------------------------

struct SpatialGrid {
    double x_min = -8.0;
    double x_max = 8.0;
    int size = 512;

    void validate() const {
        if (size < 3 || !(x_max > x_min)) throw InputError("spatial grid: need size >= 3, x_max > x_min");
    }
    double step() const { return (x_max - x_min) / (size - 1); }
    double point(int i) const { return x_min + i * step(); }
    /// Trapezoid composition weights (h, halved at the ends).
    std::vector<double> weights() const {
        std::vector<double> w(size, step());
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    }
};

struct TrotterResult {
    Eigen::MatrixXd rho;          // N x N approximation of rho_n at full beta
    SpatialGrid grid;
    int factors = 0;              // n + 1
    bool boundary_warning = false;
    double domination_max = 0.0;  // max rho_n / (C(beta) rho_fp), should be <= 1
    double weight_sum = 1.0;      // the constant c in C(beta) = exp(-c beta V0)

    /// Evaluates off-node points by tensor 4-point Lagrange (cubic)
    /// interpolation, O(h^4); node values are reproduced exactly.
    double at(double x, double xp) const {
        const double h = grid.step();
        auto stencil = [&](double v, std::array<double, 4>& w) {
            double t = (v - grid.x_min) / h;
            if (t < -1e-9 || t > grid.size - 1 + 1e-9)
                throw InputError("TrotterResult::at: point off grid");
            int i0 = std::clamp(static_cast<int>(std::floor(t)) - 1, 0, grid.size - 4);
            double s = t - i0;
            for (int a = 0; a < 4; ++a) {
                w[a] = 1.0;
                for (int b = 0; b < 4; ++b)
                    if (b != a) w[a] *= (s - b) / (a - b);
            }
            return i0;
        };
        std::array<double, 4> wx, wy;
        int ix = stencil(x, wx), iy = stencil(xp, wy);
        double out = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) out += wx[a] * wy[b] * rho(ix + a, iy + b);
        return out;
    }
};

/// Composes n+1 short-time factors at inverse temperature beta/(n+1) by grid
/// quadrature. The n+1 matrix products are evaluated by binary powering of the
/// symmetrized factor D^{1/2} K D^{1/2}.
inline TrotterResult trotter_compose(const SchemeSpec& s, const PotentialSpec& V,
                                     const PhysicalParams& p, int n, const SpatialGrid& grid,
                                     const Integration& integration = {}) {
    if (n < 1) throw InputError("trotter_compose: n must be >= 1");
    grid.validate();
    p.validate();
    const int N = grid.size;
    const PhysicalParams step_params = p.with_beta(p.beta / (n + 1));

    Eigen::MatrixXd kernel(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j) {
            double v = short_time_kernel(s, V, grid.point(i), grid.point(j), step_params,
                                         integration);
            kernel(i, j) = v;
            kernel(j, i) = v;
        }

    std::vector<double> w = grid.weights();
    Eigen::VectorXd sqrt_w(N), inv_sqrt_w(N);
    for (int i = 0; i < N; ++i) {
        sqrt_w(i) = std::sqrt(w[i]);
        inv_sqrt_w(i) = 1.0 / sqrt_w(i);
    }
    Eigen::MatrixXd sym = sqrt_w.asDiagonal() * kernel * sqrt_w.asDiagonal();

    // sym^(n+1) by binary powering
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(N, N);
    Eigen::MatrixXd base = sym;
    int e = n + 1;
    bool first = true;
    while (e > 0) {
        if (e & 1) {
            result = first ? base : Eigen::MatrixXd(result * base);
            first = false;
        }
        e >>= 1;
        if (e) base = Eigen::MatrixXd(base * base);
    }

    TrotterResult out;
    out.grid = grid;
    out.factors = n + 1;
    out.rho = inv_sqrt_w.asDiagonal() * result * inv_sqrt_w.asDiagonal();

    double c = 0.0;
    for (double wi : s.quadrature.weights) c += wi;
    out.weight_sum = c;
    const double cap = std::exp(-c * p.beta * V.lower_bound);
    double worst = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            double fp = free_particle_kernel(grid.point(i), grid.point(j), p);
            worst = std::max(worst, out.rho(i, j) / (cap * fp));
        }
    out.domination_max = worst;

    // boundary truncation heuristic: full-beta Gaussian mass beyond half-width
    double half = 0.5 * (grid.x_max - grid.x_min);
    out.boundary_warning = std::exp(-half * half / (2.0 * p.beta)) > 1e-10;
    return out;
}

// ---------------------------------------------------------------------------
// Standard discretization Monte Carlo estimator.
// ---------------------------------------------------------------------------

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// MC estimate of rho_n / rho_fp using Levy-Ciesielski bridge paths of level k
/// evaluated on the composite measure omega_k, with the scheme's tail-field
/// correction when n_nu > 0.
inline McEstimate standard_discretization_mc(const SchemeSpec& s, const PotentialSpec& V,
                                             double x, double xp, const PhysicalParams& p,
                                             int k, int samples, RandomStream stream) {
    if (k < 1) throw InputError("standard_discretization_mc: k must be >= 1");
    if (samples < 1) throw InputError("standard_discretization_mc: samples must be >= 1");
    p.validate();
    s.validate();
    const double sigma = p.sigma();
    const QuadratureRule omega = composite_measure(s, k);
    const int nv = static_cast<int>(s.n_nu());
    const int cells = 1 << k;

    // precompute tail-field basis values at the composite knots
    // tail(u) = sum_l b_{l,cell(u)} G_{l,cell(u)}(u)
    std::vector<int> cell_of(omega.size());
    std::vector<std::vector<double>> g_at(nv, std::vector<double>(omega.size()));
    for (std::size_t q = 0; q < omega.size(); ++q) {
        int cell = std::min(static_cast<int>(std::floor(std::ldexp(omega.knots[q], k))) + 1, cells);
        cell_of[q] = cell;
        for (int l = 1; l <= nv; ++l) g_at[l - 1][q] = tail_field(s, k, l, cell, omega.knots[q]);
    }

    NormalGenerator gen(stream);
    detail::KahanAccumulator acc, acc2;
    std::vector<std::vector<double>> a(k + 1);
    for (int l = 1; l <= k; ++l) a[l].resize((1 << (l - 1)) + 1, 0.0);
    std::vector<std::vector<double>> b(nv, std::vector<double>(cells));

    for (int it = 0; it < samples; ++it) {
        for (int l = 1; l <= k; ++l)
            for (int j = 1; j <= (1 << (l - 1)); ++j) a[l][j] = gen();
        for (int l = 0; l < nv; ++l)
            for (int j = 0; j < cells; ++j) b[l][j] = gen();
        double action = 0.0;
        for (std::size_t q = 0; q < omega.size(); ++q) {
            double u = omega.knots[q];
            double path = levy_ciesielski_eval(a, k, u);
            for (int l = 0; l < nv; ++l) path += b[l][cell_of[q] - 1] * g_at[l][q];
            double arg = x + (xp - x) * u + sigma * path;
            double v = V(arg);
            if (!std::isfinite(v))
                throw InputError("standard_discretization_mc: non-finite potential");
            action += omega.weights[q] * v;
        }
        double val = std::exp(-p.beta * action);
        acc.add(val);
        acc2.add(val * val);
    }
    McEstimate est;
    est.mean = acc.sum / samples;
    double var = std::max(0.0, acc2.sum / samples - est.mean * est.mean);
    est.stderr_ = std::sqrt(var / samples);
    return est;
}

// ---------------------------------------------------------------------------
// Empirical convergence order.
// ---------------------------------------------------------------------------

struct OrderFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    int points_used = 0;
    std::vector<int> excluded;  // n values with non-positive error
};

/// Least-squares slope of log(error) against log(n+1).
inline OrderFit estimate_convergence_order(const std::vector<std::pair<int, double>>& errors) {
    std::vector<double> xs, ys;
    OrderFit fit;
    for (const auto& [n, err] : errors) {
        if (!(err > 0.0)) {
            fit.excluded.push_back(n);
            continue;
        }
        xs.push_back(std::log(static_cast<double>(n + 1)));
        ys.push_back(std::log(err));
    }
    const int m = static_cast<int>(xs.size());
    if (m < 4) throw InputError("estimate_convergence_order: need >= 4 positive error points");
    double mx = 0, my = 0;
    for (int i = 0; i < m; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0;
    for (int i = 0; i < m; ++i) {
        double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += r * r;
    }
    fit.slope_stderr = m > 2 ? std::sqrt(ss_res / (m - 2) / sxx) : 0.0;
    fit.points_used = m;
    return fit;
}

}  // namespace fk

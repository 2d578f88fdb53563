// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/errors.hpp"
#include "fk/rational.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fk {

// Index convention for covariance evaluations: 0 refers to the distinguished
// endpoint u = 1, and 1..n_q refer to the quadrature knots in order.
constexpr int kEndpointIndex = 0;

enum class Interpolation { PiecewiseLinear, UserTable };

/// Normalized quadrature rule on [0,1]: strictly increasing knots, non-negative
/// weights summing to one. Exact rational mirrors are kept when every entry is
/// rational, which enables exact polynomial comparisons downstream.
struct QuadratureRule {
    std::vector<double> knots;
    std::vector<double> weights;
    std::vector<Rational> knots_exact;    // empty unless the rule is exact
    std::vector<Rational> weights_exact;

    std::size_t size() const { return knots.size(); }
    bool exact() const { return knots_exact.size() == knots.size() && !knots.empty(); }

    void validate(double tol = 1e-12) const {
        if (knots.size() != weights.size())
            throw InputError("quadrature: knot/weight count mismatch");
        if (knots.empty()) throw InputError("quadrature: empty rule");
        for (std::size_t i = 0; i < knots.size(); ++i) {
            if (knots[i] < 0.0 || knots[i] > 1.0)
                throw InputError("quadrature: knot outside [0,1]");
            if (i > 0 && !(knots[i] > knots[i - 1]))
                throw InputError("quadrature: knots not strictly increasing");
            if (weights[i] < 0.0) throw InputError("quadrature: negative weight");
        }
        if (exact()) {
            Rational s = 0;
            for (const auto& w : weights_exact) s += w;
            if (s != 1) throw InputError("quadrature: exact weights do not sum to 1");
        } else {
            double s = 0;
            for (double w : weights) s += w;
            if (std::fabs(s - 1.0) > tol)
                throw InputError("quadrature: weights do not sum to 1");
        }
    }
};

/// Bridge-basis values at the quadrature knots: values[k][i] is the k-th basis
/// function at knot i. The implied continuous functions vanish at u=0 and u=1;
/// the interpolation tag describes the extension between knots (used only by
/// path sampling).
struct BridgeBasis {
    std::vector<std::vector<double>> values;  // n_nu rows, n_q columns
    std::vector<std::vector<Rational>> values_exact;
    Interpolation interpolation = Interpolation::PiecewiseLinear;

    std::size_t count() const { return values.size(); }
    bool exact() const { return values_exact.size() == values.size(); }

    void validate(std::size_t n_q) const {
        for (const auto& row : values) {
            if (row.size() != n_q) throw InputError("bridge: row length != knot count");
            for (double v : row)
                if (!std::isfinite(v)) throw InputError("bridge: non-finite entry");
        }
    }
};

struct SchemeSpec {
    std::string name;
    QuadratureRule quadrature;
    BridgeBasis bridge;

    std::size_t n_q() const { return quadrature.size(); }
    std::size_t n_nu() const { return bridge.count(); }
    bool exact() const {
        return quadrature.exact() && (bridge.count() == 0 || bridge.exact());
    }

    void validate() const {
        quadrature.validate();
        bridge.validate(quadrature.size());
    }
};

inline SchemeSpec make_scheme(std::string name, std::vector<Rational> knots,
                              std::vector<Rational> weights,
                              std::vector<std::vector<Rational>> bridge = {}) {
    SchemeSpec s;
    s.name = std::move(name);
    s.quadrature.knots_exact = std::move(knots);
    s.quadrature.weights_exact = std::move(weights);
    for (const auto& k : s.quadrature.knots_exact) s.quadrature.knots.push_back(to_double(k));
    for (const auto& w : s.quadrature.weights_exact) s.quadrature.weights.push_back(to_double(w));
    s.bridge.values_exact = std::move(bridge);
    for (const auto& row : s.bridge.values_exact) {
        std::vector<double> d;
        for (const auto& v : row) d.push_back(to_double(v));
        s.bridge.values.push_back(std::move(d));
    }
    s.validate();
    return s;
}

namespace builtin {

inline SchemeSpec trapezoid() {
    return make_scheme("trapezoid", {0, 1}, {Rational(1, 2), Rational(1, 2)});
}

inline SchemeSpec midpoint() {
    return make_scheme("midpoint", {Rational(1, 2)}, {1});
}

inline SchemeSpec midpoint_bridge() {
    return make_scheme("midpoint-bridge", {Rational(1, 2)}, {1}, {{Rational(1, 2)}});
}

}  // namespace builtin

/// Brownian-motion covariance gamma(u, tau) = min(u, tau).
inline double eval_bm_covariance(double u, double tau) {
    if (u < 0.0 || u > 1.0 || tau < 0.0 || tau > 1.0)
        throw InputError("eval_bm_covariance: arguments must lie in [0,1]");
    return std::min(u, tau);
}

/// Scheme covariance at knot-or-endpoint indices:
/// gamma~(u_a, u_b) = u_a u_b + sum_k L[k][a] L[k][b], with the bridge terms
/// vanishing at the endpoint index.
inline Rational eval_scheme_covariance_exact(const SchemeSpec& s, int a, int b) {
    if (!s.exact()) throw InputError("exact covariance requested for inexact scheme");
    auto knot = [&](int i) -> Rational {
        if (i == kEndpointIndex) return 1;
        if (i < 1 || i > static_cast<int>(s.n_q()))
            throw InputError("eval_scheme_covariance: index out of range");
        return s.quadrature.knots_exact[i - 1];
    };
    Rational c = knot(a) * knot(b);
    if (a != kEndpointIndex && b != kEndpointIndex)
        for (const auto& row : s.bridge.values_exact) c += row[a - 1] * row[b - 1];
    return c;
}

inline double eval_scheme_covariance(const SchemeSpec& s, int a, int b) {
    auto knot = [&](int i) -> double {
        if (i == kEndpointIndex) return 1.0;
        if (i < 1 || i > static_cast<int>(s.n_q()))
            throw InputError("eval_scheme_covariance: index out of range");
        return s.quadrature.knots[i - 1];
    };
    double c = knot(a) * knot(b);
    if (a != kEndpointIndex && b != kEndpointIndex)
        for (const auto& row : s.bridge.values) c += row[a - 1] * row[b - 1];
    return c;
}

/// Either the analytic Brownian kernel or a scheme's discrete kernel.
struct CovarianceKernel {
    std::optional<SchemeSpec> scheme;  // nullopt = Brownian motion

    static CovarianceKernel brownian() { return {}; }
    static CovarianceKernel of(SchemeSpec s) { return {std::move(s)}; }
    bool is_brownian() const { return !scheme.has_value(); }
};

struct SymmetryReport {
    bool quadrature_symmetric = false;  // knot set invariant under u -> 1-u
    bool bridge_symmetric = false;      // covariance reversal invariance
    double max_quadrature_deviation = 0.0;
    double max_bridge_deviation = 0.0;
    bool pass() const { return quadrature_symmetric && bridge_symmetric; }
};

/// Checks the time-reversal symmetry requirements: the quadrature measure must
/// be symmetric about 1/2 with matching weights, and the bridge part of the
/// covariance must be invariant under u -> 1-u on the knot set.
inline SymmetryReport check_scheme_symmetry(const SchemeSpec& s, double tol = 1e-12) {
    s.validate();
    SymmetryReport rep;
    const auto& th = s.quadrature.knots;
    const auto& w = s.quadrature.weights;
    const int nq = static_cast<int>(th.size());

    // mirror[i] = index of the knot closest to 1 - th[i]
    std::vector<int> mirror(nq, -1);
    double dev_q = 0.0;
    bool ok_q = true;
    for (int i = 0; i < nq; ++i) {
        double target = 1.0 - th[i];
        int best = -1;
        double best_dist = 1e300;
        for (int j = 0; j < nq; ++j) {
            double dist = std::fabs(th[j] - target);
            if (dist < best_dist) { best_dist = dist; best = j; }
        }
        mirror[i] = best;
        double dev = std::max(best_dist, std::fabs(w[i] - w[best]));
        dev_q = std::max(dev_q, dev);
        if (dev > tol) ok_q = false;
    }
    rep.quadrature_symmetric = ok_q;
    rep.max_quadrature_deviation = dev_q;

    double dev_b = 0.0;
    if (ok_q) {
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nq; ++j) {
                double lhs = eval_scheme_covariance(s, i + 1, j + 1) - th[i] * th[j];
                double rhs = eval_scheme_covariance(s, mirror[i] + 1, mirror[j] + 1) -
                             th[mirror[i]] * th[mirror[j]];
                dev_b = std::max(dev_b, std::fabs(lhs - rhs));
            }
        rep.bridge_symmetric = dev_b <= tol;
    }
    rep.max_bridge_deviation = dev_b;
    return rep;
}

/// Full covariance matrix over {endpoint u=1} + knots (indices 0..n_q).
inline Eigen::MatrixXd covariance_matrix(const SchemeSpec& s) {
    const int n = static_cast<int>(s.n_q()) + 1;
    Eigen::MatrixXd m(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) m(a, b) = eval_scheme_covariance(s, a, b);
    return m;
}

struct PsdReport {
    bool psd = false;
    double smallest_eigenvalue = 0.0;
};

inline PsdReport psd_check_matrix(const Eigen::MatrixXd& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) throw InputError("psd_check: matrix not square");
    if (!m.isApprox(m.transpose(), 1e-12)) throw InputError("psd_check: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    return {lmin >= -tol, lmin};
}

inline PsdReport psd_check(const SchemeSpec& s, double tol = 1e-12) {
    return psd_check_matrix(covariance_matrix(s), tol);
}

}  // namespace fk

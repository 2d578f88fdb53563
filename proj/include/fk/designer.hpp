// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/moments.hpp"
#include "fk/polynomial.hpp"
#include "fk/sampling.hpp"
#include "fk/scheme.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fk {

/// Concatenated coefficient differences f~_{n,d} - f_{n,d} over all (n,d)
/// with n + d <= nu, in deterministic order: by nu' ascending, n descending,
/// monomials lexicographic over the union of both supports.
inline std::vector<double> residual_vector(const SchemeSpec& s, int nu,
                                           int cap = kDefaultOrderCap) {
    std::vector<double> out;
    for (int total = 0; total <= nu; ++total)
        for (int n = total; n >= 0; --n) {
            const int d = total - n;
            DoublePolynomial lhs = scheme_moment_polynomial(s, n, d, cap);
            DoublePolynomial rhs = to_double_poly(bm_moment_polynomial(n, d, cap));
            std::set<std::vector<int>> keys;
            for (const auto& [e, c] : lhs.terms()) keys.insert(e);
            for (const auto& [e, c] : rhs.terms()) keys.insert(e);
            for (const auto& e : keys)
                out.push_back(lhs.coefficient(e) - rhs.coefficient(e));
        }
    return out;
}

/// Search space for an order-nu scheme: knots/weights/bridge values with the
/// time-reversal symmetry built into the coordinate chart (mirrored knots
/// share weights; bridge functions alternate symmetric/antisymmetric parity).
struct DesignProblem {
    int n_q = 1;
    int n_nu = 0;
    int target_order = 2;
    std::optional<std::vector<double>> pinned_knots;  // full knot list, symmetric

    void validate() const {
        if (n_q < 1 || n_nu < 0 || target_order < 1)
            throw InputError("design problem: need n_q >= 1, n_nu >= 0, order >= 1");
        if (pinned_knots && static_cast<int>(pinned_knots->size()) != n_q)
            throw InputError("design problem: pinned knot count != n_q");
    }
};

struct StartLog {
    int start = 0;
    int iterations = 0;
    double residual = 0.0;
};

struct DesignResult {
    SchemeSpec scheme;
    double residual_norm = 0.0;  // recomputed from the returned scheme
    bool certified = false;
    int certified_order = 0;
    int best_start = -1;
    std::vector<StartLog> log;
};

namespace detail {

// Symmetry-reduced parameter chart.
struct DesignChart {
    DesignProblem problem;
    int n_free_knots = 0;    // knots in (1/2, 1], mirrored automatically
    int n_free_weights = 0;  // one per mirror pair (incl. middle)
    std::vector<int> bridge_free_per_fn;

    explicit DesignChart(const DesignProblem& pb) : problem(pb) {
        problem.validate();
        const int nq = pb.n_q;
        if (!pb.pinned_knots) n_free_knots = nq / 2;
        n_free_weights = nq > 1 ? (nq + 1) / 2 : 0;
        for (int l = 1; l <= pb.n_nu; ++l) {
            const bool symmetric = (l % 2 == 1);
            // symmetric: free at middle and upper half; antisymmetric: middle
            // is pinned to 0
            int upper = nq / 2;
            int middle = nq % 2;
            bridge_free_per_fn.push_back(upper + (symmetric ? middle : 0));
        }
    }

    int dimension() const {
        int dim = n_free_knots + n_free_weights;
        for (int c : bridge_free_per_fn) dim += c;
        return dim;
    }

    // Builds a valid symmetric scheme from raw parameters; projections keep
    // knots in bounds and weights non-negative and normalized.
    SchemeSpec build(const std::vector<double>& params) const {
        const int nq = problem.n_q;
        std::size_t p = 0;
        std::vector<double> knots(nq);
        if (problem.pinned_knots) {
            knots = *problem.pinned_knots;
        } else {
            std::vector<double> upper(n_free_knots);
            for (int i = 0; i < n_free_knots; ++i) {
                double t = std::clamp(params[p++], 0.5 + 1e-6, 1.0);
                upper[i] = t;
            }
            std::sort(upper.begin(), upper.end());
            for (int i = 0; i < n_free_knots; ++i) {
                knots[nq - n_free_knots + i] = upper[i];
                knots[n_free_knots - 1 - i] = 1.0 - upper[i];
            }
            if (nq % 2 == 1) knots[nq / 2] = 0.5;
        }
        std::vector<double> weights(nq, 1.0);
        if (n_free_weights > 0) {
            double sum = 0.0;
            const int pairs = nq / 2;
            for (int i = 0; i < n_free_weights; ++i) {
                double w = std::fabs(params[p++]);
                if (i < pairs) {
                    weights[i] = w;
                    weights[nq - 1 - i] = w;
                    sum += 2.0 * w;
                } else {
                    weights[i] = w;  // middle knot
                    sum += w;
                }
            }
            if (!(sum > 0.0)) throw InputError("design chart: degenerate weights");
            for (double& w : weights) w /= sum;
        }
        std::vector<std::vector<double>> bridge;
        for (int l = 1; l <= problem.n_nu; ++l) {
            const bool symmetric = (l % 2 == 1);
            std::vector<double> row(nq, 0.0);
            const int upper = nq / 2;
            for (int i = 0; i < upper; ++i) {
                double v = params[p++];
                row[nq - 1 - i] = v;
                row[i] = symmetric ? v : -v;
            }
            if (nq % 2 == 1 && symmetric) row[nq / 2] = params[p++];
            bridge.push_back(std::move(row));
        }
        SchemeSpec s;
        s.name = "designed";
        s.quadrature.knots = std::move(knots);
        s.quadrature.weights = std::move(weights);
        s.bridge.values = std::move(bridge);
        s.validate();
        return s;
    }
};

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct LmOutcome {
    std::vector<double> params;
    double residual = 0.0;
    int iterations = 0;
};

// Damped least squares with central-difference Jacobian. Parameter vectors
// that fail to produce a valid scheme are treated as infinite cost.
template <typename ResidualFn>
LmOutcome levenberg_marquardt(const ResidualFn& fn, std::vector<double> params,
                              int max_iterations = 200, double tol = 1e-14) {
    auto safe_eval = [&](const std::vector<double>& x,
                         std::vector<double>& out) -> bool {
        try {
            out = fn(x);
            return true;
        } catch (const InputError&) {
            return false;
        }
    };
    LmOutcome best;
    best.params = params;
    std::vector<double> r;
    if (!safe_eval(params, r)) {
        best.residual = std::numeric_limits<double>::infinity();
        return best;
    }
    best.residual = norm2(r);
    if (params.empty()) return best;

    const int np = static_cast<int>(params.size());
    double lambda = 1e-3;
    for (int it = 0; it < max_iterations; ++it) {
        best.iterations = it + 1;
        if (best.residual < tol) break;
        const int nr = static_cast<int>(r.size());
        Eigen::MatrixXd jac(nr, np);
        bool jac_ok = true;
        for (int c = 0; c < np && jac_ok; ++c) {
            double h = 1e-6 * std::max(1.0, std::fabs(params[c]));
            std::vector<double> xp = params, xm = params, rp, rm;
            xp[c] += h;
            xm[c] -= h;
            if (!safe_eval(xp, rp) || !safe_eval(xm, rm)) { jac_ok = false; break; }
            for (int row = 0; row < nr; ++row) jac(row, c) = (rp[row] - rm[row]) / (2.0 * h);
        }
        if (!jac_ok) break;
        Eigen::VectorXd rv(nr);
        for (int row = 0; row < nr; ++row) rv(row) = r[row];
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * rv;

        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (int c = 0; c < np; ++c)
                damped(c, c) += lambda * std::max(jtj(c, c), 1e-12);
            Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
            std::vector<double> candidate = params;
            for (int c = 0; c < np; ++c) candidate[c] += delta(c);
            std::vector<double> rc;
            if (safe_eval(candidate, rc) && norm2(rc) < best.residual) {
                params = candidate;
                r = rc;
                best.params = params;
                best.residual = norm2(r);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) break;
    }
    return best;
}

// Attempts to replace every scheme entry with a small rational; kept only if
// the rationalized scheme satisfies the order conditions exactly.
inline std::optional<SchemeSpec> rationalize_scheme(const SchemeSpec& s, int order,
                                                    long long max_den = 1000000) {
    std::vector<Rational> knots, weights;
    for (double k : s.quadrature.knots) {
        auto r = rationalize(k, max_den);
        if (!r) return std::nullopt;
        knots.push_back(*r);
    }
    Rational wsum = 0;
    for (double w : s.quadrature.weights) {
        auto r = rationalize(w, max_den);
        if (!r) return std::nullopt;
        weights.push_back(*r);
        wsum += *r;
    }
    if (wsum != 1) return std::nullopt;
    std::vector<std::vector<Rational>> bridge;
    for (const auto& row : s.bridge.values) {
        std::vector<Rational> er;
        for (double v : row) {
            auto r = rationalize(v, max_den);
            if (!r) return std::nullopt;
            er.push_back(*r);
        }
        bridge.push_back(std::move(er));
    }
    SchemeSpec snapped;
    try {
        snapped = make_scheme(s.name, knots, weights, bridge);
    } catch (const InputError&) {
        return std::nullopt;
    }
    CertificationReport rep = certify_order(snapped, order);
    if (rep.certified_order < order) return std::nullopt;
    return snapped;
}

}  // namespace detail

/// Multi-start damped least-squares search for a scheme meeting the order-nu
/// polynomial conditions. A result is certified only when the recomputed
/// residual is below tol and certify_order independently confirms the order
/// (exactly, when the parameters rationalize).
inline DesignResult design_scheme(const DesignProblem& problem, int starts, RandomStream stream,
                                  double tol = 1e-10) {
    problem.validate();
    if (starts < 1) throw InputError("design_scheme: starts must be >= 1");
    detail::DesignChart chart(problem);
    const int nu = problem.target_order;
    auto residual_fn = [&](const std::vector<double>& params) {
        return residual_vector(chart.build(params), nu);
    };

    DesignResult result;
    double best_residual = std::numeric_limits<double>::infinity();
    detail::LmOutcome best_outcome;
    const double golden = 0.6180339887498949;
    for (int start = 0; start < starts; ++start) {
        NormalGenerator gen({stream.seed, stream.stream + static_cast<std::uint64_t>(start)});
        std::vector<double> init(chart.dimension());
        std::size_t p = 0;
        for (int i = 0; i < chart.n_free_knots; ++i) {
            double frac = std::fmod(golden * (start * chart.n_free_knots + i + 1), 1.0);
            init[p++] = 0.5 + 0.5 * frac;  // low-discrepancy knots in (1/2, 1)
        }
        for (int i = 0; i < chart.n_free_weights; ++i) init[p++] = 1.0 + 0.2 * std::fabs(gen());
        while (p < init.size()) init[p++] = 0.25 * gen();

        detail::LmOutcome outcome = detail::levenberg_marquardt(residual_fn, init);
        result.log.push_back({start, outcome.iterations, outcome.residual});
        if (outcome.residual < best_residual) {
            best_residual = outcome.residual;
            best_outcome = outcome;
            result.best_start = start;
        }
    }

    SchemeSpec scheme = chart.build(best_outcome.params);
    result.residual_norm = detail::norm2(residual_vector(scheme, nu));
    result.certified = false;
    if (result.residual_norm < tol) {
        if (auto snapped = detail::rationalize_scheme(scheme, nu)) {
            scheme = *snapped;
            scheme.name = "designed";
            result.certified = true;
            result.certified_order = nu;
            result.residual_norm = detail::norm2(residual_vector(scheme, nu));
        } else {
            CertificationReport rep = certify_order(scheme, nu, tol);
            result.certified = rep.certified_order >= nu;
            result.certified_order = rep.certified_order;
        }
    } else {
        CertificationReport rep = certify_order(scheme, nu, scheme.exact() ? 0.0 : tol);
        result.certified_order = rep.certified_order;
    }
    result.scheme = std::move(scheme);
    return result;
}

}  // namespace fk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/diophantine.hpp"
#include "fk/errors.hpp"
#include "fk/moments.hpp"
#include "fk/scheme.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

namespace fk {

// Independent brute-force evaluator of the generalized moment conditions: the
// Isserlis (Wick) theorem summed over perfect pairings, with the remaining
// time integrals done exactly over order simplices. This route never touches
// the moment-polynomial machinery, so agreement between the two is a real
// cross-check of the covariance reformulation.

inline constexpr int kIsserlisDegreeCap = 10;
inline constexpr int kOracleMuCap = 4;

namespace detail {

// Sum over perfect pairings of variables 0..2m-1; visit receives the pairing
// as a flat list of index pairs.
template <typename Visit>
void for_each_pairing(std::vector<int>& slots, std::vector<std::pair<int, int>>& acc,
                      const Visit& visit) {
    if (slots.empty()) {
        visit(acc);
        return;
    }
    int first = slots[0];
    for (std::size_t k = 1; k < slots.size(); ++k) {
        int partner = slots[k];
        std::vector<int> rest;
        rest.reserve(slots.size() - 2);
        for (std::size_t t = 1; t < slots.size(); ++t)
            if (t != k) rest.push_back(slots[t]);
        acc.push_back({first, partner});
        for_each_pairing(rest, acc, visit);
        acc.pop_back();
    }
}

}  // namespace detail

/// E[prod_i X_i^{m_i}] for centered jointly Gaussian X with the given
/// covariance. `pairing_count`, when provided, receives the number of perfect
/// pairings visited ((2m-1)!! for total degree 2m).
template <typename T>
T isserlis(const std::vector<std::vector<T>>& cov, const std::vector<int>& multiplicity,
           std::uint64_t* pairing_count = nullptr) {
    if (cov.size() != multiplicity.size())
        throw InputError("isserlis: covariance/multiplicity size mismatch");
    for (std::size_t i = 0; i < cov.size(); ++i)
        if (cov[i].size() != cov.size()) throw InputError("isserlis: covariance not square");
    int total = std::accumulate(multiplicity.begin(), multiplicity.end(), 0);
    if (pairing_count) *pairing_count = 0;
    if (total % 2 != 0) return T(0);  // odd Gaussian moments vanish
    if (total > kIsserlisDegreeCap)
        throw CapacityError("isserlis: total degree exceeds cap");
    std::vector<int> slots;
    for (std::size_t i = 0; i < multiplicity.size(); ++i) {
        if (multiplicity[i] < 0) throw InputError("isserlis: negative multiplicity");
        for (int c = 0; c < multiplicity[i]; ++c) slots.push_back(static_cast<int>(i));
    }
    T sum(0);
    std::vector<std::pair<int, int>> acc;
    detail::for_each_pairing(slots, acc, [&](const std::vector<std::pair<int, int>>& pairing) {
        T prod(1);
        for (const auto& [a, b] : pairing) prod *= cov[a][b];
        sum += prod;
        if (pairing_count) ++*pairing_count;
    });
    return sum;
}

namespace detail {

// Integration variables for the M_k factors of zeta: one fresh u-variable of
// power k per factor (position p >= 3 in the tuple carries power p-2).
inline std::vector<int> moment_factor_powers(const DiophantineIndex& zeta) {
    std::vector<int> powers;
    for (std::size_t k = 2; k < zeta.j.size(); ++k)
        for (int c = 0; c < zeta.j[k]; ++c) powers.push_back(static_cast<int>(k - 1));
    return powers;
}

}  // namespace detail

/// Direct Brownian evaluation of E[B_1^{j1} (M_1)^{j3} ... (M_{2mu-2})^{j_{2mu}}]:
/// Isserlis with covariance min(.,.) on each order simplex, integrated exactly.
inline MomentValue bm_generalized_moment_direct(const DiophantineIndex& zeta) {
    if (!zeta.valid()) throw InputError("bm_generalized_moment_direct: invalid index");
    if (zeta.mu > kOracleMuCap)
        throw CapacityError("bm_generalized_moment_direct: mu exceeds oracle cap");
    const std::vector<int> powers = detail::moment_factor_powers(zeta);
    const int m = static_cast<int>(powers.size());
    const int total = zeta.j[0] + std::accumulate(powers.begin(), powers.end(), 0);
    if (total % 2 != 0) return MomentValue::of(Rational(0));

    // expanded Gaussian variable list: j1 copies of B_1, then powers[t] copies
    // of B_{u_{t+1}} for each factor
    std::vector<int> point_of_slot;  // 0 = endpoint, 1..m = u-variables
    for (int c = 0; c < zeta.j[0]; ++c) point_of_slot.push_back(0);
    for (int t = 0; t < m; ++t)
        for (int c = 0; c < powers[t]; ++c) point_of_slot.push_back(t + 1);
    if (static_cast<int>(point_of_slot.size()) > kIsserlisDegreeCap)
        throw CapacityError("bm_generalized_moment_direct: degree exceeds cap");

    std::vector<int> slots(point_of_slot.size());
    std::iota(slots.begin(), slots.end(), 0);
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 1);
    std::vector<int> rank(m + 1, 0);

    Rational total_value = 0;
    auto integrate_over_simplices = [&](const std::vector<std::pair<int, int>>& pairing) {
        // sum over order simplices of the pairing's min-product monomial
        do {
            for (int r = 0; r < m; ++r) rank[perm[r]] = r;
            std::vector<int> g(std::max(m, 1), 0);
            bool nonzero = true;
            for (const auto& [sa, sb] : pairing) {
                int a = point_of_slot[sa], b = point_of_slot[sb];
                if (a == 0 && b == 0) continue;  // min(1,1) = 1
                int v;
                if (a == 0) v = b;
                else if (b == 0) v = a;
                else v = rank[a] < rank[b] ? a : b;
                g[rank[v]] += 1;
            }
            if (nonzero) {
                Rational piece = 1;
                long long acc = 0;
                for (int r = 0; r < m; ++r) {
                    acc += g[r];
                    piece /= Rational(acc + r + 1);
                }
                total_value += piece;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        std::sort(perm.begin(), perm.end());
    };

    if (m == 0) {
        std::vector<std::vector<Rational>> cov(1, std::vector<Rational>(1, 1));
        std::vector<int> mult = {zeta.j[0]};
        return MomentValue::of(isserlis(cov, mult));
    }
    std::vector<std::pair<int, int>> acc;
    detail::for_each_pairing(slots, acc,
                             [&](const std::vector<std::pair<int, int>>& pairing) {
                                 integrate_over_simplices(pairing);
                             });
    return MomentValue::of(total_value);
}

namespace detail {

template <typename T, typename View>
T scheme_moment_direct_impl(const View& view, const DiophantineIndex& zeta) {
    const SchemeSpec& s = view.s;
    const std::vector<int> powers = moment_factor_powers(zeta);
    const int m = static_cast<int>(powers.size());
    const int nq = static_cast<int>(s.n_q());
    T total(0);
    // assign each M~ factor's variable to a knot; endpoint participates as B~_1
    std::vector<int> assign(m, 0);
    auto rec = [&](auto&& self, int slot, T wprod) -> void {
        if (slot == m) {
            std::vector<int> mult;
            std::vector<int> points;  // covariance indices: 0 endpoint, t+1 knots
            mult.push_back(zeta.j[0]);
            points.push_back(kEndpointIndex);
            for (int t = 0; t < m; ++t) {
                mult.push_back(powers[t]);
                points.push_back(assign[t] + 1);
            }
            std::vector<std::vector<T>> cov(points.size(), std::vector<T>(points.size()));
            for (std::size_t a = 0; a < points.size(); ++a)
                for (std::size_t b = 0; b < points.size(); ++b)
                    cov[a][b] = view.cov(points[a], points[b]);
            total += wprod * isserlis(cov, mult);
            return;
        }
        for (int t = 0; t < nq; ++t) {
            assign[slot] = t;
            self(self, slot + 1, wprod * view.weight(t));
        }
    };
    rec(rec, 0, T(1));
    return total;
}

}  // namespace detail

/// Direct scheme-side evaluation of E[B~_1^{j1} (M~_1)^{j3} ...] with
/// M~_k = sum_i w_i (B~_{theta_i})^k, expanded over knot assignments.
inline MomentValue scheme_generalized_moment_direct(const SchemeSpec& s,
                                                    const DiophantineIndex& zeta) {
    if (!zeta.valid()) throw InputError("scheme_generalized_moment_direct: invalid index");
    if (zeta.mu > kOracleMuCap)
        throw CapacityError("scheme_generalized_moment_direct: mu exceeds oracle cap");
    s.validate();
    if (s.exact())
        return MomentValue::of(
            detail::scheme_moment_direct_impl<Rational>(detail::ExactSchemeView{s}, zeta));
    return MomentValue::of(
        detail::scheme_moment_direct_impl<double>(detail::DoubleSchemeView{s}, zeta));
}

struct CrossValidation {
    DiophantineIndex zeta;
    MomentValue direct;
    MomentValue polynomial;
    double diff = 0.0;
    bool exact_equal = false;  // both rational and identical
};

/// Compares the direct Wick evaluation with the polynomial route of
/// generalized_moment_via_polynomial for one index and kernel.
inline CrossValidation cross_validate(const DiophantineIndex& zeta,
                                      const CovarianceKernel& kernel) {
    CrossValidation out;
    out.zeta = zeta;
    out.direct = kernel.is_brownian() ? bm_generalized_moment_direct(zeta)
                                      : scheme_generalized_moment_direct(*kernel.scheme, zeta);
    out.polynomial = generalized_moment_via_polynomial(zeta, kernel);
    if (out.direct.exact && out.polynomial.exact) {
        out.exact_equal = *out.direct.exact == *out.polynomial.exact;
        out.diff = to_double(*out.direct.exact - *out.polynomial.exact);
    } else {
        out.diff = out.direct.value - out.polynomial.value;
    }
    return out;
}

}  // namespace fk

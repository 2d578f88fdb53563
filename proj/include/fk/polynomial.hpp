// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/rational.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace fk {

/// Sparse multivariate polynomial with a fixed variable count.
/// Terms are keyed by exponent vectors in lexicographic order, so iteration
/// and serialization are deterministic.
template <typename Coef>
class Polynomial {
public:
    using Exponents = std::vector<int>;
    using TermMap = std::map<Exponents, Coef>;

    explicit Polynomial(int nvars = 1) : nvars_(nvars) {}

    int nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add_term(const Exponents& e, const Coef& c) {
        if (c == Coef(0)) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == Coef(0)) terms_.erase(it);
        }
    }

    Coef coefficient(const Exponents& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? Coef(0) : it->second;
    }

    int total_degree() const {
        int deg = 0;
        for (const auto& [e, c] : terms_) {
            int d = 0;
            for (int x : e) d += x;
            deg = std::max(deg, d);
        }
        return deg;
    }

    bool is_homogeneous(int degree) const {
        for (const auto& [e, c] : terms_) {
            int d = 0;
            for (int x : e) d += x;
            if (d != degree) return false;
        }
        return true;
    }

    bool operator==(const Polynomial& other) const {
        return nvars_ == other.nvars_ && terms_ == other.terms_;
    }

    /// Restriction that sets trailing variables to zero, reducing the
    /// dimension to new_nvars.
    Polynomial truncate_vars(int new_nvars) const {
        Polynomial out(new_nvars);
        for (const auto& [e, c] : terms_) {
            bool keep = true;
            for (int i = new_nvars; i < nvars_; ++i)
                if (e[i] != 0) { keep = false; break; }
            if (keep) out.add_term(Exponents(e.begin(), e.begin() + new_nvars), c);
        }
        return out;
    }

private:
    int nvars_;
    TermMap terms_;
};

using RationalPolynomial = Polynomial<Rational>;
using DoublePolynomial = Polynomial<double>;

inline double coef_abs(const Rational& r) { return std::fabs(to_double(r)); }
inline double coef_abs(double x) { return std::fabs(x); }

/// Largest |coefficient difference| between two polynomials over the union of
/// their monomials.
template <typename Coef>
double max_coefficient_residual(const Polynomial<Coef>& a, const Polynomial<Coef>& b) {
    double worst = 0.0;
    for (const auto& [e, c] : a.terms())
        worst = std::max(worst, coef_abs(c - b.coefficient(e)));
    for (const auto& [e, c] : b.terms())
        worst = std::max(worst, coef_abs(c - a.coefficient(e)));
    return worst;
}

inline DoublePolynomial to_double_poly(const RationalPolynomial& p) {
    DoublePolynomial out(p.nvars());
    for (const auto& [e, c] : p.terms()) out.add_term(e, to_double(c));
    return out;
}

}  // namespace fk

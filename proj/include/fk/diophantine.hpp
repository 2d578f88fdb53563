// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/errors.hpp"

#include <string>
#include <vector>

namespace fk {

/// Solution zeta = (j_1, ..., j_{2mu}) of sum_k k*j_k = 2*mu. Each index labels
/// one generalized moment condition: B_1^{j1} M_0^{j2} M_1^{j3} ... M_{2mu-2}^{j_{2mu}}.
struct DiophantineIndex {
    int mu = 0;
    std::vector<int> j;  // length 2*mu

    bool valid() const {
        if (mu < 1 || j.size() != static_cast<std::size_t>(2 * mu)) return false;
        long long s = 0;
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (j[k] < 0) return false;
            s += static_cast<long long>(k + 1) * j[k];
        }
        return s == 2LL * mu;
    }

    std::string str() const {
        std::string out = "(";
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (k) out += ",";
            out += std::to_string(j[k]);
        }
        return out + ")";
    }
};

/// d(zeta) = j_3 + ... + j_{2mu} and n(zeta) = mu - j_2 - d(zeta).
struct IndexStats {
    int d = 0;
    int n = 0;
};

inline IndexStats index_stats(const DiophantineIndex& zeta) {
    if (!zeta.valid()) throw InputError("index_stats: invalid Diophantine index");
    IndexStats st;
    for (std::size_t k = 2; k < zeta.j.size(); ++k) st.d += zeta.j[k];
    st.n = zeta.mu - zeta.j[1] - st.d;
    // identity 2n = j1 + j3 + 2 j4 + ... + (2mu-2) j_{2mu}
    int order = zeta.j[0];
    for (std::size_t k = 2; k < zeta.j.size(); ++k)
        order += static_cast<int>(k - 1) * zeta.j[k];
    if (order != 2 * st.n)
        throw InputError("index_stats: differential-order identity violated");
    return st;
}

/// All solutions of sum k*j_k = 2*mu, in descending lexicographic order.
inline std::vector<DiophantineIndex> enumerate_indices(int mu) {
    if (mu < 1) throw InputError("enumerate_indices: mu must be >= 1");
    std::vector<DiophantineIndex> out;
    std::vector<int> j(2 * mu, 0);
    // position k (0-based) carries weight k+1
    auto rec = [&](auto&& self, int k, int remaining) -> void {
        if (k == 2 * mu - 1) {
            // last weight is 2*mu; remaining must be divisible
            if (remaining % (2 * mu) == 0) {
                j[k] = remaining / (2 * mu);
                out.push_back({mu, j});
                j[k] = 0;
            }
            return;
        }
        const int weight = k + 1;
        for (int c = remaining / weight; c >= 0; --c) {
            j[k] = c;
            self(self, k + 1, remaining - c * weight);
        }
        j[k] = 0;
    };
    rec(rec, 0, 2 * mu);
    return out;
}

}  // namespace fk

// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: end-to-end checks covering the nine headline guarantees
// of the toolkit. Each criterion prints exactly one PASS/FAIL line; the
// process exits nonzero if any criterion fails.

#include "fk/designer.hpp"
#include "fk/moments.hpp"
#include "fk/sampling.hpp"
#include "fk/scheme.hpp"
#include "fk/trotter.hpp"
#include "fk/wick.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s: criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. The direct Wick-expansion evaluator and the polynomial-differentiation
//    route agree exactly (rational arithmetic) for every index through mu = 3,
//    for both the Brownian kernel and the trapezoid scheme kernel.
void criterion_oracle_agreement() {
    const fk::CovarianceKernel kernels[] = {
        fk::CovarianceKernel::brownian(),
        fk::CovarianceKernel::of(fk::builtin::trapezoid()),
    };
    int checked = 0;
    bool all = true;
    std::string first_bad;
    for (const auto& kernel : kernels)
        for (int mu = 1; mu <= 3; ++mu)
            for (const auto& zeta : fk::enumerate_indices(mu)) {
                auto cv = fk::cross_validate(zeta, kernel);
                ++checked;
                if (!cv.exact_equal) {
                    all = false;
                    if (first_bad.empty()) first_bad = zeta.str();
                }
            }
    std::string detail = std::to_string(checked) + " indices exact-equal across both kernels";
    if (!all) detail = "first disagreement at " + first_bad;
    report(1, "dual-route moment agreement", all, detail);
}

// 2. Order certification matches the known classifications, including the
//    exact first failing residual of the trapezoid rule at order 3.
void criterion_certification() {
    auto trap = fk::certify_order(fk::builtin::trapezoid(), 3);
    auto mid = fk::certify_order(fk::builtin::midpoint(), 3);
    auto mb = fk::certify_order(fk::builtin::midpoint_bridge(), 3);
    bool pass = trap.certified_order == 2 && mid.certified_order == 1 &&
                mb.certified_order == 2;
    double first_fail_residual = -1.0;
    for (const auto& c : trap.conditions)
        if (!c.pass && first_fail_residual < 0.0) {
            pass = pass && c.n == 2 && c.d == 1;
            first_fail_residual = c.max_residual;
        }
    pass = pass && std::fabs(first_fail_residual - 2.0 / 3.0) < 1e-15;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "trapezoid=%d midpoint=%d midpoint-bridge=%d, trapezoid first failure "
                  "residual %.17g",
                  trap.certified_order, mid.certified_order, mb.certified_order,
                  first_fail_residual);
    report(2, "order certification of reference schemes", pass, buf);
}

// 3 & 4. Trotter composition against the closed-form harmonic kernel:
//    empirical convergence slopes match the certified orders, and the finest
//    trapezoid composition hits the analytic diagonal value.
void criterion_trotter() {
    const fk::PhysicalParams p{1.0, 1.0, 1.0};
    const fk::SpatialGrid grid{-8.0, 8.0, 512};
    const auto V = fk::harmonic_potential(1.0);
    const double ref = fk::reference_harmonic_kernel(0.0, 0.0, 1.0, 1.0);
    const std::vector<int> ns = {3, 7, 15, 31, 63};

    std::vector<std::pair<int, double>> trap_err, mid_err;
    double trap_finest = 0.0;
    for (int n : ns) {
        double vt = fk::trotter_compose(fk::builtin::trapezoid(), V, p, n, grid).at(0.0, 0.0);
        double vm = fk::trotter_compose(fk::builtin::midpoint(), V, p, n, grid).at(0.0, 0.0);
        trap_err.push_back({n, std::fabs(vt - ref)});
        mid_err.push_back({n, std::fabs(vm - ref)});
        if (n == 63) trap_finest = vt;
    }
    double st = fk::estimate_convergence_order(trap_err).slope;
    double sm = fk::estimate_convergence_order(mid_err).slope;
    bool slopes_ok = st >= -2.2 && st <= -1.8 && sm >= -1.2 && sm <= -0.8;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "trapezoid slope %.3f, midpoint slope %.3f", st, sm);
    report(3, "empirical convergence slopes match certified orders", slopes_ok, buf);

    double diag_err = std::fabs(trap_finest - 0.3680069);
    std::snprintf(buf, sizeof(buf), "rho_63(0,0) = %.7f, |error| = %.2e", trap_finest,
                  diag_err);
    report(4, "harmonic diagonal value at n = 63", diag_err <= 1e-3, buf);
}

// 5. The dyadic Brownian-bridge sampler reproduces the bridge covariance
//    min(u,t) - u t at (1/4, 3/4), and paths vanish exactly at both endpoints.
void criterion_bridge_covariance() {
    const int k = 6, npts = 1 << k, samples = 100000;
    const std::size_t iu = npts / 4, it = 3 * npts / 4;
    fk::detail::KahanAccumulator acc, acc2;
    bool endpoints_zero = true;
    for (int s = 0; s < samples; ++s) {
        auto path = fk::levy_ciesielski_bridge(k, {20260826, static_cast<std::uint64_t>(s)});
        endpoints_zero = endpoints_zero && path.values.front() == 0.0 &&
                         path.values.back() == 0.0;
        double prod = path.values[iu] * path.values[it];
        acc.add(prod);
        acc2.add(prod * prod);
    }
    double mean = acc.sum / samples;
    double var = std::max(0.0, acc2.sum / samples - mean * mean);
    double se = std::sqrt(var / samples);
    double expected = 0.0625;  // min(1/4,3/4) - 3/16
    bool pass = endpoints_zero && std::fabs(mean - expected) <= 3.0 * se;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "empirical %.6f vs %.6f (3 se = %.6f), endpoints %s", mean,
                  expected, 3.0 * se, endpoints_zero ? "exactly zero" : "NONZERO");
    report(5, "bridge covariance at (1/4, 3/4)", pass, buf);
}

// 6. The truncation-tail fourth-moment statistic respects its analytic bound
//    at several dyadic levels.
void criterion_tail_bound() {
    bool pass = true;
    std::string detail;
    for (int k : {2, 4, 6}) {
        auto est = fk::tail_sup_statistic(fk::builtin::midpoint_bridge(), k, 10000, {5, 0});
        bool ok = est.mean <= est.bound + 3.0 * est.stderr_;
        pass = pass && ok;
        char buf[72];
        std::snprintf(buf, sizeof(buf), "%sk=%d: %.3e <= %.3e", detail.empty() ? "" : "; ", k,
                      est.mean, est.bound);
        detail += buf;
    }
    report(6, "tail sup-norm fourth moment within bound", pass, detail);
}

// 7. The contracted-and-translated composite measure keeps its exact
//    identities: unit mass and first moment 1/2 for a symmetric base rule.
void criterion_composite_measure() {
    bool pass = true;
    for (int k : {1, 2, 3}) {
        auto wk = fk::composite_measure(fk::builtin::trapezoid(), k);
        fk::Rational mass = 0, first = 0;
        for (std::size_t i = 0; i < wk.knots_exact.size(); ++i) {
            mass += wk.weights_exact[i];
            first += wk.weights_exact[i] * wk.knots_exact[i];
        }
        pass = pass && mass == 1 && first == fk::Rational(1, 2) &&
               wk.knots_exact.size() == static_cast<std::size_t>((1 << k) + 1);
    }
    report(7, "composite measure exact identities (k = 1..3)", pass,
           "unit mass and first moment 1/2 hold exactly");
}

// 8. The multi-start designer recovers the known order-2 one-knot scheme
//    (bridge amplitude 1/2 at the midpoint) and flags an infeasible target.
void criterion_designer() {
    fk::DesignProblem feasible;
    feasible.n_q = 1;
    feasible.n_nu = 1;
    feasible.target_order = 2;
    auto result = fk::design_scheme(feasible, 32, {7, 0});
    bool recovered = result.certified && result.residual_norm < 1e-8 &&
                     std::fabs(std::fabs(result.scheme.bridge.values[0][0]) - 0.5) < 1e-6;

    fk::DesignProblem infeasible;
    infeasible.n_q = 1;
    infeasible.n_nu = 0;
    infeasible.target_order = 2;
    auto bad = fk::design_scheme(infeasible, 4, {3, 0});
    bool flagged = !bad.certified && bad.residual_norm > 0.2;

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "recovered |bridge(1/2)| = %.6f residual %.2e; infeasible residual %.3f "
                  "flagged=%s",
                  std::fabs(result.scheme.bridge.values[0][0]), result.residual_norm,
                  bad.residual_norm, flagged ? "yes" : "no");
    report(8, "designer recovery and infeasibility detection", recovered && flagged, buf);
}

// 9. The CLI is byte-deterministic under a fixed seed.
void criterion_determinism() {
    const std::string cli = FK_CLI_PATH;
    const std::string a = "acceptance_det_a.csv", b = "acceptance_det_b.csv";
    std::string base = "\"" + cli + "\" --seed 123 sample --mode paths --k 5 --streams 3 --out ";
    int ra = std::system((base + a).c_str());
    int rb = std::system((base + b).c_str());
    std::string ca = read_file(a), cb = read_file(b);
    bool pass = ra == 0 && rb == 0 && !ca.empty() && ca == cb;
    std::remove(a.c_str());
    std::remove(b.c_str());
    char buf[96];
    std::snprintf(buf, sizeof(buf), "two seeded runs produced %zu identical bytes", ca.size());
    report(9, "seeded CLI output is byte-identical", pass,
           pass ? buf : "outputs differ or run failed");
}

}  // namespace

int main() {
    criterion_oracle_agreement();
    criterion_certification();
    criterion_trotter();
    criterion_bridge_covariance();
    criterion_tail_bound();
    criterion_composite_measure();
    criterion_designer();
    criterion_determinism();
    if (g_failures > 0) {
        std::printf("ACCEPTANCE: %d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("ACCEPTANCE: all 9 criteria passed\n");
    return 0;
}

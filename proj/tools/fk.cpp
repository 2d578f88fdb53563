// SPDX-License-Identifier: Apache-2.0
//
// fk: covariance-matching toolkit for short-time Feynman-Kac approximations.
// Subcommands: enumerate, certify, oracle, design, trotter, sample.

#include "fk/designer.hpp"
#include "fk/diophantine.hpp"
#include "fk/moments.hpp"
#include "fk/sampling.hpp"
#include "fk/scheme_io.hpp"
#include "fk/trotter.hpp"
#include "fk/wick.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitCapacityError = 2;
constexpr int kExitCheckFailed = 3;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_value(const fk::MomentValue& v) {
    if (v.exact) return fk::format_rational(*v.exact);
    return fmt17(v.value);
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("FK_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

// Every run echoes its resolved configuration for reproducibility.
void echo_config(std::ostream& os, const std::string& subcommand, const json& config) {
    json line = config;
    line["subcommand"] = subcommand;
    os << "# config " << line.dump() << "\n";
}

struct OutputTarget {
    std::ofstream file;
    std::ostream* os = &std::cout;

    void open(const std::string& path) {
        if (path.empty() || path == "-") return;
        file.open(path);
        if (!file) throw fk::InputError("cannot open output file '" + path + "'");
        os = &file;
    }
};

fk::PotentialSpec parse_potential(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon == std::string::npos ? spec.size() : colon);
    auto param = [&](const std::string& key, double fallback) {
        if (colon == std::string::npos) return fallback;
        std::string rest = spec.substr(colon + 1);
        auto pos = rest.find(key + "=");
        if (pos == std::string::npos) return fallback;
        return std::strtod(rest.c_str() + pos + key.size() + 1, nullptr);
    };
    if (kind == "harmonic") return fk::harmonic_potential(param("omega", 1.0));
    if (kind == "quartic") return fk::quartic_potential(param("a", 1.0));
    if (kind == "zero") return fk::zero_potential();
    throw fk::InputError("unknown potential '" + spec + "' (use harmonic:omega=W, quartic:a=A, zero)");
}

fk::SpatialGrid parse_grid(const std::string& spec) {
    fk::SpatialGrid g;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &g.x_min, &g.x_max, &g.size) != 3)
        throw fk::InputError("grid must be min:max:N, got '" + spec + "'");
    g.validate();
    return g;
}

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw fk::InputError("empty integer list");
    return out;
}

// ---------------------------------------------------------------------------

int run_enumerate(int mu, const std::string& out_path) {
    OutputTarget out;
    out.open(out_path);
    echo_config(*out.os, "enumerate", {{"mu", mu}, {"out", out_path}});
    *out.os << "zeta,mu,d,n\n";
    for (const auto& z : fk::enumerate_indices(mu)) {
        auto st = fk::index_stats(z);
        *out.os << "\"" << z.str() << "\"," << z.mu << "," << st.d << "," << st.n << "\n";
    }
    return kExitOk;
}

int run_certify(const std::string& scheme_ref, int order, double tol, bool dump_polys,
                const std::string& out_path) {
    fk::SchemeSpec scheme = fk::load_scheme(scheme_ref);
    fk::CertificationReport rep = fk::certify_order(scheme, order, tol);

    json doc;
    doc["config"] = {{"subcommand", "certify"}, {"scheme", scheme_ref}, {"order", order},
                     {"tol", tol}};
    doc["scheme"] = rep.scheme;
    doc["certified_order"] = rep.certified_order;
    doc["conditions"] = json::array();
    for (const auto& c : rep.conditions)
        doc["conditions"].push_back({{"n", c.n},
                                     {"d", c.d},
                                     {"max_residual", c.max_residual},
                                     {"pass", c.pass},
                                     {"exact", c.exact}});
    if (dump_polys) {
        doc["polynomials"] = json::array();
        for (const auto& c : rep.conditions) {
            json entry = {{"n", c.n}, {"d", c.d}};
            json terms = json::array();
            if (scheme.exact()) {
                auto p = fk::scheme_moment_polynomial_exact(scheme, c.n, c.d);
                for (const auto& [e, coef] : p.terms())
                    terms.push_back({{"exponents", e}, {"coeff", fk::format_rational(coef)}});
            } else {
                auto p = fk::scheme_moment_polynomial(scheme, c.n, c.d);
                for (const auto& [e, coef] : p.terms())
                    terms.push_back({{"exponents", e}, {"coeff", fmt17(coef)}});
            }
            entry["terms"] = std::move(terms);
            json ref_terms = json::array();
            for (const auto& [e, coef] : fk::bm_moment_polynomial(c.n, c.d).terms())
                ref_terms.push_back({{"exponents", e}, {"coeff", fk::format_rational(coef)}});
            entry["reference_terms"] = std::move(ref_terms);
            doc["polynomials"].push_back(std::move(entry));
        }
    }
    OutputTarget out;
    out.open(out_path);
    *out.os << doc.dump(2) << "\n";
    return kExitOk;
}

int run_oracle(const std::string& kernel_ref, int mu_max, bool check, double tol,
               const std::string& out_path) {
    fk::CovarianceKernel kernel = kernel_ref == "brownian"
                                      ? fk::CovarianceKernel::brownian()
                                      : fk::CovarianceKernel::of(fk::load_scheme(kernel_ref));
    OutputTarget out;
    out.open(out_path);
    echo_config(*out.os, "oracle",
                {{"kernel", kernel_ref}, {"mu", mu_max}, {"check", check}, {"tol", tol}});
    *out.os << "zeta,mu,d,n,direct_value,polynomial_value,diff\n";
    bool all_ok = true;
    for (int mu = 1; mu <= mu_max; ++mu)
        for (const auto& z : fk::enumerate_indices(mu)) {
            auto cv = fk::cross_validate(z, kernel);
            auto st = fk::index_stats(z);
            bool ok = cv.exact_equal || std::fabs(cv.diff) <= tol;
            all_ok = all_ok && ok;
            *out.os << "\"" << z.str() << "\"," << mu << "," << st.d << "," << st.n << ","
                    << fmt_value(cv.direct) << "," << fmt_value(cv.polynomial) << ","
                    << fmt17(cv.diff) << "\n";
        }
    if (check && !all_ok) {
        std::cerr << "error: oracle check failed (direct and polynomial routes disagree)\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

int run_design(int nq, int nnu, int order, int starts, std::uint64_t seed, double tol,
               const std::string& out_path, const std::string& log_path) {
    fk::DesignProblem problem;
    problem.n_q = nq;
    problem.n_nu = nnu;
    problem.target_order = order;
    fk::DesignResult result = fk::design_scheme(problem, starts, {seed, 0}, tol);

    json scheme_doc = fk::scheme_to_json(result.scheme);
    scheme_doc["certified"] = result.certified;
    scheme_doc["certified_order"] = result.certified_order;
    scheme_doc["residual_norm"] = result.residual_norm;
    OutputTarget out;
    out.open(out_path);
    *out.os << scheme_doc.dump(2) << "\n";

    if (!log_path.empty()) {
        OutputTarget log;
        log.open(log_path);
        echo_config(*log.os, "design",
                    {{"nq", nq}, {"nnu", nnu}, {"order", order}, {"starts", starts},
                     {"seed", seed}, {"tol", tol}});
        *log.os << "start,iterations,residual\n";
        for (const auto& entry : result.log)
            *log.os << entry.start << "," << entry.iterations << "," << fmt17(entry.residual)
                    << "\n";
    }
    if (!result.certified) {
        std::cerr << "warning: best residual " << fmt17(result.residual_norm)
                  << " not certified at order " << order << "\n";
    }
    return kExitOk;
}

int run_trotter(const std::string& scheme_ref, const std::string& potential_spec, double beta,
                const std::string& n_list, const std::string& grid_spec, double x, double xp,
                int gh_level, const std::string& out_path) {
    fk::SchemeSpec scheme = fk::load_scheme(scheme_ref);
    fk::PotentialSpec V = parse_potential(potential_spec);
    fk::SpatialGrid grid = parse_grid(grid_spec);
    fk::PhysicalParams params{beta, 1.0, 1.0};
    std::vector<int> ns = parse_int_list(n_list);

    // closed-form reference only for the harmonic potential
    double omega = 0.0;
    bool has_reference = potential_spec.rfind("harmonic", 0) == 0;
    if (has_reference) {
        auto pos = potential_spec.find("omega=");
        omega = pos == std::string::npos
                    ? 1.0
                    : std::strtod(potential_spec.c_str() + pos + 6, nullptr);
    }

    OutputTarget out;
    out.open(out_path);
    echo_config(*out.os, "trotter",
                {{"scheme", scheme_ref}, {"potential", potential_spec}, {"beta", beta},
                 {"n", n_list}, {"grid", grid_spec}, {"x", x}, {"xp", xp},
                 {"gh_level", gh_level}});
    *out.os << "n,value,reference,abs_error\n";
    std::vector<std::pair<int, double>> errors;
    bool boundary_warning = false;
    for (int n : ns) {
        auto res = fk::trotter_compose(scheme, V, params, n, grid,
                                       fk::Integration::gauss_hermite_level(gh_level));
        boundary_warning = boundary_warning || res.boundary_warning;
        double value = res.at(x, xp);
        if (has_reference) {
            double ref = fk::reference_harmonic_kernel(x, xp, beta, omega);
            double err = std::fabs(value - ref);
            errors.push_back({n, err});
            *out.os << n << "," << fmt17(value) << "," << fmt17(ref) << "," << fmt17(err)
                    << "\n";
        } else {
            *out.os << n << "," << fmt17(value) << ",,\n";
        }
    }
    json summary;
    summary["boundary_warning"] = boundary_warning;
    if (has_reference && errors.size() >= 4) {
        auto fit = fk::estimate_convergence_order(errors);
        summary["slope"] = fit.slope;
        summary["slope_stderr"] = fit.slope_stderr;
        summary["points_used"] = fit.points_used;
        summary["excluded"] = fit.excluded;
    }
    *out.os << "# summary " << summary.dump() << "\n";
    return kExitOk;
}

int run_sample(const std::string& mode, const std::string& scheme_ref, int k, int samples,
               int streams, std::uint64_t seed, double u, double tau,
               const std::string& out_path) {
    OutputTarget out;
    out.open(out_path);
    echo_config(*out.os, "sample",
                {{"mode", mode}, {"scheme", scheme_ref}, {"k", k}, {"samples", samples},
                 {"streams", streams}, {"seed", seed}, {"u", u}, {"tau", tau}});
    if (mode == "paths") {
        *out.os << "stream,index,u,value\n";
        for (int s = 0; s < streams; ++s) {
            auto path = fk::levy_ciesielski_bridge(k, {seed, static_cast<std::uint64_t>(s)});
            for (std::size_t i = 0; i < path.values.size(); ++i)
                *out.os << s << "," << i << ","
                        << fmt17(static_cast<double>(i) / (1 << k)) << ","
                        << fmt17(path.values[i]) << "\n";
        }
        return kExitOk;
    }
    if (mode == "covariance") {
        // empirical covariance of the bridge at (u, tau), one path per sample
        const int npts = 1 << k;
        auto snap = [&](double v) {
            int i = static_cast<int>(std::lround(v * npts));
            if (i < 0 || i > npts) throw fk::InputError("sample: u outside [0,1]");
            return static_cast<std::size_t>(i);
        };
        std::size_t iu = snap(u), it = snap(tau);
        fk::detail::KahanAccumulator acc, acc2;
        for (int s = 0; s < samples; ++s) {
            auto path = fk::levy_ciesielski_bridge(k, {seed, static_cast<std::uint64_t>(s)});
            double prod = path.values[iu] * path.values[it];
            acc.add(prod);
            acc2.add(prod * prod);
        }
        double mean = acc.sum / samples;
        double var = std::max(0.0, acc2.sum / samples - mean * mean);
        double expected = std::min(u, tau) - u * tau;
        *out.os << "u,tau,empirical,expected,stderr\n";
        *out.os << fmt17(u) << "," << fmt17(tau) << "," << fmt17(mean) << ","
                << fmt17(expected) << "," << fmt17(std::sqrt(var / samples)) << "\n";
        return kExitOk;
    }
    if (mode == "tailsup") {
        fk::SchemeSpec scheme = fk::load_scheme(scheme_ref);
        auto est = fk::tail_sup_statistic(scheme, k, samples, {seed, 0});
        *out.os << "k,estimate,stderr,bound\n";
        *out.os << k << "," << fmt17(est.mean) << "," << fmt17(est.stderr_) << ","
                << fmt17(est.bound) << "\n";
        return kExitOk;
    }
    throw fk::InputError("unknown sample mode '" + mode + "' (paths, covariance, tailsup)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariance-matching toolkit for short-time Feynman-Kac approximations"};
    app.require_subcommand(1);
    std::uint64_t seed = default_seed();
    int threads = 1;
    app.add_option("--seed", seed, "Random seed (default: FK_SEED env or 0)");
    app.add_option("--threads", threads, "Worker thread cap (modules are sequential today)");

    // enumerate
    auto* cmd_enum = app.add_subcommand("enumerate", "List Diophantine indices for mu");
    int mu = 1;
    std::string out_path;
    cmd_enum->add_option("--mu", mu, "Moment order mu (lists J_{2mu})")->required();
    cmd_enum->add_option("--out", out_path, "Output file (default stdout)");

    // certify
    auto* cmd_certify = app.add_subcommand("certify", "Certify convergence order of a scheme");
    std::string scheme_ref;
    int order = 4;
    double tol = 0.0;
    bool dump_polys = false;
    std::string certify_out;
    cmd_certify->add_option("scheme", scheme_ref, "Scheme file or builtin:<name>")->required();
    cmd_certify->add_option("--order", order, "Maximum order to test")->capture_default_str();
    cmd_certify->add_option("--tol", tol, "Coefficient tolerance for inexact schemes")
        ->capture_default_str();
    cmd_certify->add_flag("--dump-polynomials", dump_polys,
                          "Include sorted term lists in the report");
    cmd_certify->add_option("--out", certify_out, "Output file (default stdout)");

    // oracle
    auto* cmd_oracle = app.add_subcommand(
        "oracle", "Cross-validate moments: direct Wick evaluation vs polynomial route");
    std::string oracle_kernel = "brownian";
    int oracle_mu = 3;
    bool oracle_check = false;
    double oracle_tol = 0.0;
    std::string oracle_out;
    cmd_oracle->add_option("kernel", oracle_kernel, "'brownian', scheme file, or builtin:<name>")
        ->required();
    cmd_oracle->add_option("--mu", oracle_mu, "Largest mu to sweep")->capture_default_str();
    cmd_oracle->add_flag("--check", oracle_check, "Exit 3 unless all differences vanish");
    cmd_oracle->add_option("--tol", oracle_tol, "Tolerance for inexact kernels")
        ->capture_default_str();
    cmd_oracle->add_option("--out", oracle_out, "Output file (default stdout)");

    // design
    auto* cmd_design = app.add_subcommand("design", "Search for an order-nu scheme");
    int nq = 1, nnu = 1, design_order = 2, starts = 32;
    double design_tol = 1e-10;
    std::string design_out, design_log;
    cmd_design->add_option("--nq", nq, "Number of quadrature knots")->capture_default_str();
    cmd_design->add_option("--nnu", nnu, "Number of bridge functions")->capture_default_str();
    cmd_design->add_option("--order", design_order, "Target convergence order")
        ->capture_default_str();
    cmd_design->add_option("--starts", starts, "Multi-start count")->capture_default_str();
    cmd_design->add_option("--tol", design_tol, "Residual acceptance tolerance")
        ->capture_default_str();
    cmd_design->add_option("--out", design_out, "Scheme JSON output (default stdout)");
    cmd_design->add_option("--log", design_log, "Per-start log CSV");

    // trotter
    auto* cmd_trotter =
        app.add_subcommand("trotter", "Lie-Trotter composition against analytic references");
    std::string trotter_scheme, potential = "harmonic:omega=1", n_list = "3,7,15,31,63";
    std::string grid_spec = "-8:8:512", trotter_out;
    double beta = 1.0, x = 0.0, xp = 0.0;
    int gh_level = 8;
    cmd_trotter->add_option("--scheme", trotter_scheme, "Scheme file or builtin:<name>")
        ->required();
    cmd_trotter->add_option("--potential", potential, "harmonic:omega=W | quartic:a=A | zero")
        ->capture_default_str();
    cmd_trotter->add_option("--beta", beta, "Inverse temperature")->capture_default_str();
    cmd_trotter->add_option("--n", n_list, "Comma-separated Trotter indices")
        ->capture_default_str();
    cmd_trotter->add_option("--grid", grid_spec, "Spatial grid min:max:N")
        ->capture_default_str();
    cmd_trotter->add_option("--x", x, "Left argument")->capture_default_str();
    cmd_trotter->add_option("--xp", xp, "Right argument")->capture_default_str();
    cmd_trotter->add_option("--gh-level", gh_level, "Gauss-Hermite level per bridge variable")
        ->capture_default_str();
    cmd_trotter->add_option("--out", trotter_out, "Output file (default stdout)");

    // sample
    auto* cmd_sample = app.add_subcommand("sample", "Bridge paths and sampling statistics");
    std::string sample_mode = "paths", sample_scheme = "builtin:midpoint-bridge", sample_out;
    int sample_k = 6, sample_count = 1000, sample_streams = 1;
    double sample_u = 0.25, sample_tau = 0.75;
    cmd_sample->add_option("--mode", sample_mode, "paths | covariance | tailsup")
        ->capture_default_str();
    cmd_sample->add_option("--scheme", sample_scheme, "Scheme for tailsup mode")
        ->capture_default_str();
    cmd_sample->add_option("--k", sample_k, "Dyadic level")->capture_default_str();
    cmd_sample->add_option("--samples", sample_count, "Sample count")->capture_default_str();
    cmd_sample->add_option("--streams", sample_streams, "Stream count for paths mode")
        ->capture_default_str();
    cmd_sample->add_option("--u", sample_u, "First time for covariance mode")
        ->capture_default_str();
    cmd_sample->add_option("--tau", sample_tau, "Second time for covariance mode")
        ->capture_default_str();
    cmd_sample->add_option("--out", sample_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
        if (cmd_enum->parsed()) return run_enumerate(mu, out_path);
        if (cmd_certify->parsed())
            return run_certify(scheme_ref, order, tol, dump_polys, certify_out);
        if (cmd_oracle->parsed())
            return run_oracle(oracle_kernel, oracle_mu, oracle_check, oracle_tol, oracle_out);
        if (cmd_design->parsed())
            return run_design(nq, nnu, design_order, starts, seed, design_tol, design_out,
                              design_log);
        if (cmd_trotter->parsed())
            return run_trotter(trotter_scheme, potential, beta, n_list, grid_spec, x, xp,
                               gh_level, trotter_out);
        if (cmd_sample->parsed())
            return run_sample(sample_mode, sample_scheme, sample_k, sample_count,
                              sample_streams, seed, sample_u, sample_tau, sample_out);
        return kExitInputError;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInputError;
    } catch (const fk::CapacityError& e) {
        std::cerr << "error: capacity: " << e.what() << "\n";
        return kExitCapacityError;
    } catch (const fk::InputError& e) {
        std::cerr << "error: input: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: input: " << e.what() << "\n";
        return kExitInputError;
    }
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fk/errors.hpp"
#include "fk/scheme.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fk {

// Scheme JSON format:
//   {"name": str, "knots": [...], "weights": [...], "bridge": [[...]...],
//    "interpolation": "piecewise-linear"}
// Numeric entries may be JSON numbers or strings "p/q" for exact rationals.
// A scheme is held exactly only when every entry is exact (string rational or
// integer); otherwise all values are plain doubles.

namespace detail {

struct JsonNumber {
    double value = 0.0;
    std::optional<Rational> exact;
};

inline JsonNumber parse_number(const nlohmann::json& j, const char* where) {
    JsonNumber out;
    if (j.is_string()) {
        out.exact = parse_rational(j.get<std::string>());
        out.value = to_double(*out.exact);
    } else if (j.is_number_integer()) {
        out.exact = Rational(j.get<long long>());
        out.value = static_cast<double>(j.get<long long>());
    } else if (j.is_number()) {
        out.value = j.get<double>();
    } else {
        throw InputError(std::string("scheme json: expected number in ") + where);
    }
    return out;
}

inline void parse_vector(const nlohmann::json& j, const char* where,
                         std::vector<double>& vals, std::vector<Rational>& exact,
                         bool& all_exact) {
    if (!j.is_array()) throw InputError(std::string("scheme json: expected array for ") + where);
    for (const auto& e : j) {
        JsonNumber n = parse_number(e, where);
        vals.push_back(n.value);
        if (n.exact) exact.push_back(*n.exact);
        else all_exact = false;
    }
}

}  // namespace detail

inline SchemeSpec scheme_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("scheme json: top level must be an object");
    SchemeSpec s;
    s.name = j.value("name", std::string("unnamed"));
    if (!j.contains("knots") || !j.contains("weights"))
        throw InputError("scheme json: missing knots or weights");

    bool all_exact = true;
    detail::parse_vector(j["knots"], "knots", s.quadrature.knots, s.quadrature.knots_exact,
                         all_exact);
    detail::parse_vector(j["weights"], "weights", s.quadrature.weights,
                         s.quadrature.weights_exact, all_exact);
    if (j.contains("bridge")) {
        if (!j["bridge"].is_array()) throw InputError("scheme json: bridge must be an array");
        for (const auto& row : j["bridge"]) {
            std::vector<double> vals;
            std::vector<Rational> exact;
            detail::parse_vector(row, "bridge", vals, exact, all_exact);
            s.bridge.values.push_back(std::move(vals));
            s.bridge.values_exact.push_back(std::move(exact));
        }
    }
    if (!all_exact) {
        s.quadrature.knots_exact.clear();
        s.quadrature.weights_exact.clear();
        s.bridge.values_exact.clear();
    }
    std::string interp = j.value("interpolation", std::string("piecewise-linear"));
    if (interp == "piecewise-linear") s.bridge.interpolation = Interpolation::PiecewiseLinear;
    else if (interp == "user-table") s.bridge.interpolation = Interpolation::UserTable;
    else throw InputError("scheme json: unknown interpolation '" + interp + "'");
    s.validate();
    return s;
}

inline nlohmann::json scheme_to_json(const SchemeSpec& s) {
    nlohmann::json j;
    j["name"] = s.name;
    auto emit = [&](nlohmann::json& arr, double v, const Rational* r) {
        if (r) arr.push_back(format_rational(*r));
        else arr.push_back(v);
    };
    j["knots"] = nlohmann::json::array();
    j["weights"] = nlohmann::json::array();
    const bool ex = s.exact();
    for (std::size_t i = 0; i < s.n_q(); ++i) {
        emit(j["knots"], s.quadrature.knots[i], ex ? &s.quadrature.knots_exact[i] : nullptr);
        emit(j["weights"], s.quadrature.weights[i], ex ? &s.quadrature.weights_exact[i] : nullptr);
    }
    j["bridge"] = nlohmann::json::array();
    for (std::size_t k = 0; k < s.n_nu(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t i = 0; i < s.n_q(); ++i)
            emit(row, s.bridge.values[k][i], ex ? &s.bridge.values_exact[k][i] : nullptr);
        j["bridge"].push_back(std::move(row));
    }
    j["interpolation"] = s.bridge.interpolation == Interpolation::PiecewiseLinear
                             ? "piecewise-linear"
                             : "user-table";
    return j;
}

/// Resolves "builtin:<name>" or a path to a scheme JSON file.
inline SchemeSpec load_scheme(const std::string& ref) {
    if (ref.rfind("builtin:", 0) == 0) {
        std::string name = ref.substr(8);
        if (name == "trapezoid") return builtin::trapezoid();
        if (name == "midpoint") return builtin::midpoint();
        if (name == "midpoint-bridge") return builtin::midpoint_bridge();
        throw InputError("unknown builtin scheme '" + name + "'");
    }
    std::ifstream in(ref);
    if (!in) throw InputError("cannot open scheme file '" + ref + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("scheme file '" + ref + "': " + e.what());
    }
    return scheme_from_json(j);
}

}  // namespace fk

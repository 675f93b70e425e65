#pragma once

#include "twodomain/grid.hpp"
#include "twodomain/problem.hpp"
#include "twodomain/trajectory.hpp"
#include "twodomain/verify.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace twodomain {

using json = nlohmann::json;

/// Shortest exact decimal form of v: every emitted number round-trips, so
/// identical runs produce byte-identical files.
inline std::string format_double(double v) {
    char best[32];
    std::snprintf(best, sizeof(best), "%.17g", v);
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[32];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        // shortest exact decimal; "100" beats the earlier round-trip "1e+02"
        if (back == v && std::strlen(probe) < std::strlen(best)) std::strcpy(best, probe);
    }
    return best;
}

/// Serializable description of a cost-family problem (the only kind that can
/// round-trip through files): b = a on both sides, l = c0 + c1*a +
/// c2*exp(-|x|) + c3*|x|, shared scalar control grid.
struct ProblemConfig {
    std::string name = "custom";
    double lambda = 1.0;
    double delta = 1.0;
    double control_min = -1.0, control_max = 1.0, control_resolution = 1.0;
    CostCoefficients side1{}, side2{};

    static ProblemConfig builtin(Builtin which, double lambda, double resolution = 1.0) {
        ProblemConfig c;
        c.name = to_string(which);
        c.lambda = lambda;
        c.control_resolution = resolution;
        std::tie(c.side1, c.side2) = builtin_coefficients(which);
        return c;
    }

    static ProblemConfig from_json(const json& j) {
        if (!j.is_object()) throw std::invalid_argument("problem json: expected an object");
        if (j.value("dim", 1) != 1)
            throw std::invalid_argument("problem json: only dim = 1 is supported");
        ProblemConfig c;
        c.name = j.value("name", std::string("custom"));
        if (!j.contains("lambda")) throw std::invalid_argument("problem json: missing lambda");
        c.lambda = j.at("lambda").get<double>();
        c.delta = j.value("delta", 1.0);
        if (j.contains("control")) {
            const json& jc = j.at("control");
            c.control_min = jc.value("min", -1.0);
            c.control_max = jc.value("max", 1.0);
            c.control_resolution = jc.value("resolution", 1.0);
        }
        auto coeffs = [](const json& js, const char* side) {
            if (!js.is_object())
                throw std::invalid_argument(std::string("problem json: ") + side +
                                            " must be an object");
            CostCoefficients cc;
            cc.c0 = js.value("c0", 0.0);
            cc.c1 = js.value("c1", 0.0);
            cc.c2 = js.value("c2", 0.0);
            cc.c3 = js.value("c3", 0.0);
            return cc;
        };
        if (!j.contains("side1") || !j.contains("side2"))
            throw std::invalid_argument("problem json: missing side1 or side2");
        c.side1 = coeffs(j.at("side1"), "side1");
        c.side2 = coeffs(j.at("side2"), "side2");
        return c;
    }

    json to_json() const {
        return json{{"name", name},
                    {"dim", 1},
                    {"lambda", lambda},
                    {"delta", delta},
                    {"control",
                     {{"min", control_min},
                      {"max", control_max},
                      {"resolution", control_resolution}}},
                    {"side1",
                     {{"c0", side1.c0}, {"c1", side1.c1}, {"c2", side1.c2}, {"c3", side1.c3}}},
                    {"side2",
                     {{"c0", side2.c0}, {"c1", side2.c1}, {"c2", side2.c2}, {"c3", side2.c3}}}};
    }

    TwoDomainProblem build() const {
        return make_family_problem(lambda, delta,
                                   ControlSet::uniform_1d(control_min, control_max,
                                                          control_resolution),
                                   side1, side2);
    }
};

namespace detail {

inline Vec vec_from_json(const json& j, const char* what) {
    if (j.is_number()) return Vec::Constant(1, j.get<double>());
    if (j.is_array() && !j.empty()) {
        Vec v(j.size());
        for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
        return v;
    }
    throw std::invalid_argument(std::string("schedule json: ") + what +
                                " must be a number or array");
}

inline json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

}  // namespace detail

/// Schedule file format: {"breakpoints": [t0=0, t1, ...], "segments":
/// [{"alpha1": ..., "alpha2": ..., "mu": m} for an explicit mix or
/// {"alpha1": ..., "alpha2": ..., "slide": true} for solver-chosen sliding]}.
inline ControlSchedule schedule_from_json(const json& j) {
    if (!j.is_object() || !j.contains("breakpoints") || !j.contains("segments"))
        throw std::invalid_argument("schedule json: need breakpoints and segments");
    ControlSchedule s;
    for (const json& t : j.at("breakpoints")) s.breakpoints.push_back(t.get<double>());
    for (const json& seg : j.at("segments")) {
        ScheduleSegment g;
        if (!seg.is_object() || !seg.contains("alpha1") || !seg.contains("alpha2"))
            throw std::invalid_argument("schedule json: segment needs alpha1 and alpha2");
        g.alpha1 = detail::vec_from_json(seg.at("alpha1"), "alpha1");
        g.alpha2 = detail::vec_from_json(seg.at("alpha2"), "alpha2");
        const bool slide = seg.value("slide", false);
        if (seg.contains("mu")) {
            if (slide)
                throw std::invalid_argument("schedule json: segment has both mu and slide");
            g.mu = seg.at("mu").get<double>();
        } else if (!slide) {
            throw std::invalid_argument("schedule json: segment needs mu or slide: true");
        }
        s.segments.push_back(std::move(g));
    }
    s.validate();
    return s;
}

inline json schedule_to_json(const ControlSchedule& s) {
    json j{{"breakpoints", s.breakpoints}, {"segments", json::array()}};
    for (const ScheduleSegment& g : s.segments) {
        json seg{{"alpha1", detail::vec_to_json(g.alpha1)},
                 {"alpha2", detail::vec_to_json(g.alpha2)}};
        if (g.mu)
            seg["mu"] = *g.mu;
        else
            seg["slide"] = true;
        j["segments"].push_back(std::move(seg));
    }
    return j;
}

/// CSV layout: "#"-prefixed header lines (kind, grid, meta, the resolved
/// config as one JSON line), then x,value rows.
inline void write_field_csv(std::ostream& os, const ValueField& f, const json& config = {}) {
    os << "# kind: " << to_string(f.kind) << '\n';
    os << "# support: " << to_string(f.support) << '\n';
    os << "# xmax: " << format_double(f.grid.xmax) << '\n';
    os << "# h: " << format_double(f.grid.h) << '\n';
    for (const auto& [k, v] : f.meta) os << "# " << k << ": " << format_double(v) << '\n';
    if (!config.is_null()) os << "# config: " << config.dump() << '\n';
    os << "x,value\n";
    for (int g = f.first_node(); g <= f.last_node(); ++g)
        os << format_double(f.grid.node(g)) << ',' << format_double(f.at_node(g)) << '\n';
}

inline json field_to_json(const ValueField& f, const json& config = {}) {
    json j{{"kind", to_string(f.kind)},
           {"support", to_string(f.support)},
           {"grid", {{"xmax", f.grid.xmax}, {"h", f.grid.h}}},
           {"meta", f.meta},
           {"values", f.values}};
    if (!config.is_null()) j["config"] = config;
    return j;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr,
                                 const json& config = {}) {
    os << "# total_cost: " << format_double(tr.total_cost) << '\n';
    os << "# discount: " << format_double(tr.discount) << '\n';
    os << "# regular: " << (classify(tr) == TrajectoryClass::regular ? "true" : "false") << '\n';
    os << "# max_normal_residual: " << format_double(tr.max_normal_residual) << '\n';
    os << "# mu_violation_count: " << tr.mu_violation_count << '\n';
    if (tr.first_interface_time)
        os << "# first_interface_time: " << format_double(*tr.first_interface_time) << '\n';
    if (!config.is_null()) os << "# config: " << config.dump() << '\n';
    os << 't';
    for (int d = 0; d < tr.dim; ++d) os << ",x" << (d + 1);
    os << ",label,mu,step_cost\n";
    // Row k holds the sample at t_k plus the step leaving it; the final row
    // has no outgoing step and leaves those columns empty.
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        os << format_double(tr.times[k]);
        for (int d = 0; d < tr.dim; ++d)
            os << ',' << format_double(tr.states[k * tr.dim + d]);
        const bool has_step = k < tr.steps();
        os << ',' << (has_step ? to_string(tr.labels[k]) : "") << ',';
        if (has_step && !std::isnan(tr.mus[k])) os << format_double(tr.mus[k]);
        os << ',' << format_double(has_step ? tr.step_costs[k] : 0.0) << '\n';
    }
}

inline json suite_to_json(const SuiteReport& rep) {
    json checks = json::array();
    for (const CheckResult& c : rep.checks)
        checks.push_back(
            {{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}, {"detail", c.detail}});
    return json{{"suite", rep.suite}, {"all_pass", rep.all_pass()}, {"checks", checks}};
}

}  // namespace twodomain

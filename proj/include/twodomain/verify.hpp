#pragma once

#include "twodomain/closed_forms.hpp"
#include "twodomain/grid.hpp"
#include "twodomain/hjb.hpp"
#include "twodomain/problem.hpp"
#include "twodomain/schemes.hpp"
#include "twodomain/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace twodomain {

/// Discrepancy between two fields (or a field and a reference formula) over
/// the nodes both cover.
struct CompareReport {
    double sup = 0.0;
    double l1 = 0.0;       // grid L1 norm: h * sum |diff|
    double x_at_sup = 0.0;
    int nodes = 0;
};

inline CompareReport compare(const ValueField& a, const ValueField& b) {
    if (a.grid.h != b.grid.h || a.grid.xmax != b.grid.xmax)
        throw std::invalid_argument("compare: fields live on different grids");
    CompareReport r;
    const int lo = std::max(a.first_node(), b.first_node());
    const int hi = std::min(a.last_node(), b.last_node());
    for (int g = lo; g <= hi; ++g) {
        const double d = std::abs(a.at_node(g) - b.at_node(g));
        r.l1 += d * a.grid.h;
        if (d > r.sup) {
            r.sup = d;
            r.x_at_sup = a.grid.node(g);
        }
        ++r.nodes;
    }
    return r;
}

inline CompareReport compare(const ValueField& a, const ClosedForm& cf) {
    CompareReport r;
    for (int g = a.first_node(); g <= a.last_node(); ++g) {
        const double d = std::abs(a.at_node(g) - cf(a.grid.node(g)));
        r.l1 += d * a.grid.h;
        if (d > r.sup) {
            r.sup = d;
            r.x_at_sup = a.grid.node(g);
        }
        ++r.nodes;
    }
    return r;
}

/// One pass/fail entry of a suite. margin > 0 means the check held with that
/// much room; margin < 0 quantifies the violation.
struct CheckResult {
    std::string name;
    bool pass = false;
    double margin = 0.0;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const CheckResult& c) { return c.pass; });
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline CheckResult make_check(std::string name, double margin, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.pass = margin >= 0.0;
    c.margin = margin;
    c.detail = std::move(detail);
    return c;
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace detail

struct InvariantOptions {
    double tol = -1.0;  // < 0: 10 * h (first-order scheme error scale)
    double dpp_tau = 0.02;
    double dpp_dt = 1e-4;
    double strategy_dt = 1e-3;
    AssembleOptions assemble{};
};

/// Cross-method checks on one problem: order and bound relations between the
/// assembled fields, the interface scalars, the trajectory oracle and the
/// dynamic-programming restart. States for the sampled checks sit well inside
/// the truncated box.
inline SuiteReport invariant_suite(const TwoDomainProblem& pb, const Grid1D& grid,
                                   const InvariantOptions& opt = {}) {
    SuiteReport rep;
    rep.suite = "invariants";
    const double tol = opt.tol >= 0 ? opt.tol : 10.0 * grid.h;
    const Assembled st = assemble_structure(pb, grid, opt.assemble);
    const std::vector<double> states = {0.0,  0.25, -0.25, 0.5, -0.5,
                                        0.75, -0.75, 1.0,  -1.0, 1.5};

    {  // (1) lower field below upper field
        double worst = -std::numeric_limits<double>::infinity();
        for (int g = 0; g <= 2 * grid.n; ++g)
            worst = std::max(worst, st.u_minus.at_node(g) - st.u_plus.at_node(g));
        rep.checks.push_back(detail::make_check("Uminus_le_Uplus", tol - worst,
                                                "max(U_minus - U_plus) = " + detail::fmt(worst)));
    }
    {  // (2) all-mix interface value below regular-mix value
        const double gap = st.mix_regular.value - st.mix_all.value;
        rep.checks.push_back(detail::make_check(
            "uH_le_uHreg", gap, "u_H = " + detail::fmt(st.mix_all.value) +
                                    ", u_H_reg = " + detail::fmt(st.mix_regular.value)));
    }
    const double M = std::max(cost_bound_on_box(pb, grid.xmax), pb.max_velocity_bound());
    {  // (3) discounted-cost bound
        double amax = 0.0;
        for (int g = 0; g <= 2 * grid.n; ++g)
            amax = std::max({amax, std::abs(st.u_minus.at_node(g)),
                             std::abs(st.u_plus.at_node(g))});
        rep.checks.push_back(detail::make_check(
            "value_bound_M_over_lambda", M / pb.lambda + 1e-9 - amax,
            "max|U| = " + detail::fmt(amax) + ", M/lambda = " + detail::fmt(M / pb.lambda)));
    }
    {  // (4) discrete Lipschitz quotient
        double q = 0.0;
        for (int g = 0; g < 2 * grid.n; ++g)
            q = std::max({q,
                          std::abs(st.u_minus.at_node(g + 1) - st.u_minus.at_node(g)) / grid.h,
                          std::abs(st.u_plus.at_node(g + 1) - st.u_plus.at_node(g)) / grid.h});
        const double bound = 2.0 * M / pb.delta + 10.0 * grid.h;
        rep.checks.push_back(detail::make_check("lipschitz_bound", bound - q,
                                                "quotient = " + detail::fmt(q) +
                                                    ", bound = " + detail::fmt(bound)));
    }
    {  // (5) uniqueness gap whenever the interface values force it
        const double sc_min = std::min(st.minus_decision.sc1_value, st.minus_decision.sc2_value);
        const bool applies = st.mix_all.value >= st.mix_regular.value - 1e-12 ||
                             st.mix_all.value >= sc_min - tol;
        double gap = 0.0;
        for (int g = 0; g <= 2 * grid.n; ++g)
            gap = std::max(gap, std::abs(st.u_plus.at_node(g) - st.u_minus.at_node(g)));
        const double gap0 = st.plus_decision.value - st.minus_decision.value;
        if (applies) {
            rep.checks.push_back(detail::make_check("uniqueness_gap", 2.0 * tol - gap,
                                                    "sup gap = " + detail::fmt(gap)));
        } else {
            CheckResult c;
            c.name = "uniqueness_gap";
            c.pass = true;
            c.margin = 0.0;
            c.detail = "not applicable; gap at 0 = " + detail::fmt(gap0) +
                       ", sup gap = " + detail::fmt(gap);
            rep.checks.push_back(c);
        }
    }
    double slide_residual = 0.0;
    {  // (6) scripted strategies cannot beat the grid lower field
        StrategyOptions sopt;
        sopt.dt = opt.strategy_dt;
        double worst = std::numeric_limits<double>::infinity();
        double worst_x = 0.0;
        for (double x0 : states) {
            const StrategyResult sr = best_of_strategies(pb, x0, false, sopt);
            slide_residual = std::max(slide_residual, sr.max_sliding_residual);
            const double m = sr.value - (st.u_minus.value_at(x0) - tol);
            if (m < worst) {
                worst = m;
                worst_x = x0;
            }
        }
        rep.checks.push_back(detail::make_check(
            "strategy_lower_bound", worst, "tightest at x0 = " + detail::fmt(worst_x)));
    }
    {  // (7) dynamic-programming restart on the lower field
        DppOptions dopt;
        dopt.dt = opt.dpp_dt;
        const DppReport dr = dpp_residual(st.u_minus, pb, opt.dpp_tau, states, dopt);
        slide_residual = std::max(slide_residual, dr.max_sliding_residual);
        rep.checks.push_back(detail::make_check(
            "dpp_residual", 5.0 * grid.h - dr.max_abs_margin,
            "max |margin| = " + detail::fmt(dr.max_abs_margin) + " over " +
                std::to_string(dr.samples.size()) + " states"));
    }
    {  // (8) sliding keeps the normal drift at numerical zero
        rep.checks.push_back(detail::make_check(
            "sliding_residual", 1e-7 - slide_residual,
            "max |normal drift| = " + detail::fmt(slide_residual)));
    }
    return rep;
}

struct ExamplesOptions {
    double pde_tol = -1.0;       // < 0: 10 * h
    double kink_radius = -1.0;   // < 0: 2 * h + 1e-9
    double interface_tol = 1e-14;
    double symmetry_tol = 1e-12;
};

/// Self-consistency of the closed-form catalogue for one builtin problem:
/// each formula satisfies its own side PDE at interior nodes away from its
/// kinks, the fields carry the problems' mirror symmetry, and the interface
/// scalars match the interface_controls computation exactly.
inline SuiteReport examples_suite(Builtin which, double lambda, const Grid1D& grid,
                                  const ExamplesOptions& opt = {}) {
    SuiteReport rep;
    rep.suite = "examples";
    const TwoDomainProblem pb = builtin_problem(which, lambda);
    const double pde_tol = opt.pde_tol >= 0 ? opt.pde_tol : 10.0 * grid.h;
    const double kink_r = opt.kink_radius >= 0 ? opt.kink_radius : 2.0 * grid.h + 1e-9;

    const std::vector<ClosedFormTarget> fields = {ClosedFormTarget::u_minus,
                                                  ClosedFormTarget::u_plus,
                                                  ClosedFormTarget::u_sc1,
                                                  ClosedFormTarget::u_sc2};
    for (ClosedFormTarget t : fields) {
        const ClosedForm cf = closed_form(which, t, lambda);
        const bool side1_only = t == ClosedFormTarget::u_sc1;
        const bool side2_only = t == ClosedFormTarget::u_sc2;
        double worst = 0.0, worst_x = 0.0;
        for (int g = 1; g < 2 * grid.n; ++g) {
            const double x = grid.node(g);
            if (side1_only && x <= 0.0) continue;
            if (side2_only && x >= 0.0) continue;
            if (x == 0.0) continue;
            bool near_kink = false;
            for (double k : cf.kinks) near_kink |= std::abs(x - k) <= kink_r;
            if (near_kink) continue;
            HamiltonianQuery q;
            q.x = Vec::Constant(1, x);
            q.u = cf(x);
            q.p = Vec::Constant(1, (cf(x + grid.h) - cf(x - grid.h)) / (2.0 * grid.h));
            const Side s = x > 0.0 ? Side::one : Side::two;
            const double r = std::abs(eval_hamiltonian(pb, s, q).value);
            if (r > worst) {
                worst = r;
                worst_x = x;
            }
        }
        rep.checks.push_back(detail::make_check(
            "pde_residual_" + to_string(t), pde_tol - worst,
            "max |H| = " + detail::fmt(worst) + " at x = " + detail::fmt(worst_x)));
    }

    {  // mirror symmetry: swapping the sides maps each example to itself
        const ClosedForm um = closed_form(which, ClosedFormTarget::u_minus, lambda);
        const ClosedForm up = closed_form(which, ClosedFormTarget::u_plus, lambda);
        const ClosedForm s1 = closed_form(which, ClosedFormTarget::u_sc1, lambda);
        const ClosedForm s2 = closed_form(which, ClosedFormTarget::u_sc2, lambda);
        double worst = 0.0;
        for (int g = grid.n; g <= 2 * grid.n; ++g) {
            const double x = grid.node(g);
            worst = std::max({worst, std::abs(um(x) - um(-x)), std::abs(up(x) - up(-x)),
                              std::abs(s1(x) - s2(-x))});
        }
        rep.checks.push_back(detail::make_check("mirror_symmetry", opt.symmetry_tol - worst,
                                                "max asymmetry = " + detail::fmt(worst)));
    }

    {  // interface scalars agree with the control-grid minimization exactly
        const InterfaceValue all = interface_value(pb, Vec::Zero(1), false);
        const InterfaceValue reg = interface_value(pb, Vec::Zero(1), true);
        const double eh = closed_form(which, ClosedFormTarget::u_h, lambda)(0.0);
        const double ehr = closed_form(which, ClosedFormTarget::u_h_reg, lambda)(0.0);
        const double d = std::max(std::abs(all.value - eh), std::abs(reg.value - ehr));
        rep.checks.push_back(detail::make_check(
            "interface_scalars_exact", opt.interface_tol - d,
            "u_H = " + detail::fmt(all.value) + ", u_H_reg = " + detail::fmt(reg.value)));
    }
    return rep;
}

struct SchemesOptions {
    double eps = 0.05;
    Grid1D grid = Grid1D::make(3.0, 5e-3);
    SchemeParams params{};
    SolveOptions filippov_solver{};
};

/// Behavior of the regularized schemes on the non-unique example: profile
/// independence of the mixing scheme, the one-sided viscous bound, bc
/// monotonicity, and the recorded (never failing) diffusion-vs-mixing probe.
inline SuiteReport schemes_suite(double lambda = 1.0, const SchemesOptions& opt = {}) {
    SuiteReport rep;
    rep.suite = "schemes";
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, lambda);
    const Grid1D& g = opt.grid;
    const double L = g.xmax;
    const ClosedForm um = closed_form(Builtin::pull_pull, ClosedFormTarget::u_minus, lambda);
    const ClosedForm up = closed_form(Builtin::pull_pull, ClosedFormTarget::u_plus, lambda);

    {  // two admissible profiles land within their common distance scale to U_minus
        const ValueField ft = solve_filippov(pb, tanh_profile(opt.eps), g,
                                             FarBoundary::fixed(um(-L)), FarBoundary::fixed(um(L)),
                                             opt.filippov_solver);
        const ValueField fa = solve_filippov(pb, algebraic_profile(opt.eps), g,
                                             FarBoundary::fixed(um(-L)), FarBoundary::fixed(um(L)),
                                             opt.filippov_solver);
        const double d12 = compare(ft, fa).sup;
        const double scale = std::max(compare(ft, um).sup, compare(fa, um).sup);
        rep.checks.push_back(detail::make_check(
            "filippov_profile_independence", 2.0 * scale - d12,
            "profile gap = " + detail::fmt(d12) + ", distance scale = " + detail::fmt(scale)));
    }
    {  // viscous approximation stays above the upper field
        const ValueField v = solve_viscous(pb, opt.eps, g, up(-L), up(L), opt.params);
        double worst = 0.0;
        for (int j = 0; j <= 2 * g.n; ++j)
            worst = std::max(worst, up(g.node(j)) - v.at_node(j));
        rep.checks.push_back(detail::make_check("viscous_one_sided", 5e-3 - worst,
                                                "max(U_plus - u_eps) = " + detail::fmt(worst)));
    }
    {  // raising the boundary data raises the whole solution, up to the
       // stopping tolerance of the two independently converged runs
        const ValueField v0 = solve_viscous(pb, opt.eps, g, up(-L), up(L), opt.params);
        const ValueField v1 = solve_viscous(pb, opt.eps, g, up(-L) + 0.1, up(L) + 0.1, opt.params);
        double worst = 0.0;
        for (int j = 0; j <= 2 * g.n; ++j)
            worst = std::max(worst, v0.at_node(j) - v1.at_node(j));
        const double slack = 2.0 * opt.params.tol_fp / lambda;
        rep.checks.push_back(detail::make_check("viscous_monotone_in_bc", slack - worst,
                                                "max decrease = " + detail::fmt(worst)));
    }
    {  // diffusion-vs-mixing balance probe; outcome recorded, never failed
        const MixingProfile prof = tanh_profile(opt.eps);
        const double d_small = std::pow(opt.eps, 3);
        const double d_large = std::sqrt(opt.eps);
        auto distances = [&](double delta) {
            const ValueField c =
                solve_combined(pb, prof, delta, g, um(-L), um(L), opt.params);
            return std::pair<double, double>{compare(c, um).sup, compare(c, up).sup};
        };
        const auto [sm_minus, sm_plus] = distances(d_small);
        const auto [lg_minus, lg_plus] = distances(d_large);
        const bool small_picks_minus = sm_minus < sm_plus;
        const bool large_picks_plus = lg_plus < lg_minus;
        CheckResult c;
        c.name = "combined_balance_probe";
        c.pass = true;  // exploratory: the outcome is data, not a requirement
        c.margin = 0.0;
        std::ostringstream d;
        d << "delta=eps^3: dist(U-)=" << detail::fmt(sm_minus)
          << " dist(U+)=" << detail::fmt(sm_plus)
          << (small_picks_minus ? " -> closer to U-" : " -> closer to U+")
          << "; delta=sqrt(eps): dist(U-)=" << detail::fmt(lg_minus)
          << " dist(U+)=" << detail::fmt(lg_plus)
          << (large_picks_plus ? " -> closer to U+" : " -> closer to U-")
          << "; h=" << g.h;
        c.detail = d.str();
        rep.checks.push_back(c);
    }
    return rep;
}

}  // namespace twodomain

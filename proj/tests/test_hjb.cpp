#include "twodomain/closed_forms.hpp"
#include "twodomain/hjb.hpp"
#include "twodomain/problem.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

using namespace twodomain;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace {

// Both sides pay the flat cost c regardless of state and control; every
// policy then costs exactly c / lambda, and the discrete fixed point is exact.
TwoDomainProblem constant_problem(double c, double lambda) {
    const ControlSet grid = ControlSet::uniform_1d(-1.0, 1.0, 1.0);
    return make_family_problem(lambda, 1.0, grid, {c, 0, 0, 0}, {c, 0, 0, 0});
}

double sup_error(const ValueField& f, const ClosedForm& cf) {
    double worst = 0.0;
    for (int j = 0; j < f.size(); ++j)
        worst = std::max(worst, std::abs(f.values[j] - cf(f.node_x(j))));
    return worst;
}

AssembleOptions pinned_far(Builtin which, double lambda, double xmax) {
    AssembleOptions opt;
    opt.far_sc1 = FarBoundary::fixed(closed_form(which, ClosedFormTarget::u_sc1, lambda)(xmax));
    opt.far_sc2 = FarBoundary::fixed(closed_form(which, ClosedFormTarget::u_sc2, lambda)(-xmax));
    const ClosedForm um = closed_form(which, ClosedFormTarget::u_minus, lambda);
    const ClosedForm up = closed_form(which, ClosedFormTarget::u_plus, lambda);
    opt.far_minus1 = FarBoundary::fixed(um(xmax));
    opt.far_minus2 = FarBoundary::fixed(um(-xmax));
    opt.far_plus1 = FarBoundary::fixed(up(xmax));
    opt.far_plus2 = FarBoundary::fixed(up(-xmax));
    return opt;
}

}  // namespace

TEST_CASE("grid nodes and interpolation", "[hjb]") {
    const Grid1D g = Grid1D::make(3.0, 0.01);
    CHECK(g.n == 300);
    CHECK(g.size() == 601);
    CHECK(g.node(g.n) == 0.0);
    CHECK(g.node(0) == -3.0);
    CHECK(g.node(2 * g.n) == 3.0);
    CHECK(g.node(g.n + 1) == Catch::Approx(0.01).margin(1e-15));

    const auto loc = g.locate(0.005);
    CHECK(loc.i == g.n);
    CHECK(loc.w == Catch::Approx(0.5).margin(1e-9));
    CHECK(g.locate(-10.0).i == 0);
    CHECK(g.locate(-10.0).w == 0.0);
    CHECK(g.locate(10.0).i == 2 * g.n - 1);
    CHECK(g.locate(10.0).w == 1.0);

    CHECK_THROWS_AS(Grid1D::make(3.0, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D::make(-1.0, 0.1), std::invalid_argument);
}

TEST_CASE("value field support mapping", "[hjb]") {
    const Grid1D g = Grid1D::make(1.0, 0.5);
    ValueField f;
    f.grid = g;
    f.support = Support::side1;
    f.values = {1.0, 2.0, 3.0};  // x = 0, 0.5, 1
    CHECK_NOTHROW(f.validate());
    CHECK(f.node_x(0) == 0.0);
    CHECK(f.node_x(2) == 1.0);
    CHECK(f.at_node(g.n) == 1.0);
    CHECK(f.at_node(2 * g.n) == 3.0);
    CHECK(f.value_at(0.25) == Catch::Approx(1.5).margin(1e-12));
    CHECK_THROWS_AS(f.value_at(-0.5), std::invalid_argument);

    f.values.pop_back();
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}

TEST_CASE("half-line solve reproduces the constrained closed form", "[hjb]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::state_constraint, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    const ClosedForm cf = closed_form(Builtin::state_constraint, ClosedFormTarget::u_sc1, 1.0);
    const ValueField f = solve_dirichlet_halfline(pb, Side::one, cf(0.0), g,
                                                  FarBoundary::fixed(cf(3.0)));
    CHECK(f.support == Support::side1);
    CHECK(f.at_node(g.n) == cf(0.0));
    CHECK(sup_error(f, cf) <= 1e-2);
    CHECK(f.meta.at("residual") <= 1e-10);
    CHECK(f.meta.at("iterations") >= 1.0);
}

TEST_CASE("half-line solve with a pinned interface value, both sides", "[hjb]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    // Descending to the pinned zero value costs 1 + |x| - exp(-|x|).
    const auto exact = [](double x) {
        return 1.0 + std::abs(x) - std::exp(-std::abs(x));
    };
    const ValueField f1 = solve_dirichlet_halfline(pb, Side::one, 0.0, g,
                                                   FarBoundary::fixed(exact(3.0)));
    const ValueField f2 = solve_dirichlet_halfline(pb, Side::two, 0.0, g,
                                                   FarBoundary::fixed(exact(-3.0)));
    double worst = 0.0;
    for (int j = 0; j < f1.size(); ++j)
        worst = std::max(worst, std::abs(f1.values[j] - exact(f1.node_x(j))));
    for (int j = 0; j < f2.size(); ++j)
        worst = std::max(worst, std::abs(f2.values[j] - exact(f2.node_x(j))));
    CHECK(worst <= 1.5e-2);
    // The two sides mirror each other exactly.
    for (int j = 0; j <= g.n; ++j)
        CHECK(f1.at_node(g.n + j) == Catch::Approx(f2.at_node(g.n - j)).margin(1e-9));
}

TEST_CASE("flat-cost problem is solved exactly", "[hjb]") {
    const TwoDomainProblem pb = constant_problem(2.0, 0.8);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    const double exact = 2.0 / 0.8;
    const ValueField d = solve_dirichlet_halfline(pb, Side::one, exact, g);
    const ValueField s = solve_state_constraint(pb, Side::two, g);
    for (double v : d.values) CHECK(v == Catch::Approx(exact).margin(1e-9));
    for (double v : s.values) CHECK(v == Catch::Approx(exact).margin(1e-9));
    CHECK(s.kind == FieldKind::u_sc2);
}

TEST_CASE("solution is monotone and localized in the boundary data", "[hjb]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    const ValueField lo = solve_dirichlet_halfline(pb, Side::one, 0.5, g);
    const ValueField hi = solve_dirichlet_halfline(pb, Side::one, 0.7, g);
    for (int j = 0; j < lo.size(); ++j) {
        const double diff = hi.values[j] - lo.values[j];
        CHECK(diff >= -1e-12);
        CHECK(diff <= 0.2 + 1e-12);
    }
    // Influence of the interface value decays like the discounted travel time.
    CHECK(hi.values.back() - lo.values.back() <= 0.2 * std::exp(-3.0) * 1.2);
}

TEST_CASE("solver input validation", "[hjb]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 2.0);
    CHECK_THROWS_AS(solve_dirichlet_halfline(pb, Side::one, 0.0, Grid1D::make(3.0, 0.6)),
                    std::invalid_argument);  // lambda * h >= 1

    // A single outward control leaves the constrained interface node empty.
    const ControlSet up({Vec::Constant(1, 1.0)}, Vec::Constant(1, 1.0), Vec::Constant(1, 1.0));
    const TwoDomainProblem one_way = make_family_problem(1.0, 1e-9, up, {1, 0, 0, 0}, {1, 0, 0, 0});
    CHECK_THROWS_WITH(solve_state_constraint(one_way, Side::two, Grid1D::make(1.0, 0.1)),
                      ContainsSubstring("no admissible control"));
}

TEST_CASE("constrained interface values of the builtins", "[hjb]") {
    const Grid1D g = Grid1D::make(3.0, 0.01);
    {
        const TwoDomainProblem pb = builtin_problem(Builtin::state_constraint, 1.0);
        const ClosedForm cf = closed_form(Builtin::state_constraint, ClosedFormTarget::u_sc1, 1.0);
        const ValueField pinned =
            solve_state_constraint(pb, Side::one, g, FarBoundary::fixed(cf(3.0)));
        CHECK(pinned.at_node(g.n) == Catch::Approx(0.5).margin(1e-2));
        // Truncating the domain can only increase the constrained value.
        const ValueField truncated = solve_state_constraint(pb, Side::one, g);
        CHECK(truncated.at_node(g.n) >= 0.5 - 5e-3);
        CHECK(truncated.at_node(g.n) <= 0.5 + 8e-2);
    }
    {
        const TwoDomainProblem pb = builtin_problem(Builtin::push_push, 1.0);
        const ValueField f = solve_state_constraint(pb, Side::one, g);
        CHECK(f.at_node(g.n) == Catch::Approx(1.0).margin(1e-2));
    }
    {
        const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
        const ValueField f =
            solve_state_constraint(pb, Side::one, g, FarBoundary::fixed(4.0));
        CHECK(f.at_node(g.n) == Catch::Approx(1.0).margin(1e-2));
    }
}

TEST_CASE("assembled fields match the catalogue", "[hjb]") {
    const Grid1D g = Grid1D::make(3.0, 0.01);
    for (Builtin which :
         {Builtin::state_constraint, Builtin::push_push, Builtin::pull_pull}) {
        INFO(to_string(which));
        const TwoDomainProblem pb = builtin_problem(which, 1.0);
        const Assembled a = assemble_structure(pb, g, pinned_far(which, 1.0, g.xmax));

        CHECK(sup_error(a.u_minus, closed_form(which, ClosedFormTarget::u_minus, 1.0)) <= 5e-2);
        CHECK(sup_error(a.u_plus, closed_form(which, ClosedFormTarget::u_plus, 1.0)) <= 5e-2);
        CHECK(a.u_minus.meta.at("interface_value") == a.minus_decision.value);

        for (int i = 0; i < a.u_minus.size(); ++i) {
            CHECK(a.u_minus.values[i] <= a.u_plus.values[i] + 1e-9);
            // Builtin problems are mirror symmetric.
            CHECK(a.u_minus.values[i] ==
                  Catch::Approx(a.u_minus.values[a.u_minus.size() - 1 - i]).margin(1e-8));
        }
        CHECK(a.consistency_discrepancy <= 5e-2);
    }
}

TEST_CASE("interface decisions identify the attaining branch", "[hjb]") {
    const Grid1D g = Grid1D::make(3.0, 0.01);
    {
        const TwoDomainProblem pb = builtin_problem(Builtin::state_constraint, 1.0);
        const Assembled a =
            assemble_structure(pb, g, pinned_far(Builtin::state_constraint, 1.0, g.xmax));
        CHECK_FALSE(a.minus_decision.mix_attains);
        CHECK(a.minus_decision.sc1_attains);
        CHECK(a.minus_decision.sc2_attains);
        const std::string s = a.minus_decision.describe("U-", "u_H");
        CHECK_THAT(s, StartsWith("U-(0)=0.5"));
        CHECK_THAT(s, ContainsSubstring("U_SC1=U_SC2 (tie)"));
    }
    {
        const TwoDomainProblem pb = builtin_problem(Builtin::push_push, 1.0);
        const Assembled a = assemble_structure(pb, g, pinned_far(Builtin::push_push, 1.0, g.xmax));
        CHECK(a.minus_decision.mix_attains);
        CHECK_FALSE(a.minus_decision.sc1_attains);
        CHECK(a.minus_decision.describe("U-", "u_H") == "U-(0)=0 via u_H");
    }
    {
        const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
        const Assembled a = assemble_structure(pb, g, pinned_far(Builtin::pull_pull, 1.0, g.xmax));
        CHECK(a.minus_decision.mix_attains);
        CHECK_FALSE(a.minus_decision.sc1_attains);
        CHECK(a.minus_decision.value == 0.0);
        // At lambda = 1 the regular mix ties with both constrained values.
        CHECK(a.plus_decision.mix_attains);
        CHECK(a.plus_decision.sc1_attains);
        CHECK(a.plus_decision.sc2_attains);
        CHECK(a.plus_decision.mix_value == 1.0);
    }
}

TEST_CASE("dynamic programming restarts are exact on a flat problem", "[hjb]") {
    const TwoDomainProblem pb = constant_problem(2.0, 0.8);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    const Assembled a = assemble_structure(pb, g);
    const std::array<double, 5> states = {0.0, 0.25, -0.25, 1.0, -1.0};
    const DppReport rep = dpp_residual(a.u_minus, pb, 0.02, states);
    CHECK(rep.samples.size() == states.size());
    CHECK(rep.max_abs_margin <= 1e-8);
}

TEST_CASE("dynamic programming margins on an assembled field", "[hjb]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    const Assembled a = assemble_structure(pb, g, pinned_far(Builtin::pull_pull, 1.0, g.xmax));
    const std::array<double, 5> states = {0.0, 0.5, -0.75, 1.5, -1.0};

    const DppReport minus = dpp_residual(a.u_minus, pb, 0.02, states);
    CHECK(minus.max_abs_margin <= 5.0 * g.h);
    CHECK(minus.max_sliding_residual <= 1e-10);

    // Singular mixes undercut the regular-strategy field at the interface...
    const std::array<double, 1> origin = {0.0};
    const DppReport cheat = dpp_residual(a.u_plus, pb, 0.02, origin);
    CHECK(cheat.min_margin <= -0.01);

    // ...while regular restarts stay consistent with it.
    DppOptions reg;
    reg.regular_only = true;
    const DppReport fair = dpp_residual(a.u_plus, pb, 0.02, origin, reg);
    CHECK(fair.max_abs_margin <= 5.0 * g.h);
}

TEST_CASE("dpp_residual input validation", "[hjb]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(1.0, 0.1);
    const ValueField side = solve_dirichlet_halfline(pb, Side::one, 0.0, g);
    const std::array<double, 1> states = {0.0};
    CHECK_THROWS_AS(dpp_residual(side, pb, 0.02, states), std::invalid_argument);

    ValueField full;
    full.grid = g;
    full.support = Support::full;
    full.values.assign(full.size(), 0.0);
    CHECK_THROWS_AS(dpp_residual(full, pb, 0.0, states), std::invalid_argument);
}

#include "twodomain/closed_forms.hpp"
#include "twodomain/schemes.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace twodomain;
using Catch::Matchers::ContainsSubstring;

namespace {

double sup_dist(const ValueField& f, const ClosedForm& cf) {
    double worst = 0.0;
    for (int j = 0; j < f.size(); ++j)
        worst = std::max(worst, std::abs(f.values[j] - cf(f.node_x(j))));
    return worst;
}

double sup_dist(const ValueField& a, const ValueField& b) {
    double worst = 0.0;
    for (int j = 0; j < a.size(); ++j)
        worst = std::max(worst, std::abs(a.values[j] - b.values[j]));
    return worst;
}

}  // namespace

TEST_CASE("mixing profiles", "[schemes]") {
    // tanh tails decay exponentially, the algebraic ones only like 1/s^2
    const std::vector<std::pair<MixingProfile, double>> profiles = {
        {tanh_profile(0.1), 1e-6}, {algebraic_profile(0.2), 2e-4}};
    for (const auto& [p, tail] : profiles) {
        CHECK_NOTHROW(p.validate());
        CHECK(p(0.0) == Catch::Approx(0.5).margin(1e-12));
        CHECK(p(-10.0) <= tail);
        CHECK(p(10.0) >= 1.0 - tail);
        CHECK(p(0.01) > p(-0.01));
    }
    MixingProfile bad = tanh_profile(0.1);
    bad.eps = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tanh_profile(0.1);
    bad.shape = nullptr;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tanh_profile(0.1);
    bad.shape = [](double s) { return 0.5 * (1.0 - std::tanh(s)); };  // decreasing
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.shape = [](double) { return 0.3; };  // never reaches the limits
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("filippov scheme is exact on a flat problem", "[schemes]") {
    const ControlSet grid = ControlSet::uniform_1d(-1.0, 1.0, 1.0);
    const TwoDomainProblem pb = make_family_problem(0.8, 1.0, grid, {2, 0, 0, 0}, {2, 0, 0, 0});
    const ValueField f = solve_filippov(pb, tanh_profile(0.1), Grid1D::make(3.0, 0.05));
    for (double v : f.values) CHECK(v == Catch::Approx(2.0 / 0.8).margin(1e-9));
    CHECK(f.kind == FieldKind::filippov);
    CHECK(f.meta.at("eps") == 0.1);
}

TEST_CASE("filippov approximations converge to the lower value", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 5e-3);
    const ClosedForm um = closed_form(Builtin::pull_pull, ClosedFormTarget::u_minus, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.2, 0.1, 0.05}) {
        const ValueField f = solve_filippov(pb, tanh_profile(eps), g);
        const double d = sup_dist(f, um);
        INFO("eps = " << eps << ", sup distance = " << d);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev <= 0.15);
}

TEST_CASE("filippov value is flat on push_push", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::push_push, 1.0);
    const ValueField f = solve_filippov(pb, tanh_profile(0.1), Grid1D::make(3.0, 5e-3));
    double worst = 0.0;
    for (double v : f.values) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 2e-2);
}

TEST_CASE("filippov value depends weakly on the profile shape", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 1e-2);
    const ValueField a = solve_filippov(pb, tanh_profile(0.1), g);
    const ValueField b = solve_filippov(pb, algebraic_profile(0.1), g);
    CHECK(sup_dist(a, b) <= 5e-2);
}

TEST_CASE("viscous scheme is exact when the solution is flat", "[schemes]") {
    // Single immobile control: the steady state is l0 / lambda on any grid.
    const ControlSet still({Vec::Zero(1)}, Vec::Zero(1), Vec::Zero(1));
    const TwoDomainProblem pb = make_family_problem(1.5, 1e-9, still, {3, 0, 0, 0}, {3, 0, 0, 0});
    const ValueField f = solve_viscous(pb, 0.05, Grid1D::make(2.0, 0.05), 2.0, 2.0);
    for (double v : f.values) CHECK(v == Catch::Approx(2.0).margin(1e-12));
    CHECK(f.meta.at("eps") == 0.05);
    CHECK(f.meta.count("cascade_levels") == 1);
}

TEST_CASE("viscous scheme is exact on push_push", "[schemes]") {
    // u = 0 solves eps u'' = H exactly for every eps, including discretely.
    const TwoDomainProblem pb = builtin_problem(Builtin::push_push, 1.0);
    const ValueField f = solve_viscous(pb, 0.1, Grid1D::make(3.0, 0.01), 0.0, 0.0);
    for (double v : f.values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("viscous approximations settle on the upper value from above", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.01);
    const ClosedForm up = closed_form(Builtin::pull_pull, ClosedFormTarget::u_plus, 1.0);
    const double bc = up(3.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.1, 0.05}) {
        const ValueField f = solve_viscous(pb, eps, g, bc, bc);
        for (int j = 0; j < f.size(); ++j)
            CHECK(f.values[j] >= up(f.node_x(j)) - 5e-3);
        const double d = sup_dist(f, up);
        INFO("eps = " << eps << ", sup distance = " << d);
        CHECK(d < prev);
        prev = d;
        CHECK(f.meta.at("residual") <= 1e-5);
    }
}

TEST_CASE("viscous solution is monotone in the boundary data", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.02);
    const ValueField lo = solve_viscous(pb, 0.05, g, 4.0, 4.0);
    const ValueField hi = solve_viscous(pb, 0.05, g, 4.1, 4.1);
    for (int j = 0; j < lo.size(); ++j) {
        const double diff = hi.values[j] - lo.values[j];
        CHECK(diff >= -1e-4);
        CHECK(diff <= 0.1 + 1e-4);
    }
}

TEST_CASE("viscous scheme rejects bad parameters", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(1.0, 0.01);
    CHECK_THROWS_AS(solve_viscous(pb, 0.0, g, 0.0, 0.0), std::invalid_argument);

    SchemeParams params;
    params.cascade_levels = 0;
    params.pseudo_dt = 2e-3;  // above 0.9 * min(h^2/(2 eps), h / max|b|) = 9e-4
    CHECK_THROWS_WITH(solve_viscous(pb, 0.05, g, 0.0, 0.0, params),
                      ContainsSubstring("CFL"));

    params.pseudo_dt = 0.0;
    params.tol_fp = 0.0;
    CHECK_THROWS_AS(solve_viscous(pb, 0.05, g, 0.0, 0.0, params), std::invalid_argument);
}

TEST_CASE("user pseudo_dt is honored when stable", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::push_push, 1.0);
    SchemeParams params;
    params.cascade_levels = 0;
    params.pseudo_dt = 1e-4;
    const ValueField f = solve_viscous(pb, 0.05, Grid1D::make(1.0, 0.05), 0.0, 0.0, params);
    CHECK(f.meta.at("pseudo_dt") == 1e-4);
    CHECK(f.meta.at("cascade_levels") == 0.0);
}

TEST_CASE("combined scheme with zero diffusion matches filippov", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.05);
    const MixingProfile profile = tanh_profile(0.1);
    const double bc_minus = 3.95, bc_plus = 3.95;

    SolveOptions tight;
    tight.tol_fp = 1e-12;
    const ValueField fil = solve_filippov(pb, profile, g, FarBoundary::fixed(bc_minus),
                                          FarBoundary::fixed(bc_plus), tight);

    SchemeParams params;
    params.tol_fp = 1e-12;
    const ValueField comb = solve_combined(pb, profile, 0.0, g, bc_minus, bc_plus, params);

    CHECK(sup_dist(fil, comb) <= 1e-8);
    CHECK(comb.meta.at("delta_eps") == 0.0);
}

TEST_CASE("combined scheme with small diffusion stays near filippov", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(3.0, 0.05);
    const MixingProfile profile = tanh_profile(0.1);
    const ValueField fil = solve_filippov(pb, profile, g, FarBoundary::fixed(3.95),
                                          FarBoundary::fixed(3.95));
    const ValueField comb = solve_combined(pb, profile, 1e-3, g, 3.95, 3.95);
    CHECK(sup_dist(fil, comb) <= 0.1);
}

TEST_CASE("combined scheme rejects bad parameters", "[schemes]") {
    const TwoDomainProblem pb = builtin_problem(Builtin::pull_pull, 1.0);
    const Grid1D g = Grid1D::make(1.0, 0.05);
    const MixingProfile profile = tanh_profile(0.1);
    CHECK_THROWS_AS(solve_combined(pb, profile, -1.0, g, 0.0, 0.0), std::invalid_argument);

    SchemeParams params;
    params.pseudo_dt = 0.05;  // above 0.9 * h
    CHECK_THROWS_WITH(solve_combined(pb, profile, 0.0, g, 0.0, 0.0, params),
                      ContainsSubstring("CFL"));
}

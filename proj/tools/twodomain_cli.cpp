// Command-line front end: problems and grids in, value fields, trajectories
// and verification reports out. Exit codes: 0 success, 1 numerical failure,
// 2 configuration or parse error.

#include "twodomain/closed_forms.hpp"
#include "twodomain/hjb.hpp"
#include "twodomain/interface_controls.hpp"
#include "twodomain/json_io.hpp"
#include "twodomain/problem.hpp"
#include "twodomain/schemes.hpp"
#include "twodomain/trajectory.hpp"
#include "twodomain/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace twodomain;

struct ProblemArgs {
    std::string source = "pullpull";
    double lambda = 1.0;
    bool lambda_set = false;
    double control_resolution = 1.0;
};

struct GridArgs {
    double xmax = 3.0;
    double h = 1e-3;
};

struct OutputArgs {
    std::string path;  // empty = stdout
    std::string format = "json";
};

void add_problem_options(CLI::App* cmd, ProblemArgs& p) {
    cmd->add_option("--problem", p.source,
                    "builtin name (sc|pushpush|pullpull, long forms accepted) or JSON file")
        ->capture_default_str();
    cmd->add_option("--lambda", p.lambda, "discount rate")
        ->check(CLI::PositiveNumber)
        ->each([&p](const std::string&) { p.lambda_set = true; });
    cmd->add_option("--control-resolution", p.control_resolution,
                    "control grid spacing for builtin problems")
        ->check(CLI::PositiveNumber);
}

void add_grid_options(CLI::App* cmd, GridArgs& g) {
    cmd->add_option("--xmax", g.xmax, "half-width of the truncated domain")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--h", g.h, "grid spacing")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_output_options(CLI::App* cmd, OutputArgs& o) {
    cmd->add_option("--out", o.path, "output file (default: stdout)");
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
}

struct ResolvedProblem {
    ProblemConfig config;
    TwoDomainProblem problem;
    std::optional<Builtin> builtin;
};

ResolvedProblem resolve_problem(const ProblemArgs& a) {
    ResolvedProblem r;
    if (auto b = builtin_from_string(a.source)) {
        r.builtin = *b;
        r.config = ProblemConfig::builtin(*b, a.lambda, a.control_resolution);
    } else {
        std::ifstream in(a.source);
        if (!in) throw std::invalid_argument("cannot open problem file: " + a.source);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("problem file " + a.source + ": " + e.what());
        }
        r.config = ProblemConfig::from_json(j);
        if (a.lambda_set) r.config.lambda = a.lambda;
        if (auto b2 = builtin_from_string(r.config.name)) r.builtin = *b2;
    }
    r.problem = r.config.build();
    return r;
}

void emit(const OutputArgs& o, const std::string& text) {
    if (o.path.empty()) {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(o.path);
    if (!out) throw std::invalid_argument("cannot open output file: " + o.path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

std::string field_text(const ValueField& f, const json& config, const std::string& format) {
    if (format == "csv") {
        std::ostringstream s;
        write_field_csv(s, f, config);
        return s.str();
    }
    return field_to_json(f, config).dump(2);
}

json interface_control_to_json(const InterfaceControl& c) {
    return json{{"alpha1", detail::vec_to_json(c.alpha1)},
                {"alpha2", detail::vec_to_json(c.alpha2)},
                {"mu", c.mu},
                {"d1", c.d1},
                {"d2", c.d2},
                {"regular", c.regular}};
}

// solve ---------------------------------------------------------------------

struct SolveArgs {
    ProblemArgs problem;
    GridArgs grid;
    OutputArgs out;
    std::string field = "assembled";  // assembled|uminus|uplus|sc1|sc2|dirichlet
    int side = 1;
    double boundary = 0.0;
    std::string far = "sc";  // sc|closed_form
    double tol_fp = 1e-10;
    long max_iters = 200000;
};

AssembleOptions far_options(const SolveArgs& a, const ResolvedProblem& rp, const Grid1D& grid) {
    AssembleOptions opt;
    opt.solver.tol_fp = a.tol_fp;
    opt.solver.max_iters = static_cast<int>(a.max_iters);
    if (a.far == "closed_form") {
        if (!rp.builtin)
            throw std::invalid_argument("--far closed_form requires a builtin problem");
        const double L = grid.xmax, lam = rp.config.lambda;
        const auto cf = [&](ClosedFormTarget t) { return closed_form(*rp.builtin, t, lam); };
        opt.far_sc1 = FarBoundary::fixed(cf(ClosedFormTarget::u_sc1)(L));
        opt.far_sc2 = FarBoundary::fixed(cf(ClosedFormTarget::u_sc2)(-L));
        opt.far_minus1 = FarBoundary::fixed(cf(ClosedFormTarget::u_minus)(L));
        opt.far_minus2 = FarBoundary::fixed(cf(ClosedFormTarget::u_minus)(-L));
        opt.far_plus1 = FarBoundary::fixed(cf(ClosedFormTarget::u_plus)(L));
        opt.far_plus2 = FarBoundary::fixed(cf(ClosedFormTarget::u_plus)(-L));
    }
    return opt;
}

int run_solve(const SolveArgs& a) {
    const ResolvedProblem rp = resolve_problem(a.problem);
    const Grid1D grid = Grid1D::make(a.grid.xmax, a.grid.h);
    const json config = rp.config.to_json();
    const AssembleOptions opt = far_options(a, rp, grid);

    if (a.field == "assembled") {
        const Assembled st = assemble_structure(rp.problem, grid, opt);
        std::cerr << st.minus_decision.describe("U-", "u_H") << "; "
                  << st.plus_decision.describe("U+", "u_H_reg") << '\n';
        if (a.out.format == "csv") {
            std::ostringstream s;
            write_field_csv(s, st.u_minus, config);
            s << '\n';
            write_field_csv(s, st.u_plus, config);
            emit(a.out, s.str());
        } else {
            json j{{"config", config},
                   {"u_minus", field_to_json(st.u_minus)},
                   {"u_plus", field_to_json(st.u_plus)},
                   {"u_sc1", field_to_json(st.sc1)},
                   {"u_sc2", field_to_json(st.sc2)},
                   {"decision",
                    {{"u_minus", st.minus_decision.describe("U-", "u_H")},
                     {"u_plus", st.plus_decision.describe("U+", "u_H_reg")},
                     {"u_H", st.mix_all.value},
                     {"u_H_reg", st.mix_regular.value}}}};
            emit(a.out, j.dump(2));
        }
        return 0;
    }

    ValueField f;
    if (a.field == "uminus" || a.field == "uplus") {
        const Assembled st = assemble_structure(rp.problem, grid, opt);
        f = a.field == "uminus" ? st.u_minus : st.u_plus;
        std::cerr << (a.field == "uminus" ? st.minus_decision.describe("U-", "u_H")
                                          : st.plus_decision.describe("U+", "u_H_reg"))
                  << '\n';
    } else if (a.field == "sc1") {
        f = solve_state_constraint(rp.problem, Side::one, grid, opt.far_sc1, opt.solver);
    } else if (a.field == "sc2") {
        f = solve_state_constraint(rp.problem, Side::two, grid, opt.far_sc2, opt.solver);
    } else if (a.field == "dirichlet") {
        const Side s = a.side == 1 ? Side::one : Side::two;
        const FarBoundary far = s == Side::one ? opt.far_minus1 : opt.far_minus2;
        f = solve_dirichlet_halfline(rp.problem, s, a.boundary, grid, far, opt.solver);
    } else {
        throw std::invalid_argument("unknown --field: " + a.field);
    }
    emit(a.out, field_text(f, config, a.out.format));
    return 0;
}

// interface -----------------------------------------------------------------

struct InterfaceArgs {
    ProblemArgs problem;
    OutputArgs out;
};

int run_interface(const InterfaceArgs& a) {
    const ResolvedProblem rp = resolve_problem(a.problem);
    const InterfaceValue all = interface_value(rp.problem, Vec::Zero(1), false);
    const InterfaceValue reg = interface_value(rp.problem, Vec::Zero(1), true);
    json j{{"u_H", all.value},
           {"u_H_reg", reg.value},
           {"minimizer", interface_control_to_json(all.minimizer)},
           {"minimizer_reg", interface_control_to_json(reg.minimizer)},
           {"config", rp.config.to_json()}};
    emit(a.out, j.dump(2));
    return 0;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
    ProblemArgs problem;
    OutputArgs out;
    std::string schedule_path;
    bool best_of = false;
    bool regular_only = false;
    double x0 = 0.0;
    double T = 10.0;
    double dt = 1e-4;
    double snap_tol = 1e-10;
};

int run_simulate(const SimulateArgs& a) {
    const ResolvedProblem rp = resolve_problem(a.problem);
    const json config = rp.config.to_json();

    ControlSchedule schedule;
    std::string description;
    if (a.best_of) {
        StrategyOptions sopt;
        sopt.dt = a.dt;
        sopt.horizon = a.T;
        sopt.snap_tol = a.snap_tol;
        const StrategyResult best =
            best_of_strategies(rp.problem, a.x0, a.regular_only, sopt);
        schedule = best.schedule;
        description = best.description;
    } else {
        if (a.schedule_path.empty())
            throw std::invalid_argument("simulate needs --schedule or --best-of");
        std::ifstream in(a.schedule_path);
        if (!in) throw std::invalid_argument("cannot open schedule file: " + a.schedule_path);
        try {
            schedule = schedule_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("schedule file " + a.schedule_path + ": " + e.what());
        }
    }

    IntegrateOptions iopt;
    iopt.dt = a.dt;
    iopt.snap_tol = a.snap_tol;
    const Trajectory tr =
        integrate(rp.problem, Vec::Constant(1, a.x0), schedule, a.T, iopt);
    const CostBreakdown cb = cost(rp.problem, tr);

    json summary{{"total_cost", tr.total_cost},
                 {"tail_bound", cb.tail_bound},
                 {"regular", classify(tr) == TrajectoryClass::regular},
                 {"max_normal_residual", tr.max_normal_residual},
                 {"mu_violation_count", tr.mu_violation_count},
                 {"steps", tr.steps()},
                 {"schedule", schedule_to_json(schedule)},
                 {"config", config}};
    if (!description.empty()) summary["strategy"] = description;
    if (tr.first_interface_time) summary["first_interface_time"] = *tr.first_interface_time;

    if (a.out.format == "csv") {
        std::ostringstream s;
        write_trajectory_csv(s, tr, config);
        emit(a.out, s.str());
        std::cerr << summary.dump(2) << '\n';
    } else {
        emit(a.out, summary.dump(2));
    }
    return 0;
}

// approx --------------------------------------------------------------------

struct ApproxArgs {
    ProblemArgs problem;
    GridArgs grid;
    OutputArgs out;
    std::string scheme = "filippov";
    std::vector<double> eps;
    std::vector<double> delta_eps;
    std::string profile = "tanh";
    double tol_fp = -1.0;
    long max_iters = 20'000'000;
    int jobs = 1;
};

MixingProfile make_profile(const std::string& name, double eps) {
    if (name == "tanh") return tanh_profile(eps);
    if (name == "algebraic") return algebraic_profile(eps);
    throw std::invalid_argument("unknown profile: " + name);
}

int run_approx(const ApproxArgs& a) {
    if (a.eps.empty()) throw std::invalid_argument("approx needs --eps");
    const ResolvedProblem rp = resolve_problem(a.problem);
    const Grid1D grid = Grid1D::make(a.grid.xmax, a.grid.h);
    const double L = grid.xmax;

    // References for the sweep error columns: closed forms when available,
    // otherwise the assembled grid fields.
    std::function<double(double)> ref_minus, ref_plus;
    if (rp.builtin) {
        const ClosedForm um = closed_form(*rp.builtin, ClosedFormTarget::u_minus,
                                          rp.config.lambda);
        const ClosedForm up = closed_form(*rp.builtin, ClosedFormTarget::u_plus,
                                          rp.config.lambda);
        ref_minus = um.eval;
        ref_plus = up.eval;
    } else {
        const Assembled st = assemble_structure(rp.problem, grid);
        auto um = st.u_minus, up = st.u_plus;
        ref_minus = [um](double x) { return um.value_at(x); };
        ref_plus = [up](double x) { return up.value_at(x); };
    }

    std::vector<double> deltas = a.delta_eps;
    if (a.scheme == "combined") {
        if (deltas.empty()) throw std::invalid_argument("combined scheme needs --delta-eps");
        if (deltas.size() == 1) deltas.assign(a.eps.size(), deltas[0]);
        if (deltas.size() != a.eps.size())
            throw std::invalid_argument("--delta-eps must have 1 entry or match --eps");
    }

    auto solve_one = [&](std::size_t i) {
        const double eps = a.eps[i];
        ValueField f;
        if (a.scheme == "filippov") {
            SolveOptions opt;
            if (a.tol_fp > 0) opt.tol_fp = a.tol_fp;
            opt.max_iters = static_cast<int>(a.max_iters);
            f = solve_filippov(rp.problem, make_profile(a.profile, eps), grid,
                               FarBoundary::fixed(ref_minus(-L)),
                               FarBoundary::fixed(ref_minus(L)), opt);
        } else {
            SchemeParams params;
            if (a.tol_fp > 0) params.tol_fp = a.tol_fp;
            params.max_iters = a.max_iters;
            if (a.scheme == "viscous") {
                f = solve_viscous(rp.problem, eps, grid, ref_plus(-L), ref_plus(L), params);
            } else if (a.scheme == "combined") {
                f = solve_combined(rp.problem, make_profile(a.profile, eps), deltas[i], grid,
                                   ref_minus(-L), ref_minus(L), params);
            } else {
                throw std::invalid_argument("unknown scheme: " + a.scheme);
            }
        }
        double em = 0.0, ep = 0.0;
        for (int g = 0; g <= 2 * grid.n; ++g) {
            const double x = grid.node(g);
            em = std::max(em, std::abs(f.at_node(g) - ref_minus(x)));
            ep = std::max(ep, std::abs(f.at_node(g) - ref_plus(x)));
        }
        json e{{"eps", eps},
               {"sup_err_Uminus", em},
               {"sup_err_Uplus", ep},
               {"iters", static_cast<long>(f.meta.at("iterations"))}};
        if (a.scheme == "combined") e["delta_eps"] = deltas[i];
        return e;
    };

    std::vector<json> entries(a.eps.size());
    if (a.jobs > 1) {
        std::vector<std::future<json>> futs;
        for (std::size_t i = 0; i < a.eps.size(); ++i)
            futs.push_back(std::async(std::launch::async, solve_one, i));
        for (std::size_t i = 0; i < a.eps.size(); ++i) entries[i] = futs[i].get();
    } else {
        for (std::size_t i = 0; i < a.eps.size(); ++i) entries[i] = solve_one(i);
    }

    json j{{"scheme", a.scheme},
           {"profile", a.profile},
           {"grid", {{"xmax", grid.xmax}, {"h", grid.h}}},
           {"config", rp.config.to_json()},
           {"sweep", entries}};
    emit(a.out, j.dump(2));
    return 0;
}

// verify --------------------------------------------------------------------

struct VerifyArgs {
    ProblemArgs problem;
    GridArgs grid;
    OutputArgs out;
    std::string suite = "all";
    bool problem_set = false;
};

int run_verify(const VerifyArgs& a) {
    const Grid1D grid = Grid1D::make(a.grid.xmax, a.grid.h);
    std::vector<Builtin> problems;
    if (a.problem_set) {
        const ResolvedProblem rp = resolve_problem(a.problem);
        if (!rp.builtin)
            throw std::invalid_argument("verify suites run on builtin problems");
        problems = {*rp.builtin};
    } else {
        problems = {Builtin::state_constraint, Builtin::push_push, Builtin::pull_pull};
    }

    std::vector<SuiteReport> reports;
    const bool want_examples = a.suite == "examples" || a.suite == "all";
    const bool want_invariants = a.suite == "invariants" || a.suite == "all";
    const bool want_schemes = a.suite == "schemes" || a.suite == "all";
    for (Builtin b : problems) {
        if (want_examples) {
            SuiteReport r = examples_suite(b, a.problem.lambda, grid);
            r.suite = "examples/" + to_string(b);
            reports.push_back(std::move(r));
        }
        if (want_invariants) {
            // Pin the far data to the exact values: with the plain truncation
            // the grid fields overstate the value near the edges and the
            // global trajectory oracle would flag them.
            InvariantOptions iopt;
            const double L = grid.xmax, lam = a.problem.lambda;
            const auto cf = [&](ClosedFormTarget t) { return closed_form(b, t, lam); };
            iopt.assemble.far_sc1 = FarBoundary::fixed(cf(ClosedFormTarget::u_sc1)(L));
            iopt.assemble.far_sc2 = FarBoundary::fixed(cf(ClosedFormTarget::u_sc2)(-L));
            iopt.assemble.far_minus1 = FarBoundary::fixed(cf(ClosedFormTarget::u_minus)(L));
            iopt.assemble.far_minus2 = FarBoundary::fixed(cf(ClosedFormTarget::u_minus)(-L));
            iopt.assemble.far_plus1 = FarBoundary::fixed(cf(ClosedFormTarget::u_plus)(L));
            iopt.assemble.far_plus2 = FarBoundary::fixed(cf(ClosedFormTarget::u_plus)(-L));
            SuiteReport r =
                invariant_suite(builtin_problem(b, a.problem.lambda,
                                                a.problem.control_resolution),
                                grid, iopt);
            r.suite = "invariants/" + to_string(b);
            reports.push_back(std::move(r));
        }
    }
    if (want_schemes) {
        SuiteReport r = schemes_suite(a.problem.lambda);
        reports.push_back(std::move(r));
    }

    bool all_pass = true;
    json out = json::array();
    for (const SuiteReport& r : reports) {
        all_pass = all_pass && r.all_pass();
        out.push_back(suite_to_json(r));
    }
    emit(a.out, json{{"all_pass", all_pass}, {"reports", out}}.dump(2));
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-domain discounted optimal control: solvers, simulation, verification"};
    app.require_subcommand(1);
    // long-form help only: the default -h short flag would collide with --h
    app.set_help_flag("--help", "print help and exit");
    auto subcommand = [&app](const std::string& name, const std::string& desc) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->set_help_flag("--help", "print help and exit");
        return cmd;
    };

    SolveArgs solve_args;
    CLI::App* solve =
        subcommand("solve", "assemble the two value functions or run single-side solves");
    add_problem_options(solve, solve_args.problem);
    add_grid_options(solve, solve_args.grid);
    add_output_options(solve, solve_args.out);
    solve->add_option("--field", solve_args.field,
                      "assembled|uminus|uplus|sc1|sc2|dirichlet")
        ->check(CLI::IsMember({"assembled", "uminus", "uplus", "sc1", "sc2", "dirichlet"}))
        ->capture_default_str();
    solve->add_option("--side", solve_args.side, "half-line for --field dirichlet")
        ->check(CLI::IsMember({1, 2}));
    solve->add_option("--boundary", solve_args.boundary,
                      "interface value for --field dirichlet");
    solve->add_option("--far", solve_args.far,
                      "far boundary: sc (inward controls) or closed_form (builtin only)")
        ->check(CLI::IsMember({"sc", "closed_form"}))
        ->capture_default_str();
    solve->add_option("--tol-fp", solve_args.tol_fp, "fixed-point tolerance");
    solve->add_option("--max-iters", solve_args.max_iters, "iteration cap");

    InterfaceArgs interface_args;
    CLI::App* interface_cmd =
        subcommand("interface", "interface values u_H and u_H_reg with minimizers");
    add_problem_options(interface_cmd, interface_args.problem);
    add_output_options(interface_cmd, interface_args.out);

    SimulateArgs sim_args;
    CLI::App* simulate = subcommand(
        "simulate", "integrate a controlled trajectory with snap-and-slide interface handling");
    add_problem_options(simulate, sim_args.problem);
    add_output_options(simulate, sim_args.out);
    simulate->add_option("--x0", sim_args.x0, "initial state")->capture_default_str();
    simulate->add_option("--schedule", sim_args.schedule_path, "schedule JSON file");
    simulate->add_flag("--best-of", sim_args.best_of,
                       "pick the cheapest scripted strategy instead of reading a schedule");
    simulate->add_flag("--regular-only", sim_args.regular_only,
                       "restrict --best-of to regular strategies");
    simulate->add_option("--T", sim_args.T, "horizon")->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--dt", sim_args.dt, "integrator step")->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--snap-tol", sim_args.snap_tol, "interface snap tolerance");

    ApproxArgs approx_args;
    CLI::App* approx = subcommand(
        "approx", "regularized-scheme sweeps (filippov, viscous, combined)");
    add_problem_options(approx, approx_args.problem);
    add_grid_options(approx, approx_args.grid);
    add_output_options(approx, approx_args.out);
    approx->add_option("--scheme", approx_args.scheme, "filippov|viscous|combined")
        ->check(CLI::IsMember({"filippov", "viscous", "combined"}))
        ->capture_default_str();
    approx->add_option("--eps", approx_args.eps, "epsilon values")->delimiter(',')->required();
    approx->add_option("--delta-eps", approx_args.delta_eps,
                       "viscosity coefficients for the combined scheme")
        ->delimiter(',');
    approx->add_option("--profile", approx_args.profile, "mixing profile: tanh|algebraic")
        ->check(CLI::IsMember({"tanh", "algebraic"}))
        ->capture_default_str();
    approx->add_option("--tol-fp", approx_args.tol_fp, "residual tolerance (scheme default if unset)");
    approx->add_option("--max-iters", approx_args.max_iters, "iteration cap");
    approx->add_option("--jobs", approx_args.jobs, "parallel solves across the sweep")
        ->check(CLI::PositiveNumber);

    VerifyArgs verify_args;
    CLI::App* verify = subcommand(
        "verify", "closed-form, invariant and scheme suites with pass/fail margins");
    add_problem_options(verify, verify_args.problem);
    verify->get_option("--problem")->each(
        [&verify_args](const std::string&) { verify_args.problem_set = true; });
    add_grid_options(verify, verify_args.grid);
    add_output_options(verify, verify_args.out);
    verify->add_option("--suite", verify_args.suite,
                       "examples|invariants|schemes|all (the schemes suite runs on its own "
                       "grid, xmax 3 and h 5e-3)")
        ->check(CLI::IsMember({"examples", "invariants", "schemes", "all"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed()) return run_solve(solve_args);
        if (interface_cmd->parsed()) return run_interface(interface_args);
        if (simulate->parsed()) return run_simulate(sim_args);
        if (approx->parsed()) return run_approx(approx_args);
        if (verify->parsed()) return run_verify(verify_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

#pragma once

#include "twodomain/grid.hpp"
#include "twodomain/hjb.hpp"
#include "twodomain/problem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twodomain {

/// Smooth monotone switch between the two sides: phi_eps(x) = shape(x/eps),
/// increasing from 0 (deep in side 2) to 1 (deep in side 1).
struct MixingProfile {
    std::function<double(double)> shape;
    double eps = 0.1;
    std::string name = "tanh";

    double operator()(double xn) const { return shape(xn / eps); }

    void validate() const {
        if (!shape) throw std::invalid_argument("MixingProfile: missing shape");
        if (!(eps > 0)) throw std::invalid_argument("MixingProfile: eps must be > 0");
        if (std::abs(shape(-1e6)) > 1e-6 || std::abs(shape(1e6) - 1.0) > 1e-6 ||
            !(shape(-1.0) < shape(1.0)))
            throw std::invalid_argument("MixingProfile: shape must increase from 0 to 1");
    }
};

inline MixingProfile tanh_profile(double eps) {
    return {[](double s) { return 0.5 * (1.0 + std::tanh(s)); }, eps, "tanh"};
}

inline MixingProfile algebraic_profile(double eps) {
    return {[](double s) { return 0.5 * (1.0 + s / std::sqrt(1.0 + s * s)); }, eps, "algebraic"};
}

/// Knobs shared by the relaxation-based schemes. pseudo_dt = 0 picks the
/// largest stable step from the CFL bound; tol_fp is the sup-norm residual of
/// the steady-state equation at which marching stops.
struct SchemeParams {
    double pseudo_dt = 0.0;
    double tol_fp = 1e-5;
    long max_iters = 20'000'000;
    int cascade_levels = -1;  // coarse-grid init levels; -1 = auto, 0 = none
};

namespace detail {

/// (b, l) enumeration of the profile-mixed control pairs at x. Each side
/// Hamiltonian is a max of affine terms, so the phi-weighted combination is
/// the max over A1 x A2 of the pairwise-mixed drift and cost.
inline auto mixed_controls(const TwoDomainProblem& pb, MixingProfile profile) {
    return [&pb, profile](double x, std::vector<std::pair<double, double>>& out) {
        const double phi = profile(x);
        Vec xv = Vec::Constant(1, x);
        Vec b1(1), b2(1);
        for (const Vec& a1 : pb.side1.controls.points()) {
            pb.side1.dynamics(xv, a1, b1);
            const double l1 = pb.side1.cost(xv, a1);
            for (const Vec& a2 : pb.side2.controls.points()) {
                pb.side2.dynamics(xv, a2, b2);
                out.emplace_back(phi * b1[0] + (1.0 - phi) * b2[0],
                                 phi * l1 + (1.0 - phi) * pb.side2.cost(xv, a2));
            }
        }
    };
}

}  // namespace detail

/// Solves phi_eps(x) H1 + (1 - phi_eps(x)) H2 = 0 on the truncated line as a
/// single discounted HJB over control pairs, with the semi-Lagrangian kernel.
inline ValueField solve_filippov(const TwoDomainProblem& pb, const MixingProfile& profile,
                                 const Grid1D& grid, FarBoundary far_minus = {},
                                 FarBoundary far_plus = {}, const SolveOptions& opt = {}) {
    if (pb.dim != 1) throw std::invalid_argument("solve_filippov: one dimension only");
    profile.validate();
    if (!(pb.lambda * grid.h < 1.0))
        throw std::invalid_argument("solve_filippov: need lambda * h < 1");
    detail::SlBuildSpec spec;
    spec.grid = grid;
    spec.g_lo = 0;
    spec.g_hi = 2 * grid.n;
    spec.lambda = pb.lambda;
    spec.controls = detail::mixed_controls(pb, profile);
    if (far_plus.kind == FarBoundary::Kind::dirichlet)
        spec.clamps[2 * grid.n] = far_plus.value;
    else
        spec.restrictions[2 * grid.n] = {-std::numeric_limits<double>::infinity(), grid.xmax};
    if (far_minus.kind == FarBoundary::Kind::dirichlet)
        spec.clamps[0] = far_minus.value;
    else
        spec.restrictions[0] = {-grid.xmax, std::numeric_limits<double>::infinity()};
    detail::SlTable tab = detail::build_sl_table(spec);
    ValueField f;
    f.grid = grid;
    f.kind = FieldKind::filippov;
    f.support = Support::full;
    f.values.assign(tab.nodes, 0.0);
    const auto stats = detail::sl_solve(tab, f.values, opt);
    f.meta["eps"] = profile.eps;
    f.meta["iterations"] = stats.iterations;
    f.meta["residual"] = stats.residual;
    return f;
}

namespace detail {

/// Flattened per-node control data for the upwind marching loops.
struct UpwindTable {
    std::vector<int> offset;   // size nodes + 1
    std::vector<double> b;     // drift
    std::vector<double> l;     // running cost
    double max_abs_b = 0.0;
};

inline UpwindTable build_upwind_table(const TwoDomainProblem& pb, const Grid1D& grid) {
    UpwindTable t;
    const int m = 2 * grid.n + 1;
    t.offset.assign(m + 1, 0);
    Vec xv(1), bv(1);
    for (int j = 0; j < m; ++j) {
        const double x = grid.node(j);
        xv[0] = x;
        // Interface node takes both sides: max(H1, H2) there.
        const bool s1 = x >= 0.0, s2 = x <= 0.0;
        for (int side_tag = 0; side_tag < 2; ++side_tag) {
            if (side_tag == 0 ? !s1 : !s2) continue;
            const SideSpec& side = side_tag == 0 ? pb.side1 : pb.side2;
            for (const Vec& a : side.controls.points()) {
                side.dynamics(xv, a, bv);
                t.b.push_back(bv[0]);
                t.l.push_back(side.cost(xv, a));
                t.max_abs_b = std::max(t.max_abs_b, std::abs(bv[0]));
            }
        }
        t.offset[j + 1] = static_cast<int>(t.b.size());
    }
    return t;
}

inline std::vector<double> linear_init(const Grid1D& grid, double bc_minus, double bc_plus) {
    const int m = 2 * grid.n + 1;
    std::vector<double> u(m);
    for (int j = 0; j < m; ++j) {
        const double w = static_cast<double>(j) / (m - 1);
        u[j] = (1.0 - w) * bc_minus + w * bc_plus;
    }
    return u;
}

/// Midpoint prolongation from a grid with spacing 2h to one with spacing h.
inline std::vector<double> prolong(const std::vector<double>& coarse) {
    std::vector<double> fine(2 * coarse.size() - 1);
    for (std::size_t j = 0; j + 1 < coarse.size(); ++j) {
        fine[2 * j] = coarse[j];
        fine[2 * j + 1] = 0.5 * (coarse[j] + coarse[j + 1]);
    }
    fine.back() = coarse.back();
    return fine;
}

struct MarchStats {
    long iterations = 0;
    double residual = 0.0;
    double pseudo_dt = 0.0;
};

[[noreturn]] inline void march_failure(long iters, const std::vector<double>& history) {
    std::ostringstream msg;
    msg << "pseudo-time marching did not reach tolerance after " << iters
        << " steps; recent residuals:";
    for (double r : history) msg << ' ' << r;
    throw std::runtime_error(msg.str());
}

/// Explicit-Euler relaxation of u_t = eps u'' - H(x, u, u') with per-control
/// upwind differences (forward for b >= 0), Dirichlet ends pinned. Returns
/// when the steady-state residual sup|eps u'' - H| drops to tol.
inline MarchStats march_viscous(const UpwindTable& tab, std::vector<double>& u, double eps,
                                double h, double lambda, double dt, double tol, long max_iters) {
    const int m = static_cast<int>(u.size());
    std::vector<double> unew = u;
    const double ih = 1.0 / h, ih2 = 1.0 / (h * h);
    MarchStats st;
    st.pseudo_dt = dt;
    std::vector<double> history;
    for (long it = 0; it < max_iters; ++it) {
        double resid = 0.0;
        for (int j = 1; j < m - 1; ++j) {
            const double uj = u[j];
            const double duf = (u[j + 1] - uj) * ih;
            const double dub = (uj - u[j - 1]) * ih;
            const double lam_u = lambda * uj;
            double H = -std::numeric_limits<double>::infinity();
            for (int e = tab.offset[j]; e < tab.offset[j + 1]; ++e) {
                const double b = tab.b[e];
                const double du = b >= 0.0 ? duf : dub;
                const double cand = lam_u - b * du - tab.l[e];
                if (cand > H) H = cand;
            }
            const double rhs = eps * (u[j + 1] - 2.0 * uj + u[j - 1]) * ih2 - H;
            resid = std::max(resid, std::abs(rhs));
            unew[j] = uj + dt * rhs;
        }
        u.swap(unew);
        st.iterations = it + 1;
        st.residual = resid;
        if (!std::isfinite(resid)) {
            history.push_back(resid);
            march_failure(st.iterations, history);
        }
        if ((it & 1023) == 0) {
            history.push_back(resid);
            if (history.size() > 12) history.erase(history.begin());
        }
        if (resid <= tol) return st;
    }
    march_failure(st.iterations, history);
}

inline int pick_cascade_levels(int requested, int n) {
    int k = requested >= 0 ? requested : 3;
    while (k > 0 && (n % (1 << k) != 0 || n / (1 << k) < 4)) --k;
    return k;
}

}  // namespace detail

/// Steady state of -eps u'' + H(x, u, u') = 0 on [-L, L] with Dirichlet data,
/// reached by explicit pseudo-time marching under the CFL bound
/// dt <= 0.9 min(h^2/(2 eps), h/max|b|). Coarse-to-fine initialization keeps
/// the stiff fine-grid phase short: each coarser grid is solved first and the
/// finest start is Richardson-extrapolated from the last two levels.
inline ValueField solve_viscous(const TwoDomainProblem& pb, double eps, const Grid1D& grid,
                                double bc_minus, double bc_plus,
                                const SchemeParams& params = {}) {
    if (pb.dim != 1) throw std::invalid_argument("solve_viscous: one dimension only");
    if (!(eps > 0)) throw std::invalid_argument("solve_viscous: eps must be > 0");
    if (!(params.tol_fp > 0) || params.max_iters <= 0)
        throw std::invalid_argument("solve_viscous: tol_fp and max_iters must be positive");

    const int levels = detail::pick_cascade_levels(params.cascade_levels, grid.n);
    std::vector<double> coarse1, coarse2;  // solutions on the two previous levels
    ValueField f;
    long total_iters = 0;
    for (int k = levels; k >= 0; --k) {
        Grid1D g = Grid1D::make(grid.xmax, grid.h * (1 << k));
        const detail::UpwindTable tab = detail::build_upwind_table(pb, g);
        const double cfl = 0.9 * std::min(g.h * g.h / (2.0 * eps),
                                          g.h / std::max(tab.max_abs_b, 1e-300));
        // Default step keeps every update coefficient nonnegative (monotone),
        // which is strictly below the cfl bound above.
        double dt = 0.9 / (2.0 * eps / (g.h * g.h) + tab.max_abs_b / g.h + pb.lambda);
        if (k == 0 && params.pseudo_dt > 0.0) {
            if (params.pseudo_dt > cfl) {
                std::ostringstream msg;
                msg << "solve_viscous: pseudo_dt " << params.pseudo_dt
                    << " violates the CFL bound " << cfl;
                throw std::invalid_argument(msg.str());
            }
            dt = params.pseudo_dt;
        }
        std::vector<double> u;
        if (!coarse1.empty() && !coarse2.empty()) {
            u = detail::prolong(coarse1);
            const std::vector<double> uc = detail::prolong(detail::prolong(coarse2));
            for (std::size_t j = 0; j < u.size(); ++j) u[j] = 2.0 * u[j] - uc[j];
        } else if (!coarse1.empty()) {
            u = detail::prolong(coarse1);
        } else {
            u = detail::linear_init(g, bc_minus, bc_plus);
        }
        u.front() = bc_minus;
        u.back() = bc_plus;
        const double tol = params.tol_fp * (1 << (2 * k));  // coarse levels are only inits
        const auto st = detail::march_viscous(tab, u, eps, g.h, pb.lambda, dt, tol,
                                              params.max_iters - total_iters);
        total_iters += st.iterations;
        if (k == 0) {
            f.grid = g;
            f.kind = FieldKind::viscous;
            f.support = Support::full;
            f.values = std::move(u);
            f.meta["eps"] = eps;
            f.meta["pseudo_dt"] = st.pseudo_dt;
            f.meta["iterations"] = static_cast<double>(total_iters);
            f.meta["residual"] = st.residual;
            f.meta["cascade_levels"] = levels;
        } else {
            coarse2 = std::move(coarse1);
            coarse1 = std::move(u);
        }
    }
    return f;
}

/// Exploratory scheme -delta_eps u'' + phi_eps H1 + (1 - phi_eps) H2 = 0:
/// the same marching as solve_viscous but with the diffusion term added to
/// the semi-Lagrangian form of the mixed Hamiltonian, so delta_eps = 0
/// reproduces the solve_filippov fixed point exactly.
inline ValueField solve_combined(const TwoDomainProblem& pb, const MixingProfile& profile,
                                 double delta_eps, const Grid1D& grid, double bc_minus,
                                 double bc_plus, const SchemeParams& params = {}) {
    if (pb.dim != 1) throw std::invalid_argument("solve_combined: one dimension only");
    profile.validate();
    if (delta_eps < 0) throw std::invalid_argument("solve_combined: delta_eps must be >= 0");
    if (!(params.tol_fp > 0) || params.max_iters <= 0)
        throw std::invalid_argument("solve_combined: tol_fp and max_iters must be positive");
    if (!(pb.lambda * grid.h < 1.0))
        throw std::invalid_argument("solve_combined: need lambda * h < 1");

    detail::SlBuildSpec spec;
    spec.grid = grid;
    spec.g_lo = 0;
    spec.g_hi = 2 * grid.n;
    spec.lambda = pb.lambda;
    spec.controls = detail::mixed_controls(pb, profile);
    spec.clamps[0] = bc_minus;
    spec.clamps[2 * grid.n] = bc_plus;
    const detail::SlTable tab = detail::build_sl_table(spec);

    const double h = grid.h;
    const double cfl = delta_eps > 0 ? 0.9 * std::min(h * h / (2.0 * delta_eps), h) : 0.9 * h;
    double dt = 0.9 / (2.0 * delta_eps / (h * h) + 1.0 / h);
    if (params.pseudo_dt > 0.0) {
        if (params.pseudo_dt > cfl) {
            std::ostringstream msg;
            msg << "solve_combined: pseudo_dt " << params.pseudo_dt
                << " violates the CFL bound " << cfl;
            throw std::invalid_argument(msg.str());
        }
        dt = params.pseudo_dt;
    }

    const int m = 2 * grid.n + 1;
    std::vector<double> u = detail::linear_init(grid, bc_minus, bc_plus);
    u.front() = bc_minus;
    u.back() = bc_plus;
    std::vector<double> unew = u;
    const double ih = 1.0 / h, ih2 = 1.0 / (h * h);
    std::vector<double> history;
    long iters = 0;
    double resid_last = 0.0;
    for (long it = 0; it < params.max_iters; ++it) {
        double resid = 0.0;
        for (int j = 1; j < m - 1; ++j) {
            const double rhs = delta_eps * (u[j + 1] - 2.0 * u[j] + u[j - 1]) * ih2 +
                               (detail::sl_update(tab, u, j) - u[j]) * ih;
            resid = std::max(resid, std::abs(rhs));
            unew[j] = u[j] + dt * rhs;
        }
        u.swap(unew);
        iters = it + 1;
        resid_last = resid;
        if (!std::isfinite(resid)) {
            history.push_back(resid);
            detail::march_failure(iters, history);
        }
        if ((it & 255) == 0) {
            history.push_back(resid);
            if (history.size() > 12) history.erase(history.begin());
        }
        if (resid <= params.tol_fp) break;
        if (it + 1 == params.max_iters) detail::march_failure(iters, history);
    }

    ValueField f;
    f.grid = grid;
    f.kind = FieldKind::combined;
    f.support = Support::full;
    f.values = std::move(u);
    f.meta["eps"] = profile.eps;
    f.meta["delta_eps"] = delta_eps;
    f.meta["pseudo_dt"] = dt;
    f.meta["iterations"] = static_cast<double>(iters);
    f.meta["residual"] = resid_last;
    return f;
}

}  // namespace twodomain

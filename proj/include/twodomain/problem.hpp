#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace twodomain {

using Vec = Eigen::VectorXd;

/// Finite set of admissible control points for one side. Points live in a
/// declared box [lower, upper]; a populated set is nonempty and
/// duplicate-free. Default construction gives an empty placeholder that
/// TwoDomainProblem::validate rejects.
class ControlSet {
public:
    ControlSet() = default;

    ControlSet(std::vector<Vec> points, Vec lower, Vec upper)
        : points_(std::move(points)), lower_(std::move(lower)), upper_(std::move(upper)) {
        if (points_.empty()) throw std::invalid_argument("ControlSet: empty control set");
        if (lower_.size() != upper_.size())
            throw std::invalid_argument("ControlSet: bound dimensions differ");
        for (const Vec& a : points_) {
            if (a.size() != lower_.size())
                throw std::invalid_argument("ControlSet: control dimension differs from bounds");
            for (Eigen::Index k = 0; k < a.size(); ++k)
                if (a[k] < lower_[k] || a[k] > upper_[k])
                    throw std::invalid_argument("ControlSet: control outside declared bounds");
        }
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (std::size_t j = i + 1; j < points_.size(); ++j)
                if (points_[i] == points_[j])
                    throw std::invalid_argument("ControlSet: duplicate control point");
    }

    /// Uniform scalar grid on [lo, hi] with spacing `resolution`.
    /// (hi - lo) / resolution must be integral so both endpoints are grid points.
    static ControlSet uniform_1d(double lo, double hi, double resolution) {
        if (!(resolution > 0) || !(hi > lo))
            throw std::invalid_argument("ControlSet: need hi > lo and resolution > 0");
        const double ratio = (hi - lo) / resolution;
        const double n = std::round(ratio);
        if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
            throw std::invalid_argument("ControlSet: resolution does not divide the interval");
        std::vector<Vec> pts;
        pts.reserve(static_cast<std::size_t>(n) + 1);
        for (long k = 0; k <= static_cast<long>(n); ++k) {
            Vec a(1);
            // Exact endpoints; interior points from the nearest bound to keep the
            // grid symmetric when lo = -hi.
            const double t = static_cast<double>(k) * resolution;
            a[0] = (2.0 * t <= hi - lo) ? lo + t : hi - (n - static_cast<double>(k)) * resolution;
            pts.push_back(a);
        }
        Vec l(1), u(1);
        l[0] = lo;
        u[0] = hi;
        return ControlSet(std::move(pts), std::move(l), std::move(u));
    }

    std::size_t size() const { return points_.size(); }
    const Vec& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Vec>& points() const { return points_; }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }

private:
    std::vector<Vec> points_;
    Vec lower_, upper_;
};

/// Dynamics and running cost of one half-space regime.
/// `dynamics` writes the velocity b(x, a) into `out` (no allocation in hot loops);
/// `cost` returns the running cost l(x, a).
/// velocity_bound and lipschitz_bound are declared constants checked by
/// check_assumptions, not enforced per call.
struct SideSpec {
    std::function<void(const Vec& x, const Vec& a, Vec& out)> dynamics;
    std::function<double(const Vec& x, const Vec& a)> cost;
    ControlSet controls;
    double velocity_bound = 1.0;
    double lipschitz_bound = 0.0;

    Vec velocity(const Vec& x, const Vec& a) const {
        Vec out(x.size());
        dynamics(x, a, out);
        return out;
    }
};

enum class Side { one = 1, two = 2 };

/// Control problem whose dynamics and cost switch across the hyperplane
/// {x_N = 0}: side 1 is active on {x_N > 0}, side 2 on {x_N < 0}.
/// `lambda` is the discount rate (> 0); `delta` is the radius of the velocity
/// ball each side must span near the hyperplane (checked by check_assumptions).
struct TwoDomainProblem {
    int dim = 1;
    SideSpec side1;
    SideSpec side2;
    double lambda = 1.0;
    double delta = 1.0;

    const SideSpec& side(Side s) const { return s == Side::one ? side1 : side2; }
    double normal_component(const Vec& v) const { return v[dim - 1]; }
    double max_velocity_bound() const { return std::max(side1.velocity_bound, side2.velocity_bound); }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("TwoDomainProblem: dim must be >= 1");
        if (!(lambda > 0)) throw std::invalid_argument("TwoDomainProblem: lambda must be > 0");
        if (!(delta > 0)) throw std::invalid_argument("TwoDomainProblem: delta must be > 0");
        if (!side1.dynamics || !side1.cost || !side2.dynamics || !side2.cost)
            throw std::invalid_argument("TwoDomainProblem: missing dynamics or cost");
        if (side1.controls.size() == 0 || side2.controls.size() == 0)
            throw std::invalid_argument("TwoDomainProblem: empty control set");
    }
};

struct HamiltonianQuery {
    Vec x;
    double u = 0.0;
    Vec p;
};

struct HamiltonianValue {
    double value = 0.0;
    std::size_t argmax = 0;  // index into the side's control set
};

/// One-sided Hamiltonian H_i(x, u, p) = max over the side's control grid of
/// -b_i(x,a).p + lambda*u - l_i(x,a), together with a maximizing control index.
inline HamiltonianValue eval_hamiltonian(const TwoDomainProblem& pb, Side s,
                                         const HamiltonianQuery& q) {
    const SideSpec& side = pb.side(s);
    HamiltonianValue best{-std::numeric_limits<double>::infinity(), 0};
    Vec b(pb.dim);
    for (std::size_t k = 0; k < side.controls.size(); ++k) {
        const Vec& a = side.controls[k];
        side.dynamics(q.x, a, b);
        const double v = -b.dot(q.p) + pb.lambda * q.u - side.cost(q.x, a);
        if (v > best.value) best = {v, k};
    }
    return best;
}

/// Coefficients of the running-cost family l(x, a) = c0 + c1*a + c2*exp(-|x|) + c3*|x|
/// used by the built-in problems and by problems loaded from JSON. The matching
/// dynamics are b(x, a) = a (scalar control, one state dimension).
struct CostCoefficients {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

inline SideSpec make_family_side(const CostCoefficients& c, const ControlSet& controls) {
    SideSpec s;
    s.controls = controls;
    s.dynamics = [](const Vec& x, const Vec& a, Vec& out) {
        (void)x;
        out[0] = a[0];
    };
    s.cost = [c](const Vec& x, const Vec& a) {
        const double ax = std::abs(x[0]);
        return c.c0 + c.c1 * a[0] + c.c2 * std::exp(-ax) + c.c3 * ax;
    };
    s.velocity_bound = std::max(std::abs(controls.lower()[0]), std::abs(controls.upper()[0]));
    s.lipschitz_bound = 0.0;
    return s;
}

inline TwoDomainProblem make_family_problem(double lambda, double delta,
                                            const ControlSet& controls,
                                            const CostCoefficients& side1,
                                            const CostCoefficients& side2) {
    TwoDomainProblem pb;
    pb.dim = 1;
    pb.lambda = lambda;
    pb.delta = delta;
    pb.side1 = make_family_side(side1, controls);
    pb.side2 = make_family_side(side2, controls);
    pb.validate();
    return pb;
}

enum class Builtin { state_constraint, push_push, pull_pull };

inline std::optional<Builtin> builtin_from_string(std::string_view name) {
    if (name == "state_constraint" || name == "sc") return Builtin::state_constraint;
    if (name == "push_push" || name == "pushpush") return Builtin::push_push;
    if (name == "pull_pull" || name == "pullpull") return Builtin::pull_pull;
    return std::nullopt;
}

inline std::string to_string(Builtin b) {
    switch (b) {
        case Builtin::state_constraint: return "state_constraint";
        case Builtin::push_push: return "push_push";
        case Builtin::pull_pull: return "pull_pull";
    }
    return "?";
}

/// Cost coefficients (side 1, side 2) of the built-in problems.
inline std::pair<CostCoefficients, CostCoefficients> builtin_coefficients(Builtin which) {
    switch (which) {
        case Builtin::state_constraint: return {{1, -1, 1, 0}, {1, 1, 1, 0}};
        case Builtin::push_push: return {{1, 1, 0, 0}, {1, -1, 0, 0}};
        case Builtin::pull_pull: return {{1, -1, 0, 1}, {1, 1, 0, 1}};
    }
    throw std::invalid_argument("builtin_coefficients: unknown name");
}

/// Built-in one-dimensional problems with b = a on both sides, controls on
/// [-1, 1], delta = 1:
///   state_constraint: l1 = 1 - a + exp(-|x|),  l2 = 1 + a + exp(-|x|)
///                     (both sides are paid for moving toward the interface)
///   push_push:        l1 = 1 + a,              l2 = 1 - a
///                     (moving toward the interface is free, away is costly)
///   pull_pull:        l1 = 1 - a + |x|,        l2 = 1 + a + |x|
///                     (moving away from the interface is rewarded through c1)
/// 1 / control_resolution must be integral so that {-1, 0, 1} are grid points.
inline TwoDomainProblem builtin_problem(Builtin which, double lambda,
                                        double control_resolution = 1.0) {
    if (!(lambda > 0)) throw std::invalid_argument("builtin_problem: lambda must be > 0");
    const double inv = 1.0 / control_resolution;
    if (std::abs(inv - std::round(inv)) > 1e-9)
        throw std::invalid_argument(
            "builtin_problem: control_resolution must divide 1 so {-1,0,1} are grid points");
    ControlSet grid = ControlSet::uniform_1d(-1.0, 1.0, control_resolution);
    const auto [c1, c2] = builtin_coefficients(which);
    return make_family_problem(lambda, 1.0, grid, c1, c2);
}

struct SideAssumptions {
    double max_velocity = 0.0;           // max |b| over samples x controls
    double max_cost = 0.0;               // max |l| over samples x controls
    double max_lipschitz_quotient = 0.0; // max |b(x,a)-b(y,a)| / |x-y| over sample pairs
    bool bounds_ok = true;               // declared velocity_bound / lipschitz_bound respected
};

struct DeltaCheck {
    Vec x;
    Side side = Side::one;
    double support_margin = 0.0;  // min over directions of (support of hull) - delta
    bool ok = true;
};

struct AssumptionReport {
    SideAssumptions side1, side2;
    std::vector<DeltaCheck> delta_checks;
    bool pass = true;
};

namespace detail {

/// Unit directions used for the hull check. Exact {-1,+1} in one dimension;
/// axis directions plus a fixed pseudo-random sample otherwise.
inline std::vector<Vec> hull_directions(int dim) {
    std::vector<Vec> dirs;
    if (dim == 1) {
        Vec d(1);
        d[0] = 1.0;
        dirs.push_back(d);
        d[0] = -1.0;
        dirs.push_back(d);
        return dirs;
    }
    for (int k = 0; k < dim; ++k) {
        Vec d = Vec::Zero(dim);
        d[k] = 1.0;
        dirs.push_back(d);
        d[k] = -1.0;
        dirs.push_back(d);
    }
    std::mt19937 rng(12345);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int s = 0; s < 64; ++s) {
        Vec d(dim);
        for (int k = 0; k < dim; ++k) d[k] = g(rng);
        const double n = d.norm();
        if (n > 1e-12) dirs.push_back(d / n);
    }
    return dirs;
}

}  // namespace detail

/// Samples dynamics and costs at the given states and reports:
///  - the observed velocity / cost / Lipschitz-in-x extrema per side,
///  - whether each declared bound holds within tol,
///  - for each state and side, whether the ball of radius delta sits inside the
///    convex hull of that side's sampled velocities (support-function check:
///    for every direction d, max over controls of b.d must reach delta - tol).
inline AssumptionReport check_assumptions(const TwoDomainProblem& pb,
                                          const std::vector<Vec>& states, double tol) {
    pb.validate();
    AssumptionReport rep;
    const auto dirs = detail::hull_directions(pb.dim);
    for (Side s : {Side::one, Side::two}) {
        const SideSpec& side = pb.side(s);
        SideAssumptions& out = (s == Side::one) ? rep.side1 : rep.side2;
        std::vector<std::vector<Vec>> velocities(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) {
            velocities[i].reserve(side.controls.size());
            for (std::size_t k = 0; k < side.controls.size(); ++k) {
                Vec b = side.velocity(states[i], side.controls[k]);
                out.max_velocity = std::max(out.max_velocity, b.norm());
                out.max_cost = std::max(out.max_cost, std::abs(side.cost(states[i], side.controls[k])));
                velocities[i].push_back(std::move(b));
            }
        }
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j) {
                const double dx = (states[i] - states[j]).norm();
                if (dx < 1e-14) continue;
                for (std::size_t k = 0; k < side.controls.size(); ++k)
                    out.max_lipschitz_quotient =
                        std::max(out.max_lipschitz_quotient,
                                 (velocities[i][k] - velocities[j][k]).norm() / dx);
            }
        out.bounds_ok = out.max_velocity <= side.velocity_bound + tol &&
                        out.max_lipschitz_quotient <= side.lipschitz_bound + tol;
        for (std::size_t i = 0; i < states.size(); ++i) {
            DeltaCheck chk;
            chk.x = states[i];
            chk.side = s;
            double margin = std::numeric_limits<double>::infinity();
            for (const Vec& d : dirs) {
                double support = -std::numeric_limits<double>::infinity();
                for (const Vec& b : velocities[i]) support = std::max(support, b.dot(d));
                margin = std::min(margin, support - pb.delta);
            }
            chk.support_margin = margin;
            chk.ok = margin >= -tol;
            rep.delta_checks.push_back(std::move(chk));
        }
    }
    rep.pass = rep.side1.bounds_ok && rep.side2.bounds_ok;
    for (const DeltaCheck& c : rep.delta_checks) rep.pass = rep.pass && c.ok;
    return rep;
}

/// Max |l_i| over grid-node states in [-box_radius, box_radius]^dim and all
/// controls of both sides. Used for the |u| <= M / lambda and Lipschitz bounds.
inline double cost_bound_on_box(const TwoDomainProblem& pb, double box_radius,
                                int samples_per_dim = 201) {
    if (pb.dim != 1)
        throw std::invalid_argument("cost_bound_on_box: only one state dimension supported");
    double m = 0.0;
    Vec x(1);
    for (int i = 0; i < samples_per_dim; ++i) {
        x[0] = -box_radius + 2.0 * box_radius * i / (samples_per_dim - 1);
        for (Side s : {Side::one, Side::two}) {
            const SideSpec& side = pb.side(s);
            for (std::size_t k = 0; k < side.controls.size(); ++k)
                m = std::max(m, std::abs(side.cost(x, side.controls[k])));
        }
    }
    return m;
}

}  // namespace twodomain

#pragma once

#include "twodomain/interface_controls.hpp"
#include "twodomain/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace twodomain {

/// One piece of a piecewise-constant control schedule.
/// With `mu` set, the pair (alpha1, alpha2, mu) is applied verbatim: off the
/// interface the active side's control drives the state; on the interface the
/// mixed drift mu*b1 + (1-mu)*b2 is applied, and if its normal part is not
/// tangent within tolerance the state leaves through the side it points to
/// (for mu strictly inside (0,1) this is reported as a constraint violation).
/// With `mu` unset ("slide"), the mixing coefficient is recomputed from the
/// one-sided normal drifts at every step while the state is on the interface.
struct ScheduleSegment {
    Vec alpha1, alpha2;
    std::optional<double> mu;

    static ScheduleSegment explicit_mix(double a1, double a2, double mu) {
        ScheduleSegment s;
        s.alpha1 = Vec::Constant(1, a1);
        s.alpha2 = Vec::Constant(1, a2);
        s.mu = mu;
        return s;
    }
    static ScheduleSegment slide(double a1, double a2) {
        ScheduleSegment s;
        s.alpha1 = Vec::Constant(1, a1);
        s.alpha2 = Vec::Constant(1, a2);
        return s;
    }
};

struct ControlSchedule {
    std::vector<double> breakpoints;  // starts at 0, strictly increasing
    std::vector<ScheduleSegment> segments;

    void validate() const {
        if (segments.empty() || breakpoints.size() != segments.size())
            throw std::invalid_argument("ControlSchedule: need one breakpoint per segment");
        if (breakpoints.front() != 0.0)
            throw std::invalid_argument("ControlSchedule: first breakpoint must be 0");
        for (std::size_t i = 1; i < breakpoints.size(); ++i)
            if (!(breakpoints[i] > breakpoints[i - 1]))
                throw std::invalid_argument("ControlSchedule: breakpoints must increase strictly");
    }

    std::size_t segment_at(double t) const {
        std::size_t i = breakpoints.size() - 1;
        while (i > 0 && breakpoints[i] > t) --i;
        return i;
    }
};

enum class Label { omega1, omega2, interface_plane };

inline const char* to_string(Label l) {
    switch (l) {
        case Label::omega1: return "omega1";
        case Label::omega2: return "omega2";
        case Label::interface_plane: return "H";
    }
    return "?";
}

struct IntegrateOptions {
    double dt = 1e-3;
    double snap_tol = 1e-10;  // |x_N| below this snaps to the interface exactly
};

/// Discrete trajectory. Arrays `labels`, `mus`, `step_costs` have one entry per
/// step; `times` and `states` have one entry per sample point (steps + 1).
/// States are stored flat, row-major with stride `dim`.
struct Trajectory {
    int dim = 1;
    double discount = 1.0;
    std::vector<double> times;
    std::vector<double> states;
    std::vector<Label> labels;
    std::vector<double> mus;         // NaN off the interface
    std::vector<double> step_costs;  // discounted contribution of each step
    double total_cost = 0.0;
    bool regular = true;             // no interface step used a singular mix
    double max_normal_residual = 0.0;  // max |normal drift| over interface steps
    double max_running_cost = 0.0;
    std::optional<double> first_interface_time;
    int mu_violation_count = 0;      // explicit mu in (0,1) failed to stay tangent
    double max_mu_violation = 0.0;

    std::size_t steps() const { return labels.size(); }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    Eigen::Map<const Vec> state(std::size_t k) const {
        return Eigen::Map<const Vec>(states.data() + k * dim, dim);
    }
};

enum class TrajectoryClass { regular, singular };

inline TrajectoryClass classify(const Trajectory& t) {
    return t.regular ? TrajectoryClass::regular : TrajectoryClass::singular;
}

struct CostBreakdown {
    double integral = 0.0;    // trapezoid of exp(-lambda t) * running cost
    double tail_bound = 0.0;  // bound on the contribution beyond the horizon
    double total() const { return integral + tail_bound; }
};

/// Tail bound uses the largest running cost sampled along the trajectory;
/// it is a bound on the continuation only when the continuation does not
/// exceed that magnitude (true for the stationary continuations used here).
inline CostBreakdown cost(const TwoDomainProblem& pb, const Trajectory& t) {
    CostBreakdown c;
    c.integral = t.total_cost;
    c.tail_bound = t.max_running_cost * std::exp(-pb.lambda * t.horizon()) / pb.lambda;
    return c;
}

namespace detail {

class Rk4Stepper {
public:
    explicit Rk4Stepper(int dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

    void step(const SideSpec& side, const Vec& a, const Vec& x, double dt, Vec& out) {
        side.dynamics(x, a, k1_);
        tmp_ = x + 0.5 * dt * k1_;
        side.dynamics(tmp_, a, k2_);
        tmp_ = x + 0.5 * dt * k2_;
        side.dynamics(tmp_, a, k3_);
        tmp_ = x + dt * k3_;
        side.dynamics(tmp_, a, k4_);
        out = x + (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    Vec k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace detail

/// Integrates the schedule with fixed-step RK4 away from the interface.
/// A step whose endpoint crosses {x_N = 0} is cut by bisection at the crossing
/// and the normal coordinate is snapped to zero exactly. While snapped, motion
/// and cost follow the mixed interface control (tangential Euler update); the
/// state leaves the interface when the applied mix has a nonzero normal drift
/// or, under a slide directive, when no tangent mix exists (then it exits
/// through the side both drifts point to; with both drifts zero it holds).
inline Trajectory integrate(const TwoDomainProblem& pb, const Vec& x0,
                            const ControlSchedule& schedule, double horizon,
                            const IntegrateOptions& opt = {}) {
    pb.validate();
    schedule.validate();
    if (x0.size() != pb.dim) throw std::invalid_argument("integrate: x0 dimension mismatch");
    if (!(horizon > 0)) throw std::invalid_argument("integrate: horizon must be > 0");
    if (!(opt.dt > 0)) throw std::invalid_argument("integrate: dt must be > 0");

    Trajectory traj;
    traj.dim = pb.dim;
    traj.discount = pb.lambda;
    const std::size_t reserve = static_cast<std::size_t>(horizon / opt.dt) + 8;
    traj.times.reserve(reserve);
    traj.states.reserve(reserve * pb.dim);
    traj.labels.reserve(reserve);
    traj.mus.reserve(reserve);
    traj.step_costs.reserve(reserve);

    Vec x = x0;
    const int nz = pb.dim - 1;
    if (std::abs(x[nz]) <= opt.snap_tol) x[nz] = 0.0;
    double t = 0.0;
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), x.data(), x.data() + pb.dim);
    if (x[nz] == 0.0) traj.first_interface_time = 0.0;

    detail::Rk4Stepper rk4(pb.dim);
    Vec xnew(pb.dim), b1(pb.dim), b2(pb.dim), xtrial(pb.dim);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto running_cost_side = [&](Side s, const Vec& a, const Vec& xx) {
        return pb.side(s).cost(xx, a);
    };

    auto record = [&](double t_end, const Vec& x_end, Label lab, double mu, double l_start,
                      double l_end) {
        const double dt_step = t_end - t;
        const double c = 0.5 * dt_step *
                         (std::exp(-pb.lambda * t) * l_start + std::exp(-pb.lambda * t_end) * l_end);
        traj.times.push_back(t_end);
        traj.states.insert(traj.states.end(), x_end.data(), x_end.data() + pb.dim);
        traj.labels.push_back(lab);
        traj.mus.push_back(mu);
        traj.step_costs.push_back(c);
        traj.total_cost += c;
        traj.max_running_cost =
            std::max({traj.max_running_cost, std::abs(l_start), std::abs(l_end)});
        t = t_end;
        x = x_end;
    };

    while (t < horizon - 1e-12) {
        const std::size_t seg_idx = schedule.segment_at(t + 1e-15);
        const ScheduleSegment& seg = schedule.segments[seg_idx];
        double t_next = std::min(t + opt.dt, horizon);
        if (seg_idx + 1 < schedule.breakpoints.size())
            t_next = std::min(t_next, std::max(schedule.breakpoints[seg_idx + 1], t));
        if (t_next - t < 1e-14) {
            t = t_next;
            continue;
        }
        const double dt_step = t_next - t;

        if (x[nz] == 0.0) {
            pb.side1.dynamics(x, seg.alpha1, b1);
            pb.side2.dynamics(x, seg.alpha2, b2);
            const double d1 = b1[nz], d2 = b2[nz];
            double mu;
            bool on_plane;
            Side exit_side = Side::one;
            if (seg.mu) {
                mu = *seg.mu;
                const double drift_n = mu * d1 + (1.0 - mu) * d2;
                on_plane = std::abs(drift_n) <= opt.snap_tol / dt_step;
                if (!on_plane) {
                    exit_side = drift_n > 0 ? Side::one : Side::two;
                    if (mu > 0.0 && mu < 1.0) {
                        ++traj.mu_violation_count;
                        traj.max_mu_violation = std::max(traj.max_mu_violation, std::abs(drift_n));
                    }
                }
            } else {
                const MixingCoefficient mc = mixing_coefficient(d1, d2);
                switch (mc.kind) {
                    case MixingCoefficient::Kind::value:
                        mu = mc.mu;
                        on_plane = true;
                        break;
                    case MixingCoefficient::Kind::any:
                        // Either endpoint keeps the state tangent; take the cheaper one.
                        mu = pb.side1.cost(x, seg.alpha1) < pb.side2.cost(x, seg.alpha2) ? 1.0 : 0.0;
                        on_plane = true;
                        break;
                    case MixingCoefficient::Kind::none:
                    default:
                        mu = nan;
                        on_plane = false;
                        exit_side = d1 > 0 ? Side::one : Side::two;
                        break;
                }
            }

            if (on_plane) {
                const double drift_n = mu * d1 + (1.0 - mu) * d2;
                traj.max_normal_residual = std::max(traj.max_normal_residual, std::abs(drift_n));
                if (d1 > 0.0 && d2 < 0.0) traj.regular = false;
                xnew = x;
                for (int k = 0; k < nz; ++k)
                    xnew[k] += dt_step * (mu * b1[k] + (1.0 - mu) * b2[k]);
                xnew[nz] = 0.0;
                const double l0 = mu * pb.side1.cost(x, seg.alpha1) +
                                  (1.0 - mu) * pb.side2.cost(x, seg.alpha2);
                const double l1 = mu * pb.side1.cost(xnew, seg.alpha1) +
                                  (1.0 - mu) * pb.side2.cost(xnew, seg.alpha2);
                record(t_next, xnew, Label::interface_plane, mu, l0, l1);
                continue;
            }

            // Exit step: leave through `exit_side` with that side's dynamics.
            const Vec& a = exit_side == Side::one ? seg.alpha1 : seg.alpha2;
            rk4.step(pb.side(exit_side), a, x, dt_step, xnew);
            const double want = exit_side == Side::one ? 1.0 : -1.0;
            if (xnew[nz] * want <= opt.snap_tol) xnew[nz] = 0.0;  // chattering: hold at the plane
            record(t_next, xnew,
                   exit_side == Side::one ? Label::omega1 : Label::omega2, nan,
                   running_cost_side(exit_side, a, x), running_cost_side(exit_side, a, xnew));
            continue;
        }

        // Off the interface: integrate the active side's dynamics.
        const Side active = x[nz] > 0 ? Side::one : Side::two;
        const Vec& a = active == Side::one ? seg.alpha1 : seg.alpha2;
        const double sign = x[nz] > 0 ? 1.0 : -1.0;
        rk4.step(pb.side(active), a, x, dt_step, xnew);
        const bool hit = xnew[nz] * sign <= opt.snap_tol;
        if (!hit) {
            record(t_next, xnew, active == Side::one ? Label::omega1 : Label::omega2, nan,
                   running_cost_side(active, a, x), running_cost_side(active, a, xnew));
            continue;
        }

        // Crossing: bisect the step fraction until the endpoint lands within
        // snap_tol of the plane, then snap.
        double lo = 0.0, hi = 1.0;
        rk4.step(pb.side(active), a, x, hi * dt_step, xtrial);
        for (int it = 0; it < 80 && std::abs(xtrial[nz]) > opt.snap_tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            rk4.step(pb.side(active), a, x, mid * dt_step, xtrial);
            if (xtrial[nz] * sign > opt.snap_tol)
                lo = mid;
            else
                hi = mid;
        }
        if (std::abs(xtrial[nz]) > opt.snap_tol) rk4.step(pb.side(active), a, x, hi * dt_step, xtrial);
        xnew = xtrial;
        xnew[nz] = 0.0;
        const double t_hit = t + hi * dt_step;
        if (!traj.first_interface_time) traj.first_interface_time = t_hit;
        record(std::max(t_hit, t + 1e-15), xnew,
               active == Side::one ? Label::omega1 : Label::omega2, nan,
               running_cost_side(active, a, x), running_cost_side(active, a, xnew));
    }

    if (!traj.first_interface_time) {
        for (std::size_t k = 0; k < traj.times.size(); ++k)
            if (traj.states[k * pb.dim + nz] == 0.0) {
                traj.first_interface_time = traj.times[k];
                break;
            }
    }
    return traj;
}

struct StrategyOptions {
    double dt = 1e-3;
    double horizon = 0.0;  // 0 picks 40 / lambda (discount tail below 1e-17 * M)
    double snap_tol = 1e-10;
};

struct StrategyResult {
    double value = std::numeric_limits<double>::infinity();  // discounted integral of the best run
    double tail_bound = 0.0;
    ControlSchedule schedule;
    std::string description;
    double max_sliding_residual = 0.0;  // over every candidate run
    bool used_singular = false;         // best run slid with a singular mix
};

/// Cheapest member of a family of one-dimensional scripted strategies from x0:
///   - constant control until the horizon (covers never-crossing drifts and
///     plain pass-through descents),
///   - constant control until the first interface hit, then the cheapest
///     tangent mix forever,
///   - from the interface itself, the cheapest tangent mix immediately or a
///     constant-control entry into either side.
/// With regular_only the tangent mixes are restricted to regular ones, making
/// the result an upper bound for the value over non-singular strategies;
/// otherwise it bounds the unrestricted value.
inline StrategyResult best_of_strategies(const TwoDomainProblem& pb, double x0,
                                         bool regular_only, const StrategyOptions& opt = {}) {
    if (pb.dim != 1)
        throw std::invalid_argument("best_of_strategies: only one state dimension supported");
    const double horizon = opt.horizon > 0 ? opt.horizon : 40.0 / pb.lambda;
    const IntegrateOptions iopt{opt.dt, opt.snap_tol};
    Vec start = Vec::Constant(1, x0);

    std::optional<ScheduleSegment> best_slide;
    try {
        const InterfaceValue slide_target = interface_value(pb, Vec::Zero(1), regular_only);
        ScheduleSegment s;
        s.alpha1 = slide_target.minimizer.alpha1;
        s.alpha2 = slide_target.minimizer.alpha2;
        s.mu = slide_target.minimizer.mu;
        best_slide = std::move(s);
    } catch (const std::domain_error&) {
        // No tangent mix at the interface; only constant-control members remain.
    }

    StrategyResult best;
    auto consider = [&](const ControlSchedule& sched, const std::string& desc) {
        Trajectory tr = integrate(pb, start, sched, horizon, iopt);
        best.max_sliding_residual = std::max(best.max_sliding_residual, tr.max_normal_residual);
        const CostBreakdown c = cost(pb, tr);
        if (c.integral < best.value) {
            best.value = c.integral;
            best.tail_bound = c.tail_bound;
            best.schedule = sched;
            best.description = desc;
            best.used_singular = !tr.regular;
        }
        return tr;
    };

    auto const_segment = [&](const Vec& a, double mu) {
        ScheduleSegment s;
        s.alpha1 = a;
        s.alpha2 = a;
        s.mu = mu;
        return s;
    };

    if (x0 == 0.0) {
        if (best_slide) {
            ControlSchedule sched;
            sched.breakpoints = {0.0};
            sched.segments = {*best_slide};
            consider(sched, "slide at the interface");
        }
        for (Side s : {Side::one, Side::two}) {
            const double mu = s == Side::one ? 1.0 : 0.0;
            for (const Vec& a : pb.side(s).controls.points()) {
                ControlSchedule cs;
                cs.breakpoints = {0.0};
                cs.segments = {const_segment(a, mu)};
                consider(cs, "constant control from the interface");
            }
        }
        return best;
    }

    const Side active = x0 > 0 ? Side::one : Side::two;
    const double pass_mu = x0 > 0 ? 0.0 : 1.0;  // crossing continues with the far side
    for (const Vec& a : pb.side(active).controls.points()) {
        ControlSchedule cs;
        cs.breakpoints = {0.0};
        cs.segments = {const_segment(a, pass_mu)};
        Trajectory probe = consider(cs, "constant control");
        if (best_slide && probe.first_interface_time && *probe.first_interface_time > 0.0 &&
            *probe.first_interface_time < horizon) {
            ControlSchedule hs;
            hs.breakpoints = {0.0, *probe.first_interface_time};
            hs.segments = {const_segment(a, pass_mu), *best_slide};
            consider(hs, "constant control until the interface, then slide");
        }
    }
    return best;
}

}  // namespace twodomain

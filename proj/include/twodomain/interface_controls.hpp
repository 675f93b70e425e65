#pragma once

#include "twodomain/problem.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace twodomain {

/// Result of solving mu*d1 + (1-mu)*d2 = 0 for mu in [0, 1], where d_i is the
/// normal drift of side i. `any` means both drifts vanish and every mu works;
/// `none` means the drifts have the same strict sign and no convex mix is
/// tangent to the hyperplane.
struct MixingCoefficient {
    enum class Kind { none, value, any };
    Kind kind = Kind::none;
    double mu = 0.0;
};

inline MixingCoefficient mixing_coefficient(double d1, double d2) {
    if (d1 == 0.0 && d2 == 0.0) return {MixingCoefficient::Kind::any, 0.0};
    if (d1 * d2 > 0.0) return {MixingCoefficient::Kind::none, 0.0};
    // d1 != d2 here, so the affine equation has the unique root below, and
    // d1*d2 <= 0 places it in [0, 1].
    return {MixingCoefficient::Kind::value, -d2 / (d1 - d2)};
}

/// A mixed control (a1, a2, mu) whose combined drift mu*b1 + (1-mu)*b2 is
/// tangent to the hyperplane. `regular` means the one-sided normal drifts do
/// not push toward each other across the interface (d1 <= 0 and d2 >= 0);
/// mixes with d1 > 0 and d2 < 0 hold the state only by opposing pushes.
struct InterfaceControl {
    Vec alpha1, alpha2;
    double mu = 0.0;
    double d1 = 0.0, d2 = 0.0;    // one-sided normal drifts at the anchor state
    double normal_residual = 0.0; // |mu*d1 + (1-mu)*d2|
    bool regular = false;
};

namespace detail {

inline void require_on_interface(const TwoDomainProblem& pb, const Vec& x) {
    if (x.size() != pb.dim) throw std::invalid_argument("state dimension mismatch");
    if (std::abs(pb.normal_component(x)) > 1e-12)
        throw std::invalid_argument("state is not on the interface {x_N = 0}");
}

}  // namespace detail

/// Enumerates all tangent mixes of grid controls at a state on the hyperplane.
/// When both drifts vanish the mix is reported once per endpoint mu in {0, 1}.
/// Each element satisfies normal_residual <= tol.
inline std::vector<InterfaceControl> interface_control_set(const TwoDomainProblem& pb,
                                                           const Vec& x, bool regular_only,
                                                           double tol = 1e-12) {
    detail::require_on_interface(pb, x);
    std::vector<InterfaceControl> out;
    Vec b1(pb.dim), b2(pb.dim);
    for (std::size_t i = 0; i < pb.side1.controls.size(); ++i) {
        pb.side1.dynamics(x, pb.side1.controls[i], b1);
        const double d1 = pb.normal_component(b1);
        for (std::size_t j = 0; j < pb.side2.controls.size(); ++j) {
            pb.side2.dynamics(x, pb.side2.controls[j], b2);
            const double d2 = pb.normal_component(b2);
            const MixingCoefficient mc = mixing_coefficient(d1, d2);
            if (mc.kind == MixingCoefficient::Kind::none) continue;
            const bool regular = d1 <= tol && d2 >= -tol;
            if (regular_only && !regular) continue;
            auto push = [&](double mu) {
                InterfaceControl c;
                c.alpha1 = pb.side1.controls[i];
                c.alpha2 = pb.side2.controls[j];
                c.mu = mu;
                c.d1 = d1;
                c.d2 = d2;
                c.normal_residual = std::abs(mu * d1 + (1.0 - mu) * d2);
                c.regular = regular;
                if (c.normal_residual > tol)
                    throw std::logic_error("interface_control_set: residual exceeds tolerance");
                out.push_back(std::move(c));
            };
            if (mc.kind == MixingCoefficient::Kind::any) {
                push(0.0);
                push(1.0);
            } else {
                push(mc.mu);
            }
        }
    }
    return out;
}

/// Mixed running cost mu*l1 + (1-mu)*l2 of an interface control at x.
inline double mixed_cost(const TwoDomainProblem& pb, const Vec& x, const InterfaceControl& c) {
    return c.mu * pb.side1.cost(x, c.alpha1) + (1.0 - c.mu) * pb.side2.cost(x, c.alpha2);
}

/// Tangential Hamiltonian at a state on the hyperplane:
///   max over tangent mixes of -b_H(x,a) . (p_H, 0) + lambda*u - l_H(x,a)
/// where p_H has dimension N-1 (empty in one dimension) and b_H, l_H are the
/// mixed drift and cost. regular_only restricts the mixes as in
/// interface_control_set. Throws if the admissible set is empty.
inline double tangential_hamiltonian(const TwoDomainProblem& pb, const Vec& x, double u,
                                     const Vec& p_tangential, bool regular_only,
                                     double tol = 1e-12) {
    if (p_tangential.size() != pb.dim - 1)
        throw std::invalid_argument("tangential_hamiltonian: p must have dimension N-1");
    const auto set = interface_control_set(pb, x, regular_only, tol);
    if (set.empty()) {
        std::ostringstream msg;
        msg << "A0 empty at x = " << x.transpose();
        throw std::domain_error(msg.str());
    }
    double best = -std::numeric_limits<double>::infinity();
    Vec b1(pb.dim), b2(pb.dim);
    for (const InterfaceControl& c : set) {
        pb.side1.dynamics(x, c.alpha1, b1);
        pb.side2.dynamics(x, c.alpha2, b2);
        double transport = 0.0;
        for (int k = 0; k + 1 < pb.dim; ++k)
            transport -= (c.mu * b1[k] + (1.0 - c.mu) * b2[k]) * p_tangential[k];
        best = std::max(best, transport + pb.lambda * u - mixed_cost(pb, x, c));
    }
    return best;
}

/// Stationary value of the cheapest tangent mix: value = min l_H / lambda.
struct InterfaceValue {
    double value = 0.0;
    InterfaceControl minimizer;
    bool regular_only = false;
};

/// One-dimensional only: with no tangential directions the tangential equation
/// reduces to lambda*u = min l_H, solved exactly. Ties are broken toward the
/// mix with the smallest |d1| + |d2| so degenerate minimizers report the
/// zero-drift control.
inline InterfaceValue interface_value(const TwoDomainProblem& pb, const Vec& x,
                                      bool regular_only, double tol = 1e-12) {
    if (pb.dim != 1)
        throw std::invalid_argument("interface_value: defined only for one state dimension");
    const auto set = interface_control_set(pb, x, regular_only, tol);
    if (set.empty()) {
        std::ostringstream msg;
        msg << "A0 empty at x = " << x.transpose();
        throw std::domain_error(msg.str());
    }
    InterfaceValue out;
    out.regular_only = regular_only;
    double best_cost = std::numeric_limits<double>::infinity();
    double best_drift = std::numeric_limits<double>::infinity();
    for (const InterfaceControl& c : set) {
        const double lc = mixed_cost(pb, x, c);
        const double drift = std::abs(c.d1) + std::abs(c.d2);
        if (lc < best_cost || (lc == best_cost && drift < best_drift)) {
            best_cost = lc;
            best_drift = drift;
            out.minimizer = c;
        }
    }
    out.value = best_cost / pb.lambda;
    return out;
}

}  // namespace twodomain

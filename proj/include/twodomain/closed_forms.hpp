#pragma once

#include "twodomain/problem.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace twodomain {

/// Quantity a closed-form expression describes for a builtin problem.
enum class ClosedFormTarget { u_minus, u_plus, u_sc1, u_sc2, u_h, u_h_reg };

inline std::string to_string(ClosedFormTarget t) {
    switch (t) {
        case ClosedFormTarget::u_minus: return "U_minus";
        case ClosedFormTarget::u_plus: return "U_plus";
        case ClosedFormTarget::u_sc1: return "U_SC1";
        case ClosedFormTarget::u_sc2: return "U_SC2";
        case ClosedFormTarget::u_h: return "u_H";
        case ClosedFormTarget::u_h_reg: return "u_H_reg";
    }
    return "?";
}

inline ClosedFormTarget closed_form_target_from_string(const std::string& s) {
    if (s == "U_minus" || s == "u_minus" || s == "U-") return ClosedFormTarget::u_minus;
    if (s == "U_plus" || s == "u_plus" || s == "U+") return ClosedFormTarget::u_plus;
    if (s == "U_SC1" || s == "u_sc1" || s == "sc1") return ClosedFormTarget::u_sc1;
    if (s == "U_SC2" || s == "u_sc2" || s == "sc2") return ClosedFormTarget::u_sc2;
    if (s == "u_H" || s == "u_h" || s == "uh") return ClosedFormTarget::u_h;
    if (s == "u_H_reg" || s == "u_h_reg" || s == "uhreg") return ClosedFormTarget::u_h_reg;
    throw std::invalid_argument("unknown closed-form target: " + s);
}

/// Exact reference value of one target for one builtin problem. `eval`
/// accepts x on the target's support (all of [-inf, inf] for the two-sided
/// fields, one half-line for the constrained ones, only x = 0 for the
/// interface scalars). `kinks` lists the points where the spatial derivative
/// jumps, so residual-based checks can skip their neighborhoods.
struct ClosedForm {
    std::function<double(double)> eval;
    std::vector<double> kinks;
    std::string formula;

    double operator()(double x) const { return eval(x); }
};

namespace detail {

inline void require_half_line(double x, bool nonneg, const char* what) {
    if (nonneg ? x < -1e-12 : x > 1e-12)
        throw std::domain_error(std::string(what) + ": x outside the half-line support");
}

}  // namespace detail

/// Closed-form solutions of the builtin problems. Throws if no formula is on
/// record for the requested combination.
inline ClosedForm closed_form(Builtin which, ClosedFormTarget target, double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("closed_form: lambda must be > 0");
    const double L = lambda;
    ClosedForm cf;
    switch (which) {
        case Builtin::state_constraint: {
            switch (target) {
                case ClosedFormTarget::u_minus:
                case ClosedFormTarget::u_plus:
                    cf.eval = [L](double x) { return std::exp(-std::abs(x)) / (1.0 + L); };
                    cf.kinks = {0.0};
                    cf.formula = "exp(-|x|)/(1+lambda)";
                    return cf;
                case ClosedFormTarget::u_sc1:
                    cf.eval = [L](double x) {
                        detail::require_half_line(x, true, "U_SC1");
                        return std::exp(-x) / (1.0 + L);
                    };
                    cf.formula = "exp(-x)/(1+lambda), x >= 0";
                    return cf;
                case ClosedFormTarget::u_sc2:
                    cf.eval = [L](double x) {
                        detail::require_half_line(x, false, "U_SC2");
                        return std::exp(x) / (1.0 + L);
                    };
                    cf.formula = "exp(x)/(1+lambda), x <= 0";
                    return cf;
                case ClosedFormTarget::u_h:
                    cf.eval = [L](double) { return 1.0 / L; };
                    cf.formula = "1/lambda, attained at (1, -1, 1/2)";
                    return cf;
                case ClosedFormTarget::u_h_reg:
                    cf.eval = [L](double) { return 2.0 / L; };
                    cf.formula = "2/lambda, attained at (0, 0, mu)";
                    return cf;
            }
            break;
        }
        case Builtin::push_push: {
            switch (target) {
                case ClosedFormTarget::u_minus:
                case ClosedFormTarget::u_plus:
                    cf.eval = [](double) { return 0.0; };
                    cf.formula = "0";
                    return cf;
                case ClosedFormTarget::u_sc1:
                    cf.eval = [L](double x) {
                        detail::require_half_line(x, true, "U_SC1");
                        return std::exp(-L * x) / L;
                    };
                    cf.formula = "exp(-lambda*x)/lambda, x >= 0";
                    return cf;
                case ClosedFormTarget::u_sc2:
                    cf.eval = [L](double x) {
                        detail::require_half_line(x, false, "U_SC2");
                        return std::exp(L * x) / L;
                    };
                    cf.formula = "exp(lambda*x)/lambda, x <= 0";
                    return cf;
                case ClosedFormTarget::u_h:
                    cf.eval = [](double) { return 0.0; };
                    cf.formula = "0, attained at (-1, 1, 1/2)";
                    return cf;
                case ClosedFormTarget::u_h_reg:
                    cf.eval = [](double) { return 0.0; };
                    cf.formula = "0, attained at (-1, 1, mu)";
                    return cf;
            }
            break;
        }
        case Builtin::pull_pull: {
            // Ride-in-and-mix value, optimal for lambda <= 1 and near the
            // interface for lambda > 1.
            auto ride_in = [L](double x) {
                const double a = std::abs(x);
                return a / L + (2.0 * L - 1.0) / (L * L) * (1.0 - std::exp(-L * a));
            };
            // Ride outward forever; cheaper far from the interface once
            // lambda > 1 because the discount outruns the growing cost.
            auto ride_out = [L](double x) { return std::abs(x) / L + 1.0 / (L * L); };
            // Ride in, then hold position at the interface.
            auto ride_in_hold = [L](double x) {
                const double a = std::abs(x);
                return (a + 1.0) / L - (1.0 - L) / (L * L) * (1.0 - std::exp(-L * a));
            };
            switch (target) {
                case ClosedFormTarget::u_minus:
                    if (L <= 1.0) {
                        cf.eval = ride_in;
                        cf.kinks = {0.0};
                        cf.formula = "|x|/lambda + (2*lambda-1)/lambda^2*(1-exp(-lambda*|x|))";
                    } else {
                        cf.eval = [ride_in, ride_out](double x) {
                            return std::min(ride_in(x), ride_out(x));
                        };
                        const double xs = -std::log((2.0 * L - 2.0) / (2.0 * L - 1.0)) / L;
                        cf.kinks = {-xs, 0.0, xs};
                        cf.formula =
                            "min(|x|/lambda + (2*lambda-1)/lambda^2*(1-exp(-lambda*|x|)), "
                            "|x|/lambda + 1/lambda^2)";
                    }
                    return cf;
                case ClosedFormTarget::u_plus:
                    if (L < 1.0) {
                        cf.eval = ride_in_hold;
                        cf.formula =
                            "(|x|+1)/lambda - (1-lambda)/lambda^2*(1-exp(-lambda*|x|))";
                    } else {
                        cf.eval = ride_out;
                        cf.formula = "|x|/lambda + 1/lambda^2";
                    }
                    cf.kinks = {0.0};
                    return cf;
                case ClosedFormTarget::u_sc1:
                    if (L < 1.0) {
                        cf.eval = [ride_in_hold](double x) {
                            detail::require_half_line(x, true, "U_SC1");
                            return ride_in_hold(x);
                        };
                        cf.formula = "(x+1)/lambda - (1-lambda)/lambda^2*(1-exp(-lambda*x)), x >= 0";
                    } else {
                        cf.eval = [ride_out](double x) {
                            detail::require_half_line(x, true, "U_SC1");
                            return ride_out(x);
                        };
                        cf.formula = "x/lambda + 1/lambda^2, x >= 0";
                    }
                    return cf;
                case ClosedFormTarget::u_sc2:
                    if (L < 1.0) {
                        cf.eval = [ride_in_hold](double x) {
                            detail::require_half_line(x, false, "U_SC2");
                            return ride_in_hold(x);
                        };
                        cf.formula =
                            "(|x|+1)/lambda - (1-lambda)/lambda^2*(1-exp(-lambda*|x|)), x <= 0";
                    } else {
                        cf.eval = [ride_out](double x) {
                            detail::require_half_line(x, false, "U_SC2");
                            return ride_out(x);
                        };
                        cf.formula = "|x|/lambda + 1/lambda^2, x <= 0";
                    }
                    return cf;
                case ClosedFormTarget::u_h:
                    cf.eval = [](double) { return 0.0; };
                    cf.formula = "0, attained at (1, -1, 1/2)";
                    return cf;
                case ClosedFormTarget::u_h_reg:
                    cf.eval = [L](double) { return 1.0 / L; };
                    cf.formula = "1/lambda, attained at (0, 0, mu)";
                    return cf;
            }
            break;
        }
    }
    throw std::invalid_argument("closed_form: no formula recorded for this combination");
}

}  // namespace twodomain

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace twodomain {

/// Uniform symmetric grid on [-xmax, xmax] with 0 as an exact node.
/// xmax / h must be integral; nodes are x_i = -xmax + i*h, i = 0 .. 2n.
struct Grid1D {
    double xmax = 1.0;
    double h = 1e-2;
    int n = 100;  // index of the node at 0; total nodes 2n + 1

    static Grid1D make(double xmax, double h) {
        if (!(xmax > 0) || !(h > 0)) throw std::invalid_argument("Grid1D: need xmax, h > 0");
        const double ratio = xmax / h;
        const double r = std::round(ratio);
        if (std::abs(ratio - r) > 1e-9 * std::max(1.0, ratio))
            throw std::invalid_argument("Grid1D: xmax / h must be integral");
        Grid1D g;
        g.xmax = xmax;
        g.h = h;
        g.n = static_cast<int>(r);
        return g;
    }

    int size() const { return 2 * n + 1; }
    int zero_index() const { return n; }
    double node(int i) const {
        if (i == n) return 0.0;
        return (i - n) * h;  // exact 0 at i = n, symmetric elsewhere
    }

    /// Linear interpolation support of x: base index i and weight w so that a
    /// field value is (1-w)*u[i] + w*u[i+1]. x is clamped to the grid.
    struct Locate {
        int i;
        double w;
    };
    Locate locate(double x) const {
        const double s = (x + xmax) / h;
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, 2 * n - 1);
        double w = s - i;
        w = std::clamp(w, 0.0, 1.0);
        return {i, w};
    }
};

enum class FieldKind { u_minus, u_plus, u_sc1, u_sc2, dirichlet, filippov, viscous, combined };

inline const char* to_string(FieldKind k) {
    switch (k) {
        case FieldKind::u_minus: return "U_minus";
        case FieldKind::u_plus: return "U_plus";
        case FieldKind::u_sc1: return "U_SC1";
        case FieldKind::u_sc2: return "U_SC2";
        case FieldKind::dirichlet: return "dirichlet";
        case FieldKind::filippov: return "filippov";
        case FieldKind::viscous: return "viscous";
        case FieldKind::combined: return "combined";
    }
    return "?";
}

/// Node range a field is defined on: the whole grid, or one closed half-line
/// including the interface node.
enum class Support { full, side1, side2 };

inline const char* to_string(Support s) {
    switch (s) {
        case Support::full: return "full";
        case Support::side1: return "side1";
        case Support::side2: return "side2";
    }
    return "?";
}

/// Grid function with solver metadata. For Support::side1, values[j] sits at
/// x = j*h (nodes n .. 2n of the grid); for side2 at x = -xmax + j*h
/// (nodes 0 .. n); for full at every node.
struct ValueField {
    Grid1D grid;
    FieldKind kind = FieldKind::dirichlet;
    Support support = Support::full;
    std::vector<double> values;
    std::map<std::string, double> meta;

    int first_node() const { return support == Support::side1 ? grid.n : 0; }
    int last_node() const { return support == Support::side2 ? grid.n : 2 * grid.n; }

    double node_x(int j) const { return grid.node(first_node() + j); }
    int size() const { return last_node() - first_node() + 1; }

    void validate() const {
        if (static_cast<int>(values.size()) != size())
            throw std::invalid_argument("ValueField: value count does not match support");
    }

    double& at_node(int grid_index) { return values[grid_index - first_node()]; }
    double at_node(int grid_index) const { return values[grid_index - first_node()]; }

    /// Linear interpolation; x must lie inside the support.
    double value_at(double x) const {
        const double lo = grid.node(first_node());
        const double hi = grid.node(last_node());
        if (x < lo - 1e-12 || x > hi + 1e-12)
            throw std::invalid_argument("ValueField: x outside the field support");
        const auto loc = grid.locate(std::clamp(x, lo, hi));
        const int j = loc.i - first_node();
        if (j < 0) return values.front();
        if (j + 1 >= static_cast<int>(values.size())) return values.back();
        return (1.0 - loc.w) * values[j] + loc.w * values[j + 1];
    }
};

}  // namespace twodomain

#pragma once

#include <array>
#include <cmath>
#include <string>

#include "ldfv/common.hpp"

namespace ldfv {

enum class EquationKind { LinearAdvection, Burgers, Euler1D, Euler2D };

/// Which PDE is solved. Pure value type; all physics operations below are
/// pure functions of (eq, state) and safe to call concurrently.
struct EquationSet {
    EquationKind kind = EquationKind::Burgers;
    double gamma = 1.4;           // Euler kinds only, must be > 1
    double advection_speed = 1.0; // LinearAdvection only

    int nvars() const {
        switch (kind) {
            case EquationKind::LinearAdvection:
            case EquationKind::Burgers: return 1;
            case EquationKind::Euler1D: return 3;
            case EquationKind::Euler2D: return 4;
        }
        return 1;
    }
    int ndim() const { return kind == EquationKind::Euler2D ? 2 : 1; }
    bool is_euler() const { return kind == EquationKind::Euler1D || kind == EquationKind::Euler2D; }

    static EquationSet advection(double a) { return {EquationKind::LinearAdvection, 1.4, a}; }
    static EquationSet burgers() { return {EquationKind::Burgers, 1.4, 0.0}; }
    static EquationSet euler1d(double g = 1.4) {
        if (!(g > 1.0)) throw config_error("euler: gamma must be > 1");
        return {EquationKind::Euler1D, g, 0.0};
    }
    static EquationSet euler2d(double g = 1.4) {
        if (!(g > 1.0)) throw config_error("euler: gamma must be > 1");
        return {EquationKind::Euler2D, g, 0.0};
    }
};

/// Small fixed-size state vector; only the first eq.nvars() entries are used.
/// Euler conserved: (rho, rho u, [rho v,] E);  primitive: (rho, u, [v,] p).
/// For scalar equations u == w.
using State = std::array<double, 4>;

namespace phys {

inline bool admissible(const EquationSet& eq, const State& w) {
    if (!eq.is_euler()) return std::isfinite(w[0]);
    const double rho = w[0];
    if (!(rho > 0.0)) return false;
    double ke;
    if (eq.kind == EquationKind::Euler1D)
        ke = 0.5 * w[1] * w[1] / rho;
    else
        ke = 0.5 * (w[1] * w[1] + w[2] * w[2]) / rho;
    const double E = eq.kind == EquationKind::Euler1D ? w[2] : w[3];
    return E - ke > 0.0 && std::isfinite(E);
}

inline void check_admissible(const EquationSet& eq, const State& w, int i = -1, int j = -1,
                             long step = -1) {
    if (!admissible(eq, w))
        throw admissibility_error(
            "inadmissible state (rho=" + std::to_string(w[0]) + ")" +
                (i >= 0 ? " at cell (" + std::to_string(i) + "," + std::to_string(j) + ")" : "") +
                (step >= 0 ? " at step " + std::to_string(step) : ""),
            i, j, step);
}

/// Pressure from a conserved Euler state.
inline double pressure(const EquationSet& eq, const State& w) {
    const double rho = w[0];
    if (eq.kind == EquationKind::Euler1D) {
        const double u = w[1] / rho;
        return (eq.gamma - 1.0) * (w[2] - 0.5 * rho * u * u);
    }
    const double u = w[1] / rho;
    const double v = w[2] / rho;
    return (eq.gamma - 1.0) * (w[3] - 0.5 * rho * (u * u + v * v));
}

}  // namespace phys

inline State primitive_to_conserved(const EquationSet& eq, const State& u) {
    switch (eq.kind) {
        case EquationKind::LinearAdvection:
        case EquationKind::Burgers: return u;
        case EquationKind::Euler1D: {
            const double rho = u[0], vel = u[1], p = u[2];
            if (!(rho > 0.0) || !(p > 0.0)) throw admissibility_error("primitive_to_conserved: rho or p <= 0");
            return {rho, rho * vel, p / (eq.gamma - 1.0) + 0.5 * rho * vel * vel, 0.0};
        }
        case EquationKind::Euler2D: {
            const double rho = u[0], ux = u[1], uy = u[2], p = u[3];
            if (!(rho > 0.0) || !(p > 0.0)) throw admissibility_error("primitive_to_conserved: rho or p <= 0");
            return {rho, rho * ux, rho * uy, p / (eq.gamma - 1.0) + 0.5 * rho * (ux * ux + uy * uy)};
        }
    }
    return u;
}

inline State conserved_to_primitive(const EquationSet& eq, const State& w) {
    switch (eq.kind) {
        case EquationKind::LinearAdvection:
        case EquationKind::Burgers: return w;
        case EquationKind::Euler1D: {
            phys::check_admissible(eq, w);
            const double rho = w[0], vel = w[1] / w[0];
            return {rho, vel, (eq.gamma - 1.0) * (w[2] - 0.5 * rho * vel * vel), 0.0};
        }
        case EquationKind::Euler2D: {
            phys::check_admissible(eq, w);
            const double rho = w[0], ux = w[1] / rho, uy = w[2] / rho;
            return {rho, ux, uy, (eq.gamma - 1.0) * (w[3] - 0.5 * rho * (ux * ux + uy * uy))};
        }
    }
    return w;
}

/// Physical flux along the requested axis, conserved-state input.
inline State flux(const EquationSet& eq, const State& w, int axis = 0) {
    switch (eq.kind) {
        case EquationKind::LinearAdvection: return {eq.advection_speed * w[0], 0.0, 0.0, 0.0};
        case EquationKind::Burgers: return {0.5 * w[0] * w[0], 0.0, 0.0, 0.0};
        case EquationKind::Euler1D: {
            phys::check_admissible(eq, w);
            const double rho = w[0], u = w[1] / rho;
            const double p = (eq.gamma - 1.0) * (w[2] - 0.5 * rho * u * u);
            return {w[1], w[1] * u + p, (w[2] + p) * u, 0.0};
        }
        case EquationKind::Euler2D: {
            phys::check_admissible(eq, w);
            const double rho = w[0], u = w[1] / rho, v = w[2] / rho;
            const double p = (eq.gamma - 1.0) * (w[3] - 0.5 * rho * (u * u + v * v));
            if (axis == 0) return {w[1], w[1] * u + p, w[2] * u, (w[3] + p) * u};
            return {w[2], w[1] * v, w[2] * v + p, (w[3] + p) * v};
        }
    }
    return {};
}

/// Max characteristic speed along the axis: |f'(w)| for scalars, |v.n| + c for Euler.
inline double max_wave_speed(const EquationSet& eq, const State& w, int axis = 0) {
    switch (eq.kind) {
        case EquationKind::LinearAdvection: return std::abs(eq.advection_speed);
        case EquationKind::Burgers: return std::abs(w[0]);
        case EquationKind::Euler1D: {
            phys::check_admissible(eq, w);
            const double rho = w[0], u = w[1] / rho;
            const double p = (eq.gamma - 1.0) * (w[2] - 0.5 * rho * u * u);
            return std::abs(u) + std::sqrt(eq.gamma * p / rho);
        }
        case EquationKind::Euler2D: {
            phys::check_admissible(eq, w);
            const double rho = w[0], u = w[1] / rho, v = w[2] / rho;
            const double p = (eq.gamma - 1.0) * (w[3] - 0.5 * rho * (u * u + v * v));
            const double vn = axis == 0 ? u : v;
            return std::abs(vn) + std::sqrt(eq.gamma * p / rho);
        }
    }
    return 0.0;
}

// Entropy pair. Scalars: eta = w^2/2 with q = w^3/3 (Burgers) or q = a w^2/2
// (advection). Euler: eta = -rho s, q = -rho s v_axis with the specific
// entropy s = Cv log(p / rho^gamma); Cv is fixed to 1 (only sign and
// monotonicity matter for the penalty).

inline double entropy(const EquationSet& eq, const State& w) {
    switch (eq.kind) {
        case EquationKind::LinearAdvection:
        case EquationKind::Burgers: return 0.5 * w[0] * w[0];
        default: {
            phys::check_admissible(eq, w);
            const double rho = w[0];
            const double p = phys::pressure(eq, w);
            const double s = std::log(p) - eq.gamma * std::log(rho);
            return -rho * s;
        }
    }
}

inline double entropy_flux(const EquationSet& eq, const State& w, int axis = 0) {
    switch (eq.kind) {
        case EquationKind::LinearAdvection: return eq.advection_speed * 0.5 * w[0] * w[0];
        case EquationKind::Burgers: return w[0] * w[0] * w[0] / 3.0;
        default: {
            phys::check_admissible(eq, w);
            const double rho = w[0];
            const double p = phys::pressure(eq, w);
            const double s = std::log(p) - eq.gamma * std::log(rho);
            const double vn = (axis == 0 ? w[1] : w[2]) / rho;
            return -rho * s * vn;
        }
    }
}

// ---------------------------------------------------------------------------
// Analytic Jacobians of the maps above w.r.t. the conserved state, used by the
// reverse-mode tape. Each is verified against central finite differences in
// the test suite.
// ---------------------------------------------------------------------------
namespace phys {

using Jac = std::array<std::array<double, 4>, 4>;

/// d flux(w, axis) / d w.
inline Jac flux_jacobian(const EquationSet& eq, const State& w, int axis = 0) {
    Jac J{};
    const double g = eq.gamma;
    switch (eq.kind) {
        case EquationKind::LinearAdvection: J[0][0] = eq.advection_speed; break;
        case EquationKind::Burgers: J[0][0] = w[0]; break;
        case EquationKind::Euler1D: {
            const double rho = w[0], u = w[1] / rho, E = w[2];
            J[0] = {0.0, 1.0, 0.0, 0.0};
            J[1] = {0.5 * (g - 3.0) * u * u, (3.0 - g) * u, g - 1.0, 0.0};
            J[2] = {(g - 1.0) * u * u * u - g * u * E / rho, g * E / rho - 1.5 * (g - 1.0) * u * u,
                    g * u, 0.0};
            break;
        }
        case EquationKind::Euler2D: {
            const double rho = w[0], u = w[1] / rho, v = w[2] / rho, E = w[3];
            const double q = 0.5 * (u * u + v * v);
            if (axis == 0) {
                J[0] = {0.0, 1.0, 0.0, 0.0};
                J[1] = {(g - 1.0) * q - u * u, (3.0 - g) * u, -(g - 1.0) * v, g - 1.0};
                J[2] = {-u * v, v, u, 0.0};
                J[3] = {u * ((g - 1.0) * 2.0 * q - g * E / rho), g * E / rho - (g - 1.0) * (q + u * u),
                        -(g - 1.0) * u * v, g * u};
            } else {
                J[0] = {0.0, 0.0, 1.0, 0.0};
                J[1] = {-u * v, v, u, 0.0};
                J[2] = {(g - 1.0) * q - v * v, -(g - 1.0) * u, (3.0 - g) * v, g - 1.0};
                J[3] = {v * ((g - 1.0) * 2.0 * q - g * E / rho), -(g - 1.0) * u * v,
                        g * E / rho - (g - 1.0) * (q + v * v), g * v};
            }
            break;
        }
    }
    return J;
}

/// Gradient of max_wave_speed(w, axis) w.r.t. w. Subgradient sign(0) = 0.
inline State wave_speed_gradient(const EquationSet& eq, const State& w, int axis = 0) {
    State gr{};
    switch (eq.kind) {
        case EquationKind::LinearAdvection: break;
        case EquationKind::Burgers: gr[0] = w[0] > 0.0 ? 1.0 : (w[0] < 0.0 ? -1.0 : 0.0); break;
        case EquationKind::Euler1D:
        case EquationKind::Euler2D: {
            const bool two = eq.kind == EquationKind::Euler2D;
            const double g = eq.gamma;
            const double rho = w[0], u = w[1] / rho, v = two ? w[2] / rho : 0.0;
            const double E = two ? w[3] : w[2];
            const double q = 0.5 * (u * u + v * v);
            const double p = (g - 1.0) * (E - rho * q);
            const double c = std::sqrt(g * p / rho);
            const double vn = axis == 0 ? u : v;
            const double sgn = vn > 0.0 ? 1.0 : (vn < 0.0 ? -1.0 : 0.0);
            // d|vn|/dw
            gr[0] = sgn * (-vn / rho);
            gr[axis == 0 ? 1 : (two ? 2 : 1)] += sgn / rho;
            // dc/dw = g/(2c) * d(p/rho)/dw,  p/rho = (g-1)(E/rho - q)
            const double f = g / (2.0 * c) * (g - 1.0);
            gr[0] += f * (-E / (rho * rho) + 2.0 * q / rho);
            gr[1] += f * (-u / rho);
            if (two) gr[2] += f * (-v / rho);
            gr[two ? 3 : 2] += f * (1.0 / rho);
            break;
        }
    }
    return gr;
}

/// d conserved / d primitive.
inline Jac prim_to_cons_jacobian(const EquationSet& eq, const State& u) {
    Jac J{};
    const int n = eq.nvars();
    for (int i = 0; i < n; ++i) J[i][i] = 1.0;
    if (eq.kind == EquationKind::Euler1D) {
        const double rho = u[0], vel = u[1];
        J[1] = {vel, rho, 0.0, 0.0};
        J[2] = {0.5 * vel * vel, rho * vel, 1.0 / (eq.gamma - 1.0), 0.0};
    } else if (eq.kind == EquationKind::Euler2D) {
        const double rho = u[0], ux = u[1], uy = u[2];
        J[1] = {ux, rho, 0.0, 0.0};
        J[2] = {uy, 0.0, rho, 0.0};
        J[3] = {0.5 * (ux * ux + uy * uy), rho * ux, rho * uy, 1.0 / (eq.gamma - 1.0)};
    }
    return J;
}

/// d primitive / d conserved.
inline Jac cons_to_prim_jacobian(const EquationSet& eq, const State& w) {
    Jac J{};
    const int n = eq.nvars();
    for (int i = 0; i < n; ++i) J[i][i] = 1.0;
    if (eq.kind == EquationKind::Euler1D) {
        const double rho = w[0], u = w[1] / rho;
        J[1] = {-u / rho, 1.0 / rho, 0.0, 0.0};
        J[2] = {(eq.gamma - 1.0) * 0.5 * u * u, -(eq.gamma - 1.0) * u, eq.gamma - 1.0, 0.0};
    } else if (eq.kind == EquationKind::Euler2D) {
        const double rho = w[0], u = w[1] / rho, v = w[2] / rho;
        J[1] = {-u / rho, 1.0 / rho, 0.0, 0.0};
        J[2] = {-v / rho, 0.0, 1.0 / rho, 0.0};
        J[3] = {(eq.gamma - 1.0) * 0.5 * (u * u + v * v), -(eq.gamma - 1.0) * u,
                -(eq.gamma - 1.0) * v, eq.gamma - 1.0};
    }
    return J;
}

/// Gradient of entropy(w) w.r.t. conserved w.
inline State entropy_gradient(const EquationSet& eq, const State& w) {
    State gr{};
    switch (eq.kind) {
        case EquationKind::LinearAdvection:
        case EquationKind::Burgers: gr[0] = w[0]; break;
        default: {
            const bool two = eq.kind == EquationKind::Euler2D;
            const double g = eq.gamma;
            const double rho = w[0], u = w[1] / rho, v = two ? w[2] / rho : 0.0;
            const double q = 0.5 * (u * u + v * v);
            const double p = pressure(eq, w);
            const double s = std::log(p) - g * std::log(rho);
            gr[0] = -s - (g - 1.0) * rho * q / p + g;
            gr[1] = (g - 1.0) * rho * u / p;
            if (two) gr[2] = (g - 1.0) * rho * v / p;
            gr[two ? 3 : 2] = -rho * (g - 1.0) / p;
            break;
        }
    }
    return gr;
}

}  // namespace phys
}  // namespace ldfv

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "ldfv/grid.hpp"
#include "ldfv/physics.hpp"

namespace ldfv {

enum class BcType {
    Periodic,
    SupersonicInflow,
    SupersonicOutflow,
    SubsonicInflow,
    SubsonicOutflow,
    Slip,
};

/// One side of the domain. Freestream data is stored as a primitive tuple
/// (rho, u, [v,] p), matching the JSON run-configuration convention.
struct SideBc {
    BcType type = BcType::Periodic;
    State u_inf{};       // SupersonicInflow / SubsonicInflow
    double p_exit = 0.0; // SubsonicOutflow
};

/// Sides indexed left, right, bottom, top. Outward normals are
/// (-1,0), (1,0), (0,-1), (0,1) respectively.
///
/// `solid`, when non-empty, marks interior cells as solid walls (row-major
/// ny x nx, nonzero = solid). Solid faces behave as slip mirrors inside the
/// solver; this is how the forward-facing step geometry is represented.
struct BoundarySpec {
    std::array<SideBc, 4> side{};
    std::vector<uint8_t> solid;

    bool periodic_x() const { return side[0].type == BcType::Periodic; }
    bool periodic_y() const { return side[2].type == BcType::Periodic; }
    bool has_solid() const { return !solid.empty(); }
    bool any_slip() const {
        for (const auto& s : side)
            if (s.type == BcType::Slip) return true;
        return has_solid();
    }

    static BoundarySpec all_periodic() { return BoundarySpec{}; }
    static BoundarySpec all(BcType t) {
        BoundarySpec b;
        for (auto& s : b.side) s.type = t;
        return b;
    }
};

inline void validate_bc(const BoundarySpec& bc, const EquationSet& eq, const GridSpec& g) {
    const int nsides = eq.ndim() == 2 ? 4 : 2;
    for (int s = 0; s < nsides; ++s) {
        const BcType t = bc.side[s].type;
        const int opp = s ^ 1;
        if (t == BcType::Periodic && bc.side[opp].type != BcType::Periodic)
            throw config_error("bc: periodic sides must be paired");
        if (!eq.is_euler() &&
            (t == BcType::SubsonicInflow || t == BcType::SubsonicOutflow ||
             t == BcType::SupersonicInflow || t == BcType::SupersonicOutflow))
            throw config_error("bc: characteristic in/outflow conditions require an Euler equation set");
        if (t == BcType::SubsonicOutflow && !(bc.side[s].p_exit > 0.0))
            throw config_error("bc: subsonic outflow requires p_exit > 0");
        if (t == BcType::SupersonicInflow || t == BcType::SubsonicInflow) {
            const State w = primitive_to_conserved(eq, bc.side[s].u_inf);
            phys::check_admissible(eq, w);
        }
    }
    if (bc.has_solid() && bc.solid.size() != static_cast<size_t>(g.ncell()))
        throw config_error("bc: solid mask shape does not match grid");
}

/// Slip mirror of a conserved Euler state across a wall with unit outward
/// normal n: density, pressure and total energy are preserved, the normal
/// velocity flips sign.
inline State mirror_interface_state(const EquationSet& eq, const State& w,
                                    std::array<double, 2> n) {
    const double nn = n[0] * n[0] + n[1] * n[1];
    if (std::abs(nn - 1.0) > 1e-12) throw config_error("mirror: normal must have unit length");
    if (!eq.is_euler()) {
        // Scalar wall: odd reflection pins w = 0 at the interface.
        return {-w[0], 0.0, 0.0, 0.0};
    }
    State out = w;
    if (eq.kind == EquationKind::Euler1D) {
        const double vn = w[1] * n[0];
        out[1] = w[1] - 2.0 * vn * n[0];
    } else {
        const double vn = w[1] * n[0] + w[2] * n[1];
        out[1] = w[1] - 2.0 * vn * n[0];
        out[2] = w[2] - 2.0 * vn * n[1];
    }
    return out;
}

/// Which representation a field holds; padding formulas differ only in how a
/// primitive ghost state is emitted.
enum class Repr { Conserved, Primitive };

/// Field extended by g ghost layers per side. Accessors take interior indices,
/// so i in [-g, nx+g), j in [-g, ny+g) in 2D (j = 0 only in 1D).
struct PaddedField {
    GridSpec grid;
    int nvars = 1;
    int g = 0;
    std::vector<double> data; // (nvars) x (gny) x (gnx)

    int gnx() const { return grid.nx + 2 * g; }
    int gny() const { return grid.ndim == 2 ? grid.ny + 2 * g : 1; }
    double& at(int v, int j, int i) {
        const int jj = grid.ndim == 2 ? j + g : j;
        return data[(static_cast<size_t>(v) * gny() + jj) * gnx() + (i + g)];
    }
    double at(int v, int j, int i) const {
        const int jj = grid.ndim == 2 ? j + g : j;
        return data[(static_cast<size_t>(v) * gny() + jj) * gnx() + (i + g)];
    }
};

namespace detail {

inline State ghost_state(const EquationSet& eq, const SideBc& sb, std::array<double, 2> n,
                         const State& interior_same_repr, const State& mirror_source,
                         const State& first_interior, Repr repr) {
    // `interior_same_repr` is the first interior cell of the line,
    // `mirror_source` the layered-mirror source cell, both in `repr`.
    switch (sb.type) {
        case BcType::Periodic:
            return interior_same_repr; // unused; periodic handled by wrap
        case BcType::SupersonicInflow:
            return repr == Repr::Conserved ? primitive_to_conserved(eq, sb.u_inf) : sb.u_inf;
        case BcType::SupersonicOutflow:
            return first_interior;
        case BcType::Slip: {
            if (!eq.is_euler()) return {-mirror_source[0], 0.0, 0.0, 0.0};
            if (repr == Repr::Conserved) return mirror_interface_state(eq, mirror_source, n);
            State out = mirror_source;
            if (eq.kind == EquationKind::Euler1D) {
                out[1] = mirror_source[1] - 2.0 * (mirror_source[1] * n[0]) * n[0];
            } else {
                const double vn = mirror_source[1] * n[0] + mirror_source[2] * n[1];
                out[1] = mirror_source[1] - 2.0 * vn * n[0];
                out[2] = mirror_source[2] - 2.0 * vn * n[1];
            }
            return out;
        }
        case BcType::SubsonicInflow:
        case BcType::SubsonicOutflow: {
            const State ui = repr == Repr::Conserved
                                 ? conserved_to_primitive(eq, first_interior)
                                 : first_interior;
            const bool two = eq.kind == EquationKind::Euler2D;
            const double rho_i = ui[0];
            const double p_i = two ? ui[3] : ui[2];
            const double c0 = std::sqrt(eq.gamma * p_i / rho_i);
            const double rho0 = rho_i;
            State up{};
            if (sb.type == BcType::SubsonicInflow) {
                const State& uf = sb.u_inf;
                const double p_f = two ? uf[3] : uf[2];
                const double dvn = two ? ((uf[1] - ui[1]) * n[0] + (uf[2] - ui[2]) * n[1])
                                       : (uf[1] - ui[1]) * n[0];
                const double p_g = 0.5 * (p_f + p_i - rho0 * c0 * dvn);
                up[0] = uf[0] + (p_g - p_f) / (c0 * c0);
                up[1] = uf[1] - n[0] * (p_f - p_g) / (rho0 * c0);
                if (two) {
                    up[2] = uf[2] - n[1] * (p_f - p_g) / (rho0 * c0);
                    up[3] = p_g;
                } else {
                    up[2] = p_g;
                }
            } else {
                const double p_g = sb.p_exit;
                up[0] = rho_i + (p_g - p_i) / (c0 * c0);
                up[1] = ui[1] - n[0] * (p_i - p_g) / (rho0 * c0);
                if (two) {
                    up[2] = ui[2] - n[1] * (p_i - p_g) / (rho0 * c0);
                    up[3] = p_g;
                } else {
                    up[2] = p_g;
                }
            }
            return repr == Repr::Conserved ? primitive_to_conserved(eq, up) : up;
        }
    }
    return interior_same_repr;
}

}  // namespace detail

/// Extend a field by g ghost layers per side. Ghost values are a deterministic
/// function of interior values and the BoundarySpec. In 2D the x-direction is
/// padded first, then the y-direction over the already-extended field, which
/// fixes the corner fill order.
inline PaddedField pad(const Field& f, const BoundarySpec& bc, int g, const EquationSet& eq,
                       Repr repr = Repr::Conserved) {
    if (g < 1) throw config_error("pad: g must be >= 1");
    validate_bc(bc, eq, f.grid);
    const GridSpec& gr = f.grid;
    PaddedField p;
    p.grid = gr;
    p.nvars = f.nvars;
    p.g = g;
    p.data.assign(static_cast<size_t>(f.nvars) * p.gny() * p.gnx(), 0.0);

    const int nx = gr.nx, ny = gr.ny, nv = f.nvars;
    for (int v = 0; v < nv; ++v)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) p.at(v, j, i) = f.at(v, j, i);

    auto get_state = [&](int j, int i) {
        State s{};
        for (int v = 0; v < nv; ++v) s[v] = p.at(v, j, i);
        return s;
    };
    auto put_state = [&](int j, int i, const State& s) {
        for (int v = 0; v < nv; ++v) p.at(v, j, i) = s[v];
    };

    // x direction, interior rows.
    for (int j = 0; j < ny; ++j) {
        for (int k = 1; k <= g; ++k) {
            if (bc.periodic_x()) {
                put_state(j, -k, get_state(j, nx - k));
                put_state(j, nx - 1 + k, get_state(j, k - 1));
            } else {
                put_state(j, -k,
                          detail::ghost_state(eq, bc.side[0], {-1.0, 0.0}, get_state(j, 0),
                                              get_state(j, k - 1), get_state(j, 0), repr));
                put_state(j, nx - 1 + k,
                          detail::ghost_state(eq, bc.side[1], {1.0, 0.0}, get_state(j, nx - 1),
                                              get_state(j, nx - k), get_state(j, nx - 1), repr));
            }
        }
    }

    // y direction over the x-extended field (fills corners).
    if (gr.ndim == 2) {
        for (int i = -g; i < nx + g; ++i) {
            for (int k = 1; k <= g; ++k) {
                if (bc.periodic_y()) {
                    put_state(-k, i, get_state(ny - k, i));
                    put_state(ny - 1 + k, i, get_state(k - 1, i));
                } else {
                    put_state(-k, i,
                              detail::ghost_state(eq, bc.side[2], {0.0, -1.0}, get_state(0, i),
                                                  get_state(k - 1, i), get_state(0, i), repr));
                    put_state(ny - 1 + k, i,
                              detail::ghost_state(eq, bc.side[3], {0.0, 1.0}, get_state(ny - 1, i),
                                                  get_state(ny - k, i), get_state(ny - 1, i), repr));
                }
            }
        }
    }
    return p;
}

}  // namespace ldfv

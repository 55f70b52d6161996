#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldfv/analysis.hpp"
#include "ldfv/boundary.hpp"
#include "ldfv/fv.hpp"
#include "ldfv/grid.hpp"

namespace ldfv {

enum class SymmetryKind {
    None,
    DiagonalSelf,        // data symmetric under transpose with u <-> v
    Rot180Equivariance,  // solver equivariance under the 180-degree rotation
};

/// Canonical test-case definition: initial condition, boundary conditions
/// (mask geometry included), default fine/coarse grids and final time.
struct BenchCase {
    std::string name;
    EquationSet eq;
    std::array<double, 4> bounds{0, 1, 0, 1};
    int fine_nx = 0, fine_ny = 1;
    int coarse_nx = 0, coarse_ny = 1;
    double t_end = 0.0;
    SymmetryKind symmetry = SymmetryKind::None;
    std::function<Field(const GridSpec&, const EquationSet&)> ic;
    std::function<BoundarySpec(const GridSpec&)> bc;
};

// ---------------------------------------------------------------------------
// Quadrant states of the 2D Riemann problems (Lax & Liu 1998 configurations
// 3/4/6/12 as tabulated by Liska & Wendroff 2003). The same table ships as a
// versioned JSON asset with provenance notes in assets/riemann2d_cases.json;
// a unit test keeps the two in sync.
// ---------------------------------------------------------------------------
struct Riemann2dCase {
    int id;
    double t_end;
    // primitive (rho, u, v, p) for quadrants q1..q4
    std::array<std::array<double, 4>, 4> q;
    SymmetryKind symmetry;
};

inline const std::vector<Riemann2dCase>& riemann2d_cases() {
    static const std::vector<Riemann2dCase> cases = {
        {3,
         0.3,
         {{{1.5, 0.0, 0.0, 1.5},
           {0.5323, 1.206, 0.0, 0.3},
           {0.138, 1.206, 1.206, 0.029},
           {0.5323, 0.0, 1.206, 0.3}}},
         SymmetryKind::DiagonalSelf},
        {4,
         0.25,
         {{{1.1, 0.0, 0.0, 1.1},
           {0.5065, 0.8939, 0.0, 0.35},
           {1.1, 0.8939, 0.8939, 1.1},
           {0.5065, 0.0, 0.8939, 0.35}}},
         SymmetryKind::DiagonalSelf},
        {6,
         0.3,
         {{{1.0, 0.75, -0.5, 1.0},
           {2.0, 0.75, 0.5, 1.0},
           {1.0, -0.75, 0.5, 1.0},
           {3.0, -0.75, -0.5, 1.0}}},
         SymmetryKind::Rot180Equivariance},
        {12,
         0.25,
         {{{0.5313, 0.0, 0.0, 0.4},
           {1.0, 0.7276, 0.0, 1.0},
           {0.8, 0.0, 0.0, 1.0},
           {1.0, 0.0, 0.7276, 1.0}}},
         SymmetryKind::DiagonalSelf},
    };
    return cases;
}

namespace detail_bench {

inline Field quadrant_ic(const GridSpec& g, const EquationSet& eq,
                         const std::array<std::array<double, 4>, 4>& q) {
    Field f = make_field(g, 4);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xc(i), y = g.yc(j);
            int which;
            if (x > 0.5)
                which = y > 0.5 ? 0 : 3;
            else
                which = y > 0.5 ? 1 : 2;
            const auto& u = q[which];
            const State w = primitive_to_conserved(eq, {u[0], u[1], u[2], u[3]});
            for (int v = 0; v < 4; ++v) f.at(v, j, i) = w[v];
        }
    return f;
}

inline BoundarySpec transmissive() { return BoundarySpec::all(BcType::SupersonicOutflow); }

}  // namespace detail_bench

/// The canonical cases. Fine grids follow the reference configurations;
/// coarse grids are the run/ML resolutions.
inline std::vector<BenchCase> case_registry() {
    std::vector<BenchCase> reg;

    {
        BenchCase c;
        c.name = "burgers-sine";
        c.eq = EquationSet::burgers();
        c.fine_nx = 1024;
        c.coarse_nx = 32;
        c.t_end = 0.39;
        c.ic = [](const GridSpec& g, const EquationSet&) {
            Field f = make_field(g, 1);
            for (int i = 0; i < g.nx; ++i) f.data[i] = std::sin(2 * M_PI * g.xc(i));
            return f;
        };
        c.bc = [](const GridSpec&) { return BoundarySpec::all_periodic(); };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "burgers-complex";
        c.eq = EquationSet::burgers();
        c.fine_nx = 1024;
        c.coarse_nx = 256;
        c.t_end = 0.39;
        c.ic = [](const GridSpec& g, const EquationSet&) {
            Field f = make_field(g, 1);
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.xc(i);
                double u;
                if ((x >= 3.0 / 8 && x <= 3.5 / 8) || (x > 4.0 / 8 && x <= 4.5 / 8))
                    u = 3.0;
                else if (x > 3.5 / 8 && x < 4.0 / 8)
                    u = 1.0;
                else if (x > 4.5 / 8 && x <= 5.0 / 8)
                    u = 2.0;
                else
                    u = std::sin(8 * M_PI * x);
                f.data[i] = u;
            }
            return f;
        };
        c.bc = [](const GridSpec&) { return BoundarySpec::all_periodic(); };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "sod";
        c.eq = EquationSet::euler1d(1.4);
        c.fine_nx = 1024;
        c.coarse_nx = 128;
        c.t_end = 0.156;
        c.ic = [](const GridSpec& g, const EquationSet& eq) {
            Field f = make_field(g, 3);
            for (int i = 0; i < g.nx; ++i) {
                const bool left = g.xc(i) < 0.5;
                const State u = left ? State{1.0, 0.0, 1.0, 0} : State{0.125, 0.0, 0.1, 0};
                const State w = primitive_to_conserved(eq, u);
                for (int v = 0; v < 3; ++v) f.at(v, 0, i) = w[v];
            }
            return f;
        };
        c.bc = [](const GridSpec&) { return detail_bench::transmissive(); };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "shu-osher";
        c.eq = EquationSet::euler1d(1.4);
        c.fine_nx = 4096;
        c.coarse_nx = 1024;
        c.t_end = 0.156;
        // standard states on [-5, 5] remapped to [0, 1] (x -> 10 x - 5)
        c.ic = [](const GridSpec& g, const EquationSet& eq) {
            Field f = make_field(g, 3);
            for (int i = 0; i < g.nx; ++i) {
                const double xr = 10.0 * g.xc(i) - 5.0;
                const State u = xr < -4.0
                                    ? State{3.857143, 2.629369, 10.33333, 0}
                                    : State{1.0 + 0.2 * std::sin(5.0 * xr), 0.0, 1.0, 0};
                const State w = primitive_to_conserved(eq, u);
                for (int v = 0; v < 3; ++v) f.at(v, 0, i) = w[v];
            }
            return f;
        };
        c.bc = [](const GridSpec&) {
            BoundarySpec bc;
            bc.side[0].type = BcType::SupersonicInflow;
            bc.side[0].u_inf = {3.857143, 2.629369, 10.33333, 0};
            bc.side[1].type = BcType::SupersonicOutflow;
            return bc;
        };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "advect-sine";
        c.eq = EquationSet::advection(1.0);
        c.fine_nx = 1024;
        c.coarse_nx = 256;
        c.t_end = 1.0;
        c.ic = [](const GridSpec& g, const EquationSet&) {
            Field f = make_field(g, 1);
            for (int i = 0; i < g.nx; ++i) f.data[i] = std::sin(2 * M_PI * g.xc(i));
            return f;
        };
        c.bc = [](const GridSpec&) { return BoundarySpec::all_periodic(); };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "euler2d-sine";
        c.eq = EquationSet::euler2d(1.4);
        c.fine_nx = c.fine_ny = 256;
        c.coarse_nx = c.coarse_ny = 64;
        c.t_end = 1.0;
        // advected density sine; +2 offset keeps the density positive
        c.ic = [](const GridSpec& g, const EquationSet& eq) {
            Field f = make_field(g, 4);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const State u{std::sin(2 * M_PI * g.xc(i)) + 2.0, 1.0, 0.0, 1.0};
                    const State w = primitive_to_conserved(eq, u);
                    for (int v = 0; v < 4; ++v) f.at(v, j, i) = w[v];
                }
            return f;
        };
        c.bc = [](const GridSpec&) { return BoundarySpec::all_periodic(); };
        reg.push_back(c);
    }
    for (const auto& rc : riemann2d_cases()) {
        BenchCase c;
        c.name = "riemann2d-" + std::to_string(rc.id);
        c.eq = EquationSet::euler2d(1.4);
        c.fine_nx = c.fine_ny = 512;
        c.coarse_nx = c.coarse_ny = 128;
        c.t_end = rc.t_end;
        c.symmetry = rc.symmetry;
        c.ic = [q = rc.q](const GridSpec& g, const EquationSet& eq) {
            return detail_bench::quadrant_ic(g, eq, q);
        };
        c.bc = [](const GridSpec&) { return detail_bench::transmissive(); };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "explosion";
        c.eq = EquationSet::euler2d(1.4);
        c.fine_nx = c.fine_ny = 256;
        c.coarse_nx = c.coarse_ny = 128;
        c.t_end = 0.25;
        c.symmetry = SymmetryKind::DiagonalSelf;
        c.ic = [](const GridSpec& g, const EquationSet& eq) {
            Field f = make_field(g, 4);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const double dx = g.xc(i) - 0.5, dy = g.yc(j) - 0.5;
                    const bool in = std::sqrt(dx * dx + dy * dy) <= 0.4;
                    const State u =
                        in ? State{1.0, 0.0, 0.0, 1.0} : State{0.125, 0.0, 0.0, 0.1};
                    const State w = primitive_to_conserved(eq, u);
                    for (int v = 0; v < 4; ++v) f.at(v, j, i) = w[v];
                }
            return f;
        };
        c.bc = [](const GridSpec&) { return detail_bench::transmissive(); };
        reg.push_back(c);
    }
    {
        BenchCase c;
        c.name = "forward-step";
        c.eq = EquationSet::euler2d(1.4);
        c.bounds = {0.0, 3.0, 0.0, 1.0};
        c.fine_nx = 384;
        c.fine_ny = 128;
        c.coarse_nx = 192;
        c.coarse_ny = 64;
        c.t_end = 4.0;
        c.ic = [](const GridSpec& g, const EquationSet& eq) {
            Field f = make_field(g, 4);
            const State w = primitive_to_conserved(eq, {1.4, 3.0, 0.0, 1.0});
            for (int v = 0; v < 4; ++v)
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) f.at(v, j, i) = w[v];
            return f;
        };
        // Mach-3 wind tunnel: inflow left, outflow right, slip walls, and the
        // step (x >= 0.6, y <= 0.2) as masked solid cells.
        c.bc = [](const GridSpec& g) {
            BoundarySpec bc;
            bc.side[0].type = BcType::SupersonicInflow;
            bc.side[0].u_inf = {1.4, 3.0, 0.0, 1.0};
            bc.side[1].type = BcType::SupersonicOutflow;
            bc.side[2].type = BcType::Slip;
            bc.side[3].type = BcType::Slip;
            bc.solid.assign(g.ncell(), 0);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    if (g.xc(i) >= 0.6 && g.yc(j) <= 0.2)
                        bc.solid[static_cast<size_t>(j) * g.nx + i] = 1;
            return bc;
        };
        reg.push_back(c);
    }
    return reg;
}

inline const BenchCase& find_case(const std::vector<BenchCase>& reg, const std::string& name) {
    for (const auto& c : reg)
        if (c.name == name) return c;
    throw config_error("unknown bench case: " + name);
}

// ---------------------------------------------------------------------------
// symmetry defects
// ---------------------------------------------------------------------------

/// Transpose with u <-> v swap (the main-diagonal map).
inline Field transpose_swap(const Field& w) {
    if (w.grid.nx != w.grid.ny) throw shape_error("diagonal symmetry needs a square grid");
    Field out = w;
    for (int v = 0; v < w.nvars; ++v) {
        const int pv = v == 1 ? 2 : (v == 2 ? 1 : v);
        for (int j = 0; j < w.grid.ny; ++j)
            for (int i = 0; i < w.grid.nx; ++i) out.at(v, j, i) = w.at(pv, i, j);
    }
    return out;
}

/// 180-degree rotation with (u, v) sign flip.
inline Field rotate180_flip(const Field& w) {
    Field out = w;
    const int nx = w.grid.nx, ny = w.grid.ny;
    for (int v = 0; v < w.nvars; ++v) {
        const double sign = (v == 1 || v == 2) ? -1.0 : 1.0;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out.at(v, j, i) = sign * w.at(v, ny - 1 - j, nx - 1 - i);
    }
    return out;
}

inline double max_abs_diff(const Field& a, const Field& b) {
    require_same_shape(a, b);
    double m = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
    return m;
}

/// Declared-symmetry defect of a case run to t_end on `grid`:
/// DiagonalSelf compares the final state with its own diagonal image;
/// Rot180Equivariance runs the rotated initial data and compares images.
inline double symmetry_defect(const BenchCase& c, const SchemeConfig& cfg, const GridSpec& grid,
                              double t_end) {
    const BoundarySpec bc = c.bc(grid);
    const Field w0 = c.ic(grid, c.eq);
    const Field w1 = simulate(w0, bc, c.eq, cfg, t_end).states.back();
    switch (c.symmetry) {
        case SymmetryKind::DiagonalSelf: return max_abs_diff(w1, transpose_swap(w1));
        case SymmetryKind::Rot180Equivariance: {
            const Field w1r = simulate(rotate180_flip(w0), bc, c.eq, cfg, t_end).states.back();
            return max_abs_diff(w1, rotate180_flip(w1r));
        }
        case SymmetryKind::None: break;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// report output: PPM density maps, contour overlay, centerline CSV slices
// ---------------------------------------------------------------------------

namespace detail_bench {

inline void minmax_masked(const Field& f, int var, const std::vector<uint8_t>& solid, double& mn,
                          double& mx) {
    mn = 1e300;
    mx = -1e300;
    const long nc = f.grid.ncell();
    for (long k = 0; k < nc; ++k) {
        if (!solid.empty() && solid[k]) continue;
        const double x = f.data[static_cast<size_t>(var) * nc + k];
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    if (mx <= mn) mx = mn + 1.0;
}

/// P6 color map of one variable (blue -> white -> red), solid cells black.
inline void write_ppm(const std::string& path, const Field& f, int var,
                      const std::vector<uint8_t>& solid) {
    const int nx = f.grid.nx, ny = std::max(f.grid.ny, 1);
    double mn, mx;
    minmax_masked(f, var, solid, mn, mx);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open for write: " + path);
    os << "P6\n" << nx << " " << ny << "\n255\n";
    const long nc = f.grid.ncell();
    for (int j = ny - 1; j >= 0; --j)
        for (int i = 0; i < nx; ++i) {
            const long k = static_cast<long>(j) * nx + i;
            unsigned char rgb[3] = {0, 0, 0};
            if (solid.empty() || !solid[k]) {
                const double t = (f.data[static_cast<size_t>(var) * nc + k] - mn) / (mx - mn);
                const double r = t < 0.5 ? 2 * t : 1.0;
                const double b = t < 0.5 ? 1.0 : 2 * (1 - t);
                const double g = t < 0.5 ? 2 * t : 2 * (1 - t);
                rgb[0] = static_cast<unsigned char>(255 * std::clamp(r, 0.0, 1.0));
                rgb[1] = static_cast<unsigned char>(255 * std::clamp(g, 0.0, 1.0));
                rgb[2] = static_cast<unsigned char>(255 * std::clamp(b, 0.0, 1.0));
            }
            os.write(reinterpret_cast<char*>(rgb), 3);
        }
}

/// P5 grayscale map with 30-level contour lines drawn black.
inline void write_contour_ppm(const std::string& path, const Field& f, int var,
                              const std::vector<uint8_t>& solid, int levels = 30) {
    const int nx = f.grid.nx, ny = std::max(f.grid.ny, 1);
    double mn, mx;
    minmax_masked(f, var, solid, mn, mx);
    const long nc = f.grid.ncell();
    auto level = [&](int j, int i) {
        const long k = static_cast<long>(j) * nx + i;
        const double t = (f.data[static_cast<size_t>(var) * nc + k] - mn) / (mx - mn);
        return static_cast<int>(std::clamp(t, 0.0, 1.0) * levels);
    };
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open for write: " + path);
    os << "P5\n" << nx << " " << ny << "\n255\n";
    for (int j = ny - 1; j >= 0; --j)
        for (int i = 0; i < nx; ++i) {
            const long k = static_cast<long>(j) * nx + i;
            unsigned char px = 0;
            if (solid.empty() || !solid[k]) {
                const double t = (f.data[static_cast<size_t>(var) * nc + k] - mn) / (mx - mn);
                px = static_cast<unsigned char>(80 + 175 * std::clamp(t, 0.0, 1.0));
                const int lv = level(j, i);
                if ((i + 1 < nx && level(j, i + 1) != lv) || (j + 1 < ny && level(j + 1, i) != lv))
                    px = 0;
            }
            os.write(reinterpret_cast<char*>(&px), 1);
        }
}

inline void write_slice_csv(const std::string& path, const Field& w, const EquationSet& eq) {
    std::ofstream os(path);
    if (!os) throw config_error("cannot open for write: " + path);
    const GridSpec& g = w.grid;
    const int j = g.ndim == 2 ? g.ny / 2 : 0; // centerline in y
    os << (eq.is_euler() ? "x,rho,u,v,p\n" : "x,u\n");
    os.precision(17);
    for (int i = 0; i < g.nx; ++i) {
        State ws{};
        for (int v = 0; v < w.nvars; ++v) ws[v] = w.at(v, j, i);
        if (eq.is_euler()) {
            const State u = conserved_to_primitive(eq, ws);
            const double vy = eq.kind == EquationKind::Euler2D ? u[2] : 0.0;
            const double p = eq.kind == EquationKind::Euler2D ? u[3] : u[2];
            os << g.xc(i) << "," << u[0] << "," << u[1] << "," << vy << "," << p << "\n";
        } else {
            os << g.xc(i) << "," << ws[0] << "\n";
        }
    }
}

inline double masked_l2(const Field& a, const Field& b, const std::vector<uint8_t>& solid,
                        int var) {
    require_same_shape(a, b);
    const long nc = a.grid.ncell();
    KahanSum s;
    long n = 0;
    for (long k = 0; k < nc; ++k) {
        if (!solid.empty() && solid[k]) continue;
        const double d =
            a.data[static_cast<size_t>(var) * nc + k] - b.data[static_cast<size_t>(var) * nc + k];
        s.add(d * d);
        ++n;
    }
    return std::sqrt(s.value() / std::max<long>(n, 1));
}

}  // namespace detail_bench

/// Run one case: simulate on the (possibly overridden) coarse grid, compare
/// against the projected fine classical reference when requested, emit
/// report.json, a centerline slice CSV, and (2D) density maps with a 30-level
/// contour overlay.
inline nlohmann::json run_case(const BenchCase& c, const SchemeConfig& scheme,
                               const std::string& outdir, bool compare_fine = true,
                               std::optional<std::pair<int, int>> grid_override = {},
                               std::optional<double> t_override = {},
                               const std::string& variant_name = "classical") {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const int cnx = grid_override ? grid_override->first : c.coarse_nx;
    const int cny = grid_override ? grid_override->second : c.coarse_ny;
    const double t_end = t_override ? *t_override : c.t_end;
    const GridSpec cg = c.eq.ndim() == 2 ? make_uniform_grid(2, c.bounds, cnx, cny)
                                         : make_uniform_grid(1, {c.bounds[0], c.bounds[1]}, cnx);

    const BoundarySpec bc = c.bc(cg);
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectory tr = simulate(c.ic(cg, c.eq), bc, c.eq, scheme, t_end);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Field& wend = tr.states.back();

    nlohmann::json rep;
    rep["case"] = c.name;
    rep["variant"] = variant_name;
    rep["grid"] = {{"nx", cnx}, {"ny", cny}, {"dx", cg.dx}, {"dy", cg.dy}};
    rep["t_end"] = t_end;
    rep["steps"] = tr.total_steps;
    rep["runtime_s"] = runtime;

    if (compare_fine) {
        if (c.fine_nx % cnx != 0 || (c.eq.ndim() == 2 && c.fine_ny % cny != 0))
            throw config_error("bench: coarse grid must divide the fine grid");
        const GridSpec fg = c.eq.ndim() == 2
                                ? make_uniform_grid(2, c.bounds, c.fine_nx, c.fine_ny)
                                : make_uniform_grid(1, {c.bounds[0], c.bounds[1]}, c.fine_nx);
        SchemeConfig classical = scheme;
        classical.model = nullptr;
        classical.fixed_alpha.reset();
        const Field fine =
            simulate(c.ic(fg, c.eq), c.bc(fg), c.eq, classical, t_end).states.back();
        const int ratio = c.fine_nx / cnx;
        const Field ref = ratio == 1 ? fine : project_fine_to_coarse(fine, ratio);
        rep["l2_density"] = detail_bench::masked_l2(wend, ref, bc.solid, 0);
        rep["l2_all"] = l2_error(wend, ref);
        rep["l1_density"] = l1_error(wend, ref); // all-entry L1 for reference
    }

    if (c.symmetry != SymmetryKind::None && !grid_override) {
        rep["symmetry"] = c.symmetry == SymmetryKind::DiagonalSelf ? "diagonal" : "rot180";
        rep["symmetry_defect"] = symmetry_defect(c, scheme, cg, t_end);
    }

    save_field((fs::path(outdir) / "final.ldfv").string(), wend);
    detail_bench::write_slice_csv((fs::path(outdir) / "slice_centerline.csv").string(), wend, c.eq);
    if (c.eq.ndim() == 2) {
        detail_bench::write_ppm((fs::path(outdir) / "density.ppm").string(), wend, 0, bc.solid);
        detail_bench::write_contour_ppm((fs::path(outdir) / "density_contours.ppm").string(),
                                        wend, 0, bc.solid);
    }
    std::ofstream os(fs::path(outdir) / "report.json");
    os << rep.dump(2) << "\n";
    return rep;
}

}  // namespace ldfv

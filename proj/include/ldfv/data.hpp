#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldfv/boundary.hpp"
#include "ldfv/common.hpp"
#include "ldfv/fv.hpp"
#include "ldfv/grid.hpp"
#include "ldfv/physics.hpp"

namespace ldfv {

enum class BcPhase : uint32_t { Periodic = 0, Slip = 1 };

/// Boundary spec of a dataset phase: periodic everywhere, or slip walls on
/// every active side.
inline BoundarySpec phase_bc(BcPhase phase) {
    return phase == BcPhase::Periodic ? BoundarySpec::all_periodic()
                                      : BoundarySpec::all(BcType::Slip);
}

inline double rect(double x, double x0, double x1) {
    if (x0 > x1) throw config_error("rect: x0 must be <= x1");
    return (x >= x0 && x <= x1) ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// initial-condition generators (domain [0,1]^d, cell-center evaluation)
// ---------------------------------------------------------------------------

namespace ic {

/// Burgers: damped random sine mixture,
/// f(x) = (1 - Rect(0.15,0.35)/2) sum_i a_i sin(2 pi l_i x + phi_i) / 3.
inline Field burgers_modes(const GridSpec& g, const std::vector<double>& a,
                           const std::vector<int>& l, const std::vector<double>& phi) {
    Field f = make_field(g, 1);
    for (int i = 0; i < g.nx; ++i) {
        const double x = g.xc(i);
        double s = 0.0;
        for (size_t m = 0; m < a.size(); ++m) s += a[m] * std::sin(2.0 * M_PI * l[m] * x + phi[m]) / 3.0;
        f.data[i] = (1.0 - 0.5 * rect(x, 0.15, 0.35)) * s;
    }
    return f;
}

inline Field gen_burgers(const GridSpec& g, CounterRng& rng, int nmodes = 20) {
    std::vector<double> a(nmodes), phi(nmodes);
    std::vector<int> l(nmodes);
    for (int m = 0; m < nmodes; ++m) {
        a[m] = rng.uniform(-0.5, 0.5);
        phi[m] = rng.uniform(0.0, 2.0 * M_PI);
        l[m] = rng.uniform_int(4, nmodes);
    }
    return burgers_modes(g, a, l, phi);
}

/// Euler 1D f1: offset sines in every primitive variable.
inline Field euler1d_f1(const GridSpec& g, const EquationSet& eq, std::array<double, 3> phi,
                        std::array<double, 3> h) {
    Field f = make_field(g, 3);
    for (int i = 0; i < g.nx; ++i) {
        const double x = g.xc(i);
        const State u{std::sin(2 * M_PI * x + phi[0] * M_PI) + 1.2 + h[0],
                      std::sin(2 * M_PI * x + phi[1] * M_PI) + 1.0 + h[1],
                      std::sin(2 * M_PI * x + phi[2] * M_PI) + 1.0 + h[2], 0.0};
        const State w = primitive_to_conserved(eq, u);
        for (int v = 0; v < 3; ++v) f.at(v, 0, i) = w[v];
    }
    return f;
}

/// Euler 1D f2: half-domain Riemann states via Rect(x0, 1).
inline Field euler1d_f2(const GridSpec& g, const EquationSet& eq, double x0,
                        std::array<double, 3> a, std::array<double, 3> h) {
    Field f = make_field(g, 3);
    for (int i = 0; i < g.nx; ++i) {
        const double r = rect(g.xc(i), x0, 1.0);
        const State u{(a[0] - 0.5) * r + h[0] + 0.7, a[1] * r,
                      -(a[2] - 0.5) * r + 2.0 * h[2] + 0.7, 0.0};
        const State w = primitive_to_conserved(eq, u);
        for (int v = 0; v < 3; ++v) f.at(v, 0, i) = w[v];
    }
    return f;
}

/// Euler 1D f3: pulse via Rect(x0, x1), 0.2 <= |x1 - x0| <= 0.8.
inline Field euler1d_f3(const GridSpec& g, const EquationSet& eq, double x0, double x1,
                        std::array<double, 3> a, std::array<double, 3> h) {
    Field f = make_field(g, 3);
    for (int i = 0; i < g.nx; ++i) {
        const double r = rect(g.xc(i), x0, x1);
        const State u{a[0] * r + h[0] + 0.1, a[1] * r + h[1], a[2] * r + h[2], 0.0};
        const State w = primitive_to_conserved(eq, u);
        for (int v = 0; v < 3; ++v) f.at(v, 0, i) = w[v];
    }
    return f;
}

inline Field gen_euler1d(const GridSpec& g, const EquationSet& eq, CounterRng& rng, int kind) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        try {
            if (kind == 0) {
                std::array<double, 3> phi{rng.u01(), rng.u01(), rng.u01()};
                std::array<double, 3> h{rng.u01(), rng.u01(), rng.u01()};
                return euler1d_f1(g, eq, phi, h);
            }
            if (kind == 1) {
                const double x0 = rng.u01();
                std::array<double, 3> a{rng.u01(), rng.u01(), rng.u01()};
                std::array<double, 3> h{rng.u01(), rng.u01(), rng.u01()};
                return euler1d_f2(g, eq, x0, a, h);
            }
            double x0 = rng.u01(), x1 = rng.u01();
            while (std::abs(x0 - x1) < 0.2 || std::abs(x0 - x1) > 0.8) {
                x0 = rng.u01();
                x1 = rng.u01();
            }
            if (x0 > x1) std::swap(x0, x1);
            std::array<double, 3> a{rng.u01(), rng.u01(), rng.u01()};
            std::array<double, 3> h{rng.u01(), rng.u01(), rng.u01()};
            return euler1d_f3(g, eq, x0, x1, a, h);
        } catch (const admissibility_error&) {
            continue; // rejected draw, redraw from the same stream
        }
    }
    throw config_error("euler1d ic: rejection sampling did not converge");
}

/// Quadrant-plus-circle selector C(x, p).
inline double quadrant_circle(double x, double y, const std::array<double, 5>& p) {
    const double dx = x - 0.5, dy = y - 0.5;
    if (std::sqrt(dx * dx + dy * dy) <= 0.125) return p[0];
    if (x < 0.5 && y < 0.5) return p[1];
    if (x >= 0.5 && y < 0.5) return p[2];
    if (x < 0.5 && y >= 0.5) return p[3];
    return p[4];
}

/// L1-ball selector R(x, p).
inline double square_l1(double x, double y, const std::array<double, 2>& p) {
    return (std::abs(x - 0.5) + std::abs(y - 0.5) <= 0.2) ? p[0] : p[1];
}

inline Field gen_euler2d(const GridSpec& g, const EquationSet& eq, CounterRng& rng, int kind) {
    auto draw5 = [&](double scale, double shift) {
        std::array<double, 5> p{};
        for (auto& v : p) v = scale * rng.u01() + shift;
        return p;
    };
    auto draw2 = [&](double scale, double shift) {
        std::array<double, 2> p{};
        for (auto& v : p) v = scale * rng.u01() + shift;
        return p;
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
        try {
            Field f = make_field(g, 4);
            if (kind == 0) {
                std::array<double, 8> a{}, phi{};
                for (auto& v : a) v = rng.u01();
                for (auto& v : phi) v = rng.u01();
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        const double x = g.xc(i), y = g.yc(j);
                        const State u{
                            a[0] * std::sin(4 * M_PI * x + phi[0] * M_PI) +
                                a[1] * std::sin(4 * M_PI * y + phi[1] * M_PI) + 2.0,
                            2 * (a[2] - 0.5) * std::sin(4 * M_PI * x + phi[2] * M_PI) +
                                2 * (a[3] - 0.5) * std::sin(4 * M_PI * y + phi[3] * M_PI),
                            2 * (a[4] - 0.5) * std::sin(4 * M_PI * x + phi[4] * M_PI) +
                                2 * (a[5] - 0.5) * std::sin(4 * M_PI * y + phi[5] * M_PI),
                            a[6] * std::sin(4 * M_PI * x + phi[6] * M_PI) +
                                a[6] * std::sin(4 * M_PI * y + phi[7] * M_PI) + 2.0};
                        const State w = primitive_to_conserved(eq, u);
                        for (int v = 0; v < 4; ++v) f.at(v, j, i) = w[v];
                    }
            } else if (kind == 1) {
                const auto prho = draw5(0.5, 0.5);
                auto pu = draw5(2.0, 0.0), pv = draw5(2.0, 0.0);
                for (auto& v : pu) v -= 2.0; // 2 (p - 1)
                for (auto& v : pv) v -= 2.0;
                const auto pp = draw5(0.8, 0.2);
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        const double x = g.xc(i), y = g.yc(j);
                        const State u{quadrant_circle(x, y, prho), quadrant_circle(x, y, pu),
                                      quadrant_circle(x, y, pv), quadrant_circle(x, y, pp)};
                        const State w = primitive_to_conserved(eq, u);
                        for (int v = 0; v < 4; ++v) f.at(v, j, i) = w[v];
                    }
            } else {
                const auto prho = draw2(1.0, 0.5);
                auto pu = draw2(2.0, 0.0), pv = draw2(2.0, 0.0);
                for (auto& v : pu) v -= 2.0;
                for (auto& v : pv) v -= 2.0;
                const auto pp = draw2(1.0, 0.5);
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        const double x = g.xc(i), y = g.yc(j);
                        const State u{square_l1(x, y, prho), square_l1(x, y, pu),
                                      square_l1(x, y, pv), square_l1(x, y, pp)};
                        const State w = primitive_to_conserved(eq, u);
                        for (int v = 0; v < 4; ++v) f.at(v, j, i) = w[v];
                    }
            }
            return f;
        } catch (const admissibility_error&) {
            continue;
        }
    }
    throw config_error("euler2d ic: rejection sampling did not converge");
}

/// Largest-remainder allocation of n_ic initial conditions to mixture parts.
inline std::vector<int> mixture_counts(int n_ic, const std::vector<double>& weights) {
    std::vector<int> counts(weights.size(), 0);
    std::vector<std::pair<double, size_t>> rema;
    int total = 0;
    for (size_t k = 0; k < weights.size(); ++k) {
        const double exact = weights[k] * n_ic;
        counts[k] = static_cast<int>(std::floor(exact));
        total += counts[k];
        rema.push_back({exact - counts[k], k});
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int r = 0; r < n_ic - total; ++r) counts[rema[r % rema.size()].second] += 1;
    return counts;
}

/// IC kind of the ic_index-th draw under the equation's mixture.
inline int mixture_kind(const EquationSet& eq, int n_ic, int ic_index) {
    std::vector<double> w;
    switch (eq.kind) {
        case EquationKind::LinearAdvection:
        case EquationKind::Burgers: return 0;
        case EquationKind::Euler1D: w = {0.6, 0.2, 0.2}; break;
        case EquationKind::Euler2D: w = {0.375, 0.375, 0.25}; break;
    }
    const auto counts = mixture_counts(n_ic, w);
    int acc = 0;
    for (size_t k = 0; k < counts.size(); ++k) {
        acc += counts[k];
        if (ic_index < acc) return static_cast<int>(k);
    }
    return static_cast<int>(counts.size()) - 1;
}

/// Draw one conserved-state IC for the equation set (stream `ic_index`).
inline Field generate(const EquationSet& eq, const GridSpec& g, uint64_t seed, int ic_index,
                      int n_ic) {
    CounterRng rng(seed, static_cast<uint64_t>(ic_index));
    const int kind = mixture_kind(eq, n_ic, ic_index);
    switch (eq.kind) {
        case EquationKind::LinearAdvection:
        case EquationKind::Burgers: return gen_burgers(g, rng);
        case EquationKind::Euler1D: return gen_euler1d(g, eq, rng, kind);
        case EquationKind::Euler2D: return gen_euler2d(g, eq, rng, kind);
    }
    throw config_error("unknown equation kind");
}

}  // namespace ic

// ---------------------------------------------------------------------------
// dataset container
// ---------------------------------------------------------------------------

struct DatasetSpec {
    EquationSet eq = EquationSet::burgers();
    int fine_nx = 512;
    int fine_ny = 1;
    int R = 2;
    int n_ic = 1;
    int n_steps = 1;
    BcPhase phase = BcPhase::Periodic;
    uint64_t seed = 0;
    double cfl = 0.4; // coarse-grid Courant number fixing the shared dt

    void validate() const {
        if (R < 2) throw config_error("dataset: R must be >= 2");
        if (n_ic < 1 || n_steps < 1) throw config_error("dataset: n_ic and n_steps must be >= 1");
        if (fine_nx % R != 0 || (eq.ndim() == 2 && fine_ny % R != 0))
            throw shape_error("dataset: fine counts not divisible by R");
    }
};

/// In-memory dataset: consecutive (input, target) coarse conserved pairs, one
/// shared time step. Samples are grouped by initial condition in generation
/// order (n_steps consecutive samples per IC).
struct Dataset {
    GridSpec coarse_grid;
    EquationSet eq;
    BcPhase phase = BcPhase::Periodic;
    int R = 2;
    uint64_t seed = 0;
    double dt = 0.0;
    int n_ic = 0, n_steps = 0;
    uint32_t redraws = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    size_t size() const { return inputs.size(); }
    BoundarySpec bc() const { return phase_bc(phase); }
    Field field(const std::vector<double>& payload) const {
        Field f = make_field(coarse_grid, eq.nvars());
        f.data = payload;
        return f;
    }
};

namespace detail_data {

inline uint32_t eq_tag(const EquationSet& eq) { return static_cast<uint32_t>(eq.kind); }
inline double eq_param(const EquationSet& eq) {
    return eq.kind == EquationKind::LinearAdvection ? eq.advection_speed
           : eq.is_euler()                          ? eq.gamma
                                                    : 0.0;
}
inline EquationSet eq_from_tag(uint32_t tag, double param) {
    switch (tag) {
        case 0: return EquationSet::advection(param);
        case 1: return EquationSet::burgers();
        case 2: return EquationSet::euler1d(param);
        case 3: return EquationSet::euler2d(param);
    }
    throw config_error("dataset: unknown equation tag");
}

}  // namespace detail_data

/// Generate a dataset: run the classical fine solver per IC with one shared
/// dt that satisfies the coarse CFL bound, project every snapshot with R, and
/// emit the (coarse(t_k), coarse(t_{k+1})) pairs. ICs whose run leaves the
/// admissible set are redrawn (counted in `redraws`).
inline Dataset build_dataset(const DatasetSpec& spec) {
    spec.validate();
    const GridSpec fine = spec.eq.ndim() == 2
                              ? make_uniform_grid(2, {0, 1, 0, 1}, spec.fine_nx, spec.fine_ny)
                              : make_uniform_grid(1, {0, 1}, spec.fine_nx);
    const BoundarySpec bc = phase_bc(spec.phase);
    SchemeConfig cfg; // classical reference scheme

    Dataset ds;
    ds.eq = spec.eq;
    ds.phase = spec.phase;
    ds.R = spec.R;
    ds.seed = spec.seed;
    ds.n_ic = spec.n_ic;
    ds.n_steps = spec.n_steps;

    // Draw all ICs, then fix one dt from the coarse CFL bound over the set.
    std::vector<Field> ics;
    double denom_max = 0.0;
    const double dxc = fine.dx * spec.R;
    const double dyc = fine.dy * spec.R;
    auto coarse_denom = [&](const Field& f) {
        double sx = 0.0, sy = 0.0;
        const int nv = spec.eq.nvars();
        for (int j = 0; j < fine.ny; ++j)
            for (int i = 0; i < fine.nx; ++i) {
                State w{};
                for (int v = 0; v < nv; ++v) w[v] = f.at(v, j, i);
                sx = std::max(sx, max_wave_speed(spec.eq, w, 0));
                if (spec.eq.ndim() == 2) sy = std::max(sy, max_wave_speed(spec.eq, w, 1));
            }
        return sx / dxc + (spec.eq.ndim() == 2 ? sy / dyc : 0.0);
    };
    for (int k = 0; k < spec.n_ic; ++k) {
        ics.push_back(ic::generate(spec.eq, fine, spec.seed, k, spec.n_ic));
        denom_max = std::max(denom_max, coarse_denom(ics.back()));
    }
    if (denom_max <= 0.0) denom_max = 1.0 / dxc;
    ds.dt = spec.cfl / denom_max;

    for (int k = 0; k < spec.n_ic; ++k) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 200) throw config_error("dataset: too many solver blow-ups for one IC");
            try {
                Field w = ics[k];
                Field coarse_prev = project_fine_to_coarse(w, spec.R);
                std::vector<std::vector<double>> in_k, tg_k;
                for (int s = 0; s < spec.n_steps; ++s) {
                    w = step(w, bc, spec.eq, cfg, ds.dt, s);
                    Field coarse_next = project_fine_to_coarse(w, spec.R);
                    in_k.push_back(coarse_prev.data);
                    tg_k.push_back(coarse_next.data);
                    coarse_prev = std::move(coarse_next);
                }
                ds.coarse_grid = coarse_prev.grid;
                for (auto& v : in_k) ds.inputs.push_back(std::move(v));
                for (auto& v : tg_k) ds.targets.push_back(std::move(v));
                break;
            } catch (const admissibility_error&) {
                // redraw this IC (its stream continues, so the draw is fresh)
                ds.redraws += 1;
                CounterRng rng(spec.seed, static_cast<uint64_t>(k) + 7919ULL * (attempt + 1));
                const int kind = ic::mixture_kind(spec.eq, spec.n_ic, k);
                Field cand;
                switch (spec.eq.kind) {
                    case EquationKind::LinearAdvection:
                    case EquationKind::Burgers: cand = ic::gen_burgers(fine, rng); break;
                    case EquationKind::Euler1D: cand = ic::gen_euler1d(fine, spec.eq, rng, kind); break;
                    case EquationKind::Euler2D: cand = ic::gen_euler2d(fine, spec.eq, rng, kind); break;
                }
                if (coarse_denom(cand) > denom_max) continue; // keep dt valid
                ics[k] = cand;
            }
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset file: the Field snapshot header of the coarse grid, extended with
//   u64 n_samples, u32 R, u32 eq_tag, u32 bc_tag, u64 seed,
// then (documented extension)
//   f64 dt, f64 eq_param, u32 n_ic, u32 n_steps, u32 redraws, u32 reserved,
// then samples as consecutive (input, target) field payloads.
// ---------------------------------------------------------------------------

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open for write: " + path);
    Field proto = make_field(ds.coarse_grid, ds.eq.nvars());
    detail::write_field_header(os, proto);
    detail::write_u64(os, ds.inputs.size());
    detail::write_u32(os, static_cast<uint32_t>(ds.R));
    detail::write_u32(os, detail_data::eq_tag(ds.eq));
    detail::write_u32(os, static_cast<uint32_t>(ds.phase));
    detail::write_u64(os, ds.seed);
    detail::write_f64(os, ds.dt);
    detail::write_f64(os, detail_data::eq_param(ds.eq));
    detail::write_u32(os, static_cast<uint32_t>(ds.n_ic));
    detail::write_u32(os, static_cast<uint32_t>(ds.n_steps));
    detail::write_u32(os, ds.redraws);
    detail::write_u32(os, 0u);
    for (size_t k = 0; k < ds.inputs.size(); ++k) {
        os.write(reinterpret_cast<const char*>(ds.inputs[k].data()),
                 static_cast<std::streamsize>(ds.inputs[k].size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(ds.targets[k].data()),
                 static_cast<std::streamsize>(ds.targets[k].size() * sizeof(double)));
    }
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("cannot open: " + path);
    Field proto = detail::read_field_header(is);
    Dataset ds;
    ds.coarse_grid = proto.grid;
    const uint64_t nsamp = detail::read_u64(is);
    ds.R = static_cast<int>(detail::read_u32(is));
    const uint32_t eqtag = detail::read_u32(is);
    ds.phase = static_cast<BcPhase>(detail::read_u32(is));
    ds.seed = detail::read_u64(is);
    ds.dt = detail::read_f64(is);
    const double eqparam = detail::read_f64(is);
    ds.eq = detail_data::eq_from_tag(eqtag, eqparam);
    ds.n_ic = static_cast<int>(detail::read_u32(is));
    ds.n_steps = static_cast<int>(detail::read_u32(is));
    ds.redraws = detail::read_u32(is);
    detail::read_u32(is);
    const size_t payload = proto.data.size();
    ds.inputs.assign(nsamp, std::vector<double>(payload));
    ds.targets.assign(nsamp, std::vector<double>(payload));
    for (uint64_t k = 0; k < nsamp; ++k) {
        is.read(reinterpret_cast<char*>(ds.inputs[k].data()),
                static_cast<std::streamsize>(payload * sizeof(double)));
        is.read(reinterpret_cast<char*>(ds.targets[k].data()),
                static_cast<std::streamsize>(payload * sizeof(double)));
    }
    if (!is) throw config_error("dataset: truncated file");
    return ds;
}

/// Header of a dataset file as JSON (the `dataset inspect` CLI output).
inline nlohmann::json inspect_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("cannot open: " + path);
    Field proto = detail::read_field_header(is);
    nlohmann::json j;
    j["magic"] = "LDFV";
    j["version"] = 1;
    j["ndim"] = proto.grid.ndim;
    j["nvars"] = proto.nvars;
    j["nx"] = proto.grid.nx;
    j["ny"] = proto.grid.ny;
    j["dx"] = proto.grid.dx;
    j["dy"] = proto.grid.dy;
    j["n_samples"] = detail::read_u64(is);
    j["R"] = detail::read_u32(is);
    const uint32_t eqtag = detail::read_u32(is);
    j["eq"] = std::vector<std::string>{"advection", "burgers", "euler1d", "euler2d"}[eqtag];
    j["bc"] = detail::read_u32(is) == 0 ? "periodic" : "slip";
    j["seed"] = detail::read_u64(is);
    j["dt"] = detail::read_f64(is);
    j["eq_param"] = detail::read_f64(is);
    j["n_ic"] = detail::read_u32(is);
    j["n_steps"] = detail::read_u32(is);
    j["redraws"] = detail::read_u32(is);
    return j;
}

}  // namespace ldfv

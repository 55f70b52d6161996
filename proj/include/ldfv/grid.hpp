#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ldfv/common.hpp"

namespace ldfv {

/// Uniform Cartesian mesh. In 1D ny == 1 and the y extent is a unit slab.
/// Cell centers sit at x0 + (i + 1/2) dx.
struct GridSpec {
    int ndim = 1;
    int nx = 0;
    int ny = 1;
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;
    double dx = 0.0;
    double dy = 1.0;

    long ncell() const { return static_cast<long>(nx) * ny; }
    double xc(int i) const { return x0 + (i + 0.5) * dx; }
    double yc(int j) const { return y0 + (j + 0.5) * dy; }
};

inline GridSpec make_uniform_grid(int ndim, std::array<double, 4> bounds, int nx, int ny = 1) {
    if (ndim != 1 && ndim != 2) throw config_error("grid: ndim must be 1 or 2");
    if (ndim == 1) ny = 1;
    if (nx < 4 || (ndim == 2 && ny < 4))
        throw config_error("grid: need at least 4 cells per active dimension");
    GridSpec g;
    g.ndim = ndim;
    g.nx = nx;
    g.ny = ny;
    g.x0 = bounds[0];
    g.x1 = bounds[1];
    if (ndim == 2) {
        g.y0 = bounds[2];
        g.y1 = bounds[3];
    }
    if (!(g.x1 > g.x0) || (ndim == 2 && !(g.y1 > g.y0)))
        throw config_error("grid: inverted or empty bounds");
    g.dx = (g.x1 - g.x0) / nx;
    g.dy = ndim == 2 ? (g.y1 - g.y0) / ny : 1.0;
    return g;
}

/// Cell-averaged multi-variable state on a grid, data[v][j][i] row-major.
/// Fields are value types: operations return fresh fields and never mutate
/// their inputs, so concurrent use is unrestricted.
struct Field {
    GridSpec grid;
    int nvars = 1;
    std::vector<double> data;

    double& at(int v, int j, int i) {
        return data[(static_cast<size_t>(v) * grid.ny + j) * grid.nx + i];
    }
    double at(int v, int j, int i) const {
        return data[(static_cast<size_t>(v) * grid.ny + j) * grid.nx + i];
    }
    size_t size() const { return data.size(); }
};

inline Field make_field(const GridSpec& g, int nvars) {
    Field f;
    f.grid = g;
    f.nvars = nvars;
    f.data.assign(static_cast<size_t>(nvars) * g.ncell(), 0.0);
    return f;
}

inline void require_same_shape(const Field& a, const Field& b) {
    if (a.nvars != b.nvars || a.grid.nx != b.grid.nx || a.grid.ny != b.grid.ny)
        throw shape_error("fields have different shapes");
}

/// Subsample a fine field onto a grid coarsened by R in each active dimension.
/// Coarse cell (i, j) takes the fine value at (R*i + off, R*j + off) with
/// off = floor(R/2): of the R fine cells inside a coarse cell this is the one
/// whose center is nearest the coarse center.
inline Field project_fine_to_coarse(const Field& fine, int R) {
    if (R < 2) throw config_error("project: R must be >= 2");
    const GridSpec& fg = fine.grid;
    if (fg.nx % R != 0 || (fg.ndim == 2 && fg.ny % R != 0))
        throw shape_error("project: cell counts not divisible by R");
    GridSpec cg = fg;
    cg.nx = fg.nx / R;
    cg.dx = fg.dx * R;
    if (fg.ndim == 2) {
        cg.ny = fg.ny / R;
        cg.dy = fg.dy * R;
    }
    Field coarse = make_field(cg, fine.nvars);
    const int off = R / 2;
    const int joff = fg.ndim == 2 ? off : 0;
    for (int v = 0; v < fine.nvars; ++v)
        for (int j = 0; j < cg.ny; ++j)
            for (int i = 0; i < cg.nx; ++i)
                coarse.at(v, j, i) = fine.at(v, fg.ndim == 2 ? R * j + joff : j, R * i + off);
    return coarse;
}

inline double l2_error(const Field& a, const Field& b) {
    require_same_shape(a, b);
    KahanSum s;
    for (size_t k = 0; k < a.data.size(); ++k) {
        const double d = a.data[k] - b.data[k];
        s.add(d * d);
    }
    return std::sqrt(s.value() / static_cast<double>(a.data.size()));
}

inline double l1_error(const Field& a, const Field& b) {
    require_same_shape(a, b);
    KahanSum s;
    for (size_t k = 0; k < a.data.size(); ++k) s.add(std::abs(a.data[k] - b.data[k]));
    return s.value() / static_cast<double>(a.data.size());
}

inline double linf_error(const Field& a, const Field& b) {
    require_same_shape(a, b);
    double m = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
    return m;
}

/// Total variation on the periodic torus: neighbor pairs including the
/// wrap-around pair per line. This is the functional the TVD property of a
/// periodic scheme refers to; the interior-pair total_variation below misses
/// the wrap pair and fluctuates when structures cross the boundary.
inline double periodic_total_variation(const Field& u) {
    KahanSum s;
    const GridSpec& g = u.grid;
    for (int v = 0; v < u.nvars; ++v) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                s.add(std::abs(u.at(v, j, (i + 1) % g.nx) - u.at(v, j, i)));
        if (g.ndim == 2)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    s.add(std::abs(u.at(v, (j + 1) % g.ny, i) - u.at(v, j, i)));
    }
    return s.value();
}

/// Total variation: per variable, sum of |neighbor differences| over interior
/// pairs in each active dimension, summed over variables.
inline double total_variation(const Field& u) {
    KahanSum s;
    const GridSpec& g = u.grid;
    for (int v = 0; v < u.nvars; ++v) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i + 1 < g.nx; ++i) s.add(std::abs(u.at(v, j, i + 1) - u.at(v, j, i)));
        if (g.ndim == 2)
            for (int j = 0; j + 1 < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) s.add(std::abs(u.at(v, j + 1, i) - u.at(v, j, i)));
    }
    return s.value();
}

// ---------------------------------------------------------------------------
// Field snapshot binary format (shared with the dataset container):
// little-endian, magic "LDFV", u32 version = 1, u32 ndim, u32 nvars, u32 nx,
// u32 ny, f64 dx, f64 dy, then nvars*ny*nx f64 row-major.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline uint64_t read_u64(std::istream& is) {
    uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
inline double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

inline void write_field_header(std::ostream& os, const Field& f) {
    os.write("LDFV", 4);
    write_u32(os, 1u);
    write_u32(os, static_cast<uint32_t>(f.grid.ndim));
    write_u32(os, static_cast<uint32_t>(f.nvars));
    write_u32(os, static_cast<uint32_t>(f.grid.nx));
    write_u32(os, static_cast<uint32_t>(f.grid.ny));
    write_f64(os, f.grid.dx);
    write_f64(os, f.grid.dy);
}

inline void write_field_payload(std::ostream& os, const Field& f) {
    os.write(reinterpret_cast<const char*>(f.data.data()),
             static_cast<std::streamsize>(f.data.size() * sizeof(double)));
}

inline Field read_field_header(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "LDFV", 4) != 0) throw config_error("snapshot: bad magic");
    const uint32_t version = read_u32(is);
    if (version != 1) throw config_error("snapshot: unsupported version");
    const uint32_t ndim = read_u32(is);
    const uint32_t nvars = read_u32(is);
    const uint32_t nx = read_u32(is);
    const uint32_t ny = read_u32(is);
    const double dx = read_f64(is);
    const double dy = read_f64(is);
    GridSpec g;
    g.ndim = static_cast<int>(ndim);
    g.nx = static_cast<int>(nx);
    g.ny = static_cast<int>(ny);
    g.x0 = 0.0;
    g.x1 = dx * nx;
    g.y0 = 0.0;
    g.y1 = g.ndim == 2 ? dy * ny : 1.0;
    g.dx = dx;
    g.dy = dy;
    return make_field(g, static_cast<int>(nvars));
}

inline void read_field_payload(std::istream& is, Field& f) {
    is.read(reinterpret_cast<char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(double)));
    if (!is) throw config_error("snapshot: truncated payload");
}

}  // namespace detail

inline void save_field(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot open for write: " + path);
    detail::write_field_header(os, f);
    detail::write_field_payload(os, f);
}

inline Field load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("cannot open: " + path);
    Field f = detail::read_field_header(is);
    detail::read_field_payload(is, f);
    return f;
}

}  // namespace ldfv

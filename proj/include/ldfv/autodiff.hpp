#pragma once

// Reverse-mode differentiation tape. Nodes are whole-array operations with
// hand-written adjoints (conv, padding, stencil apply, limiter smooth form,
// flux, reductions); the backward pass visits them in reverse record order
// exactly once. Forward values are produced by the same kernels the plain
// solver uses, so the tape primal matches the solver bit for bit.

#include <cmath>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "ldfv/fv.hpp"
#include "ldfv/model.hpp"
#include "ldfv/physics.hpp"

namespace ldfv::ad {

class Tape {
  public:
    int fresh(size_t n) {
        vals_.emplace_back(n, 0.0);
        adjs_.emplace_back(n, 0.0);
        return static_cast<int>(vals_.size()) - 1;
    }
    int leaf(std::vector<double> v) {
        vals_.push_back(std::move(v));
        adjs_.emplace_back(vals_.back().size(), 0.0);
        return static_cast<int>(vals_.size()) - 1;
    }
    std::vector<double>& val(int id) { return vals_[id]; }
    const std::vector<double>& val(int id) const { return vals_[id]; }
    std::vector<double>& adj(int id) { return adjs_[id]; }

    void record(std::function<void()> back) { ops_.push_back(std::move(back)); }

    /// Seed d(root)/d(root) = 1 and run all adjoints in reverse order.
    void backward(int root) {
        if (vals_[root].size() != 1) throw shape_error("backward: root must be a scalar");
        for (auto& a : adjs_) std::fill(a.begin(), a.end(), 0.0);
        adjs_[root][0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

  private:
    std::deque<std::vector<double>> vals_;
    std::deque<std::vector<double>> adjs_;
    std::vector<std::function<void()>> ops_;
};

// ---------------------------------------------------------------------------
// element ops
// ---------------------------------------------------------------------------

inline int selu_op(Tape& t, int x) {
    const auto& xv = t.val(x);
    const int y = t.fresh(xv.size());
    auto& yv = t.val(y);
    for (size_t i = 0; i < xv.size(); ++i) yv[i] = nn::selu(xv[i]);
    t.record([&t, x, y]() {
        const auto& xv = t.val(x);
        const auto& ya = t.adj(y);
        auto& xa = t.adj(x);
        for (size_t i = 0; i < xv.size(); ++i) xa[i] += nn::selu_deriv(xv[i]) * ya[i];
    });
    return y;
}

/// y[c][k] = x[c][map[k]] for each of nch channels (padding as index map).
inline int pad_op(Tape& t, int x, int nch, long ncell, std::vector<int> map) {
    const int y = t.fresh(static_cast<size_t>(nch) * map.size());
    nn::apply_pad(t.val(x).data(), nch, ncell, map, t.val(y).data());
    t.record([&t, x, y, nch, ncell, map = std::move(map)]() {
        const auto& ya = t.adj(y);
        auto& xa = t.adj(x);
        const long npad = static_cast<long>(map.size());
        for (int c = 0; c < nch; ++c)
            for (long k = 0; k < npad; ++k)
                xa[c * ncell + map[k]] += ya[static_cast<size_t>(c) * npad + k];
    });
    return y;
}

/// y = x .* mask (constant mask).
inline int mask_mul_op(Tape& t, int x, std::vector<double> mask) {
    const auto& xv = t.val(x);
    if (xv.size() != mask.size()) throw shape_error("mask_mul: size mismatch");
    const int y = t.fresh(xv.size());
    auto& yv = t.val(y);
    for (size_t i = 0; i < xv.size(); ++i) yv[i] = xv[i] * mask[i];
    t.record([&t, x, y, mask = std::move(mask)]() {
        const auto& ya = t.adj(y);
        auto& xa = t.adj(x);
        for (size_t i = 0; i < mask.size(); ++i) xa[i] += mask[i] * ya[i];
    });
    return y;
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

inline int conv1d_op(Tape& t, int x, int theta, long w_off, long b_off, int in_ch, int out_ch,
                     int k, int n_pad) {
    const int n = n_pad - (k - 1);
    const int y = t.fresh(static_cast<size_t>(out_ch) * n);
    nn::conv1d(t.val(x).data(), in_ch, n_pad, t.val(theta).data() + w_off,
               t.val(theta).data() + b_off, out_ch, k, t.val(y).data());
    t.record([&t, x, theta, w_off, b_off, in_ch, out_ch, k, n_pad, n, y]() {
        const auto& ya = t.adj(y);
        const auto& xv = t.val(x);
        const auto& th = t.val(theta);
        auto& xa = t.adj(x);
        auto& ta = t.adj(theta);
        for (int co = 0; co < out_ch; ++co)
            for (int i = 0; i < n; ++i) {
                const double g = ya[static_cast<size_t>(co) * n + i];
                if (g == 0.0) continue;
                ta[b_off + co] += g;
                for (int ci = 0; ci < in_ch; ++ci) {
                    const size_t xrow = static_cast<size_t>(ci) * n_pad + i;
                    const size_t wrow = w_off + (static_cast<size_t>(co) * in_ch + ci) * k;
                    for (int tap = 0; tap < k; ++tap) {
                        ta[wrow + tap] += g * xv[xrow + tap];
                        xa[xrow + tap] += g * th[wrow + tap];
                    }
                }
            }
    });
    return y;
}

inline int conv2d_op(Tape& t, int x, int theta, long w_off, long b_off, int in_ch, int out_ch,
                     int k, int nx_pad, int ny_pad) {
    const int nx = nx_pad - (k - 1);
    const int ny = ny_pad - (k - 1);
    const int y = t.fresh(static_cast<size_t>(out_ch) * nx * ny);
    nn::conv2d(t.val(x).data(), in_ch, nx_pad, ny_pad, t.val(theta).data() + w_off,
               t.val(theta).data() + b_off, out_ch, k, t.val(y).data());
    t.record([&t, x, theta, w_off, b_off, in_ch, out_ch, k, nx_pad, ny_pad, nx, ny, y]() {
        const auto& ya = t.adj(y);
        const auto& xv = t.val(x);
        const auto& th = t.val(theta);
        auto& xa = t.adj(x);
        auto& ta = t.adj(theta);
        for (int co = 0; co < out_ch; ++co)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const double g = ya[(static_cast<size_t>(co) * ny + j) * nx + i];
                    if (g == 0.0) continue;
                    ta[b_off + co] += g;
                    for (int ci = 0; ci < in_ch; ++ci) {
                        const size_t wbase = w_off + ((static_cast<size_t>(co) * in_ch + ci) * k) * k;
                        for (int ty = 0; ty < k; ++ty) {
                            const size_t xrow =
                                (static_cast<size_t>(ci) * ny_pad + j + ty) * nx_pad + i;
                            for (int tx = 0; tx < k; ++tx) {
                                ta[wbase + ty * k + tx] += g * xv[xrow + tx];
                                xa[xrow + tx] += g * th[wbase + ty * k + tx];
                            }
                        }
                    }
                }
    });
    return y;
}

/// Raw channels [(grp*4 + j)][site] -> alpha_ML [(grp*ncell + site)*3 + k]
/// (the CoeffField layout) through the fixed constraint matrix.
inline int constrain_op(Tape& t, int raw, int ngroups, long ncell) {
    const int y = t.fresh(static_cast<size_t>(ngroups) * ncell * 3);
    {
        const auto& rv = t.val(raw);
        auto& yv = t.val(y);
        for (int g = 0; g < ngroups; ++g)
            for (long s = 0; s < ncell; ++s) {
                double r[4];
                for (int j = 0; j < 4; ++j) r[j] = rv[(static_cast<size_t>(g) * 4 + j) * ncell + s];
                nn::constrain(r, &yv[(static_cast<size_t>(g) * ncell + s) * 3]);
            }
    }
    t.record([&t, raw, y, ngroups, ncell]() {
        const auto& ya = t.adj(y);
        auto& ra = t.adj(raw);
        for (int g = 0; g < ngroups; ++g)
            for (long s = 0; s < ncell; ++s)
                for (int j = 0; j < 4; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k < 3; ++k)
                        acc += nn::constrain_matrix[k][j] *
                               ya[(static_cast<size_t>(g) * ncell + s) * 3 + k];
                    ra[(static_cast<size_t>(g) * 4 + j) * ncell + s] += acc;
                }
    });
    return y;
}

// ---------------------------------------------------------------------------
// solver sweep ops
// ---------------------------------------------------------------------------

/// Geometry of one direction sweep. Lines are gathered with the same variable
/// slot swap as the plain solver (y sweeps see (rho, v, u, p)).
struct SweepGeom {
    int d = 0;       // direction
    int n = 0;       // cells per line
    int nlines = 1;
    int nvars = 1;
    int nx = 0, ny = 1;
    bool periodic = true;
    EquationSet eq;

    long dhat_stride() const { return n + 3; }
    long trace_stride() const { return n + 1; }
    long line_stride_u() const { return n + 4; }
    long nsites_dhat() const { return static_cast<long>(nvars) * nlines * (n + 3); }
    long nsites_trace() const { return static_cast<long>(nvars) * nlines * (n + 1); }
};

/// Index of the coefficient triple feeding dhat at (v, line, s) of a sweep,
/// in the CoeffField layout.
inline long coeff_index(const SweepGeom& g, int v, int line, int s) {
    const int i = g.d == 0 ? s : line;
    const int j = g.d == 0 ? line : s;
    const int pv = detail_fv::line_var(g.eq, g.d, v);
    const long ncell = static_cast<long>(g.nx) * g.ny;
    const long grp = static_cast<long>(g.d) * g.nvars + pv;
    return (grp * ncell + static_cast<long>(j) * g.nx + i) * 3;
}

/// Undivided increments dhat = (alpha_base + alpha_ML) . u over a padded
/// constant field. u_lines layout: [v][line][c in -2..n+1]. Output layout
/// [v][line][s in -2..n]. Ghost sites wrap (periodic) or use alpha_base.
inline int dhat_op(Tape& t, int alpha_ml, const std::vector<double>& u_lines,
                   const SweepGeom& g) {
    const auto base = alpha_base();
    const int y = t.fresh(g.nsites_dhat());
    auto& yv = t.val(y);
    const auto& av = t.val(alpha_ml);

    for (int v = 0; v < g.nvars; ++v)
        for (int line = 0; line < g.nlines; ++line) {
            const double* u = u_lines.data() + (static_cast<size_t>(v) * g.nlines + line) * (g.n + 4);
            double* dh = yv.data() + (static_cast<size_t>(v) * g.nlines + line) * (g.n + 3);
            for (int s = 0; s < g.n; ++s) {
                const long ai = coeff_index(g, v, line, s);
                const double a0 = base[0] + av[ai];
                const double a1 = base[1] + av[ai + 1];
                const double a2 = base[2] + av[ai + 2];
                dh[s + 2] = a0 * u[s + 1] + a1 * u[s + 2] + a2 * u[s + 3];
            }
            for (int s : {-2, -1, g.n}) {
                if (g.periodic)
                    dh[s + 2] = dh[((s + g.n) % g.n) + 2];
                else
                    dh[s + 2] = u[s + 3] - u[s + 2];
            }
        }

    t.record([&t, alpha_ml, y, u_lines, g]() {
        auto& ya = t.adj(y);
        auto& aa = t.adj(alpha_ml);
        for (int v = 0; v < g.nvars; ++v)
            for (int line = 0; line < g.nlines; ++line) {
                double* da = ya.data() + (static_cast<size_t>(v) * g.nlines + line) * (g.n + 3);
                const double* u =
                    u_lines.data() + (static_cast<size_t>(v) * g.nlines + line) * (g.n + 4);
                if (g.periodic)
                    for (int s : {-2, -1, g.n}) da[((s + g.n) % g.n) + 2] += da[s + 2];
                for (int s = 0; s < g.n; ++s) {
                    const double gbar = da[s + 2];
                    if (gbar == 0.0) continue;
                    const long ai = coeff_index(g, v, line, s);
                    aa[ai] += gbar * u[s + 1];
                    aa[ai + 1] += gbar * u[s + 2];
                    aa[ai + 2] += gbar * u[s + 3];
                }
            }
    });
    return y;
}

/// MUSCL traces from constant cell values and tape increments. Outputs two
/// variables (uL, uR) with layout [v][line][iface 0..n].
inline std::pair<int, int> traces_op(Tape& t, int dhat, const std::vector<double>& u_lines,
                                     const SweepGeom& g, double eps, bool limiter_on) {
    const int uL = t.fresh(g.nsites_trace());
    const int uR = t.fresh(g.nsites_trace());
    {
        auto& lv = t.val(uL);
        auto& rv = t.val(uR);
        const auto& dv = t.val(dhat);
        for (int v = 0; v < g.nvars; ++v)
            for (int line = 0; line < g.nlines; ++line) {
                const size_t lo = (static_cast<size_t>(v) * g.nlines + line);
                fvk::reconstruct_line(u_lines.data() + lo * (g.n + 4), dv.data() + lo * (g.n + 3),
                                      g.n, eps, limiter_on, lv.data() + lo * (g.n + 1),
                                      rv.data() + lo * (g.n + 1));
            }
    }
    t.record([&t, dhat, uL, uR, g, eps, limiter_on]() {
        const auto& dv = t.val(dhat);
        auto& da = t.adj(dhat);
        const auto& la = t.adj(uL);
        const auto& ra = t.adj(uR);
        for (int v = 0; v < g.nvars; ++v)
            for (int line = 0; line < g.nlines; ++line) {
                const size_t lo = (static_cast<size_t>(v) * g.nlines + line);
                const double* dh = dv.data() + lo * (g.n + 3);
                double* dad = da.data() + lo * (g.n + 3);
                const double* lg = la.data() + lo * (g.n + 1);
                const double* rg = ra.data() + lo * (g.n + 1);
                auto add_slope_adj = [&](int site, double w) {
                    if (w == 0.0) return;
                    if (!limiter_on) {
                        dad[site + 2] += w;
                        return;
                    }
                    double dGa, dGb;
                    fvk::limited_slope_partials(dh[site + 1], dh[site + 2], eps, dGa, dGb);
                    dad[site + 1] += w * dGa;
                    dad[site + 2] += w * dGb;
                };
                for (int k = 0; k <= g.n; ++k) {
                    add_slope_adj(k - 1, 0.5 * lg[k]);
                    add_slope_adj(k, -0.5 * rg[k]);
                }
            }
    });
    return {uL, uR};
}

/// Per-site primitive -> conserved on trace arrays ([v][site] layout with
/// stride S = total sites). Throws on inadmissible traces.
inline int prim_to_cons_op(Tape& t, int u, const EquationSet& eq, long S) {
    const int nv = eq.nvars();
    const int y = t.fresh(static_cast<size_t>(nv) * S);
    {
        const auto& uv = t.val(u);
        auto& yv = t.val(y);
        for (long s = 0; s < S; ++s) {
            State us{};
            for (int v = 0; v < nv; ++v) us[v] = uv[static_cast<size_t>(v) * S + s];
            const State ws = primitive_to_conserved(eq, us);
            for (int v = 0; v < nv; ++v) yv[static_cast<size_t>(v) * S + s] = ws[v];
        }
    }
    t.record([&t, u, y, eq, S, nv]() {
        const auto& uv = t.val(u);
        const auto& ya = t.adj(y);
        auto& ua = t.adj(u);
        for (long s = 0; s < S; ++s) {
            State us{};
            for (int v = 0; v < nv; ++v) us[v] = uv[static_cast<size_t>(v) * S + s];
            const auto J = phys::prim_to_cons_jacobian(eq, us);
            for (int j = 0; j < nv; ++j) {
                double acc = 0.0;
                for (int i = 0; i < nv; ++i) acc += J[i][j] * ya[static_cast<size_t>(i) * S + s];
                ua[static_cast<size_t>(j) * S + s] += acc;
            }
        }
    });
    return y;
}

/// Per-site conserved -> primitive (same layout); throws on inadmissible input.
inline int cons_to_prim_op(Tape& t, int w, const EquationSet& eq, long S) {
    const int nv = eq.nvars();
    const int y = t.fresh(static_cast<size_t>(nv) * S);
    {
        const auto& wv = t.val(w);
        auto& yv = t.val(y);
        for (long s = 0; s < S; ++s) {
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = wv[static_cast<size_t>(v) * S + s];
            const State us = conserved_to_primitive(eq, ws);
            for (int v = 0; v < nv; ++v) yv[static_cast<size_t>(v) * S + s] = us[v];
        }
    }
    t.record([&t, w, y, eq, S, nv]() {
        const auto& wv = t.val(w);
        const auto& ya = t.adj(y);
        auto& wa = t.adj(w);
        for (long s = 0; s < S; ++s) {
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = wv[static_cast<size_t>(v) * S + s];
            const auto J = phys::cons_to_prim_jacobian(eq, ws);
            for (int j = 0; j < nv; ++j) {
                double acc = 0.0;
                for (int i = 0; i < nv; ++i) acc += J[i][j] * ya[static_cast<size_t>(i) * S + s];
                wa[static_cast<size_t>(j) * S + s] += acc;
            }
        }
    });
    return y;
}

/// Rusanov flux per interface site on conserved trace arrays (axis 0; lines
/// are pre-swapped). Max-speed branch uses the one-sided subgradient of max
/// (ties take the left state).
inline int rusanov_op(Tape& t, int wl, int wr, const EquationSet& eq, long S) {
    const int nv = eq.nvars();
    const int y = t.fresh(static_cast<size_t>(nv) * S);
    {
        const auto& lv = t.val(wl);
        const auto& rv = t.val(wr);
        auto& yv = t.val(y);
        for (long s = 0; s < S; ++s) {
            State a{}, b{}, F{};
            for (int v = 0; v < nv; ++v) {
                a[v] = lv[static_cast<size_t>(v) * S + s];
                b[v] = rv[static_cast<size_t>(v) * S + s];
            }
            fvk::rusanov(eq, a, b, 0, F);
            for (int v = 0; v < nv; ++v) yv[static_cast<size_t>(v) * S + s] = F[v];
        }
    }
    t.record([&t, wl, wr, y, eq, S, nv]() {
        const auto& lv = t.val(wl);
        const auto& rv = t.val(wr);
        const auto& ya = t.adj(y);
        auto& la = t.adj(wl);
        auto& ra = t.adj(wr);
        for (long s = 0; s < S; ++s) {
            State a{}, b{};
            for (int v = 0; v < nv; ++v) {
                a[v] = lv[static_cast<size_t>(v) * S + s];
                b[v] = rv[static_cast<size_t>(v) * S + s];
            }
            const double sl = max_wave_speed(eq, a, 0);
            const double sr = max_wave_speed(eq, b, 0);
            const bool left = sl >= sr;
            const double sp = left ? sl : sr;
            const auto Jl = phys::flux_jacobian(eq, a, 0);
            const auto Jr = phys::flux_jacobian(eq, b, 0);
            const State gs = phys::wave_speed_gradient(eq, left ? a : b, 0);
            double ydotdiff = 0.0;
            for (int i = 0; i < nv; ++i)
                ydotdiff += ya[static_cast<size_t>(i) * S + s] * (b[i] - a[i]);
            for (int j = 0; j < nv; ++j) {
                double accl = 0.0, accr = 0.0;
                for (int i = 0; i < nv; ++i) {
                    const double g = ya[static_cast<size_t>(i) * S + s];
                    accl += g * 0.5 * Jl[i][j];
                    accr += g * 0.5 * Jr[i][j];
                }
                accl += 0.5 * sp * ya[static_cast<size_t>(j) * S + s];
                accr -= 0.5 * sp * ya[static_cast<size_t>(j) * S + s];
                if (left)
                    accl -= 0.5 * ydotdiff * gs[j];
                else
                    accr -= 0.5 * ydotdiff * gs[j];
                la[static_cast<size_t>(j) * S + s] += accl;
                ra[static_cast<size_t>(j) * S + s] += accr;
            }
        }
    });
    return y;
}

/// Conservative update w' = w - sum_d lam_d (F_{c+1} - F_c), accumulating the
/// directions in sweep order like the plain solver. Fy may be -1 in 1D.
/// Output layout matches Field data ([v][j][i]).
inline int update_op(Tape& t, const Field& w, int Fx, int Fy, const SweepGeom& gx,
                     const SweepGeom& gy, double lamx, double lamy) {
    const int nv = w.nvars;
    const int nx = w.grid.nx, ny = w.grid.ny;
    const long ncell = static_cast<long>(nx) * ny;
    const int y = t.fresh(w.data.size());
    {
        std::vector<double> incr(w.data.size(), 0.0);
        auto accumulate = [&](int fid, const SweepGeom& g, double lam) {
            const auto& fv = t.val(fid);
            for (int v = 0; v < g.nvars; ++v) {
                const int pv = detail_fv::line_var(g.eq, g.d, v);
                for (int line = 0; line < g.nlines; ++line) {
                    const double* F =
                        fv.data() + (static_cast<size_t>(v) * g.nlines + line) * (g.n + 1);
                    for (int c = 0; c < g.n; ++c) {
                        const int ii = g.d == 0 ? c : line;
                        const int jj = g.d == 0 ? line : c;
                        incr[(static_cast<size_t>(pv) * ny + jj) * nx + ii] +=
                            lam * (F[c + 1] - F[c]);
                    }
                }
            }
        };
        accumulate(Fx, gx, lamx);
        if (Fy >= 0) accumulate(Fy, gy, lamy);
        auto& yv = t.val(y);
        for (long k = 0; k < static_cast<long>(w.data.size()); ++k)
            yv[k] = w.data[k] - incr[k];
    }
    t.record([&t, y, Fx, Fy, gx, gy, lamx, lamy, nv, nx, ny, ncell]() {
        (void)nv;
        (void)ncell;
        const auto& ya = t.adj(y);
        auto scatter = [&](int fid, const SweepGeom& g, double lam) {
            auto& fa = t.adj(fid);
            for (int v = 0; v < g.nvars; ++v) {
                const int pv = detail_fv::line_var(g.eq, g.d, v);
                for (int line = 0; line < g.nlines; ++line) {
                    double* F = fa.data() + (static_cast<size_t>(v) * g.nlines + line) * (g.n + 1);
                    for (int c = 0; c < g.n; ++c) {
                        const int ii = g.d == 0 ? c : line;
                        const int jj = g.d == 0 ? line : c;
                        const double gbar = ya[(static_cast<size_t>(pv) * ny + jj) * nx + ii];
                        F[c + 1] -= lam * gbar;
                        F[c] += lam * gbar;
                    }
                }
            }
        };
        scatter(Fx, gx, lamx);
        if (Fy >= 0) scatter(Fy, gy, lamy);
    });
    return y;
}

// ---------------------------------------------------------------------------
// reductions and losses
// ---------------------------------------------------------------------------

/// mean |x - ref| with subgradient sign, sign(0) = 0.
inline int mean_abs_diff_op(Tape& t, int x, std::vector<double> ref) {
    const auto& xv = t.val(x);
    if (xv.size() != ref.size()) throw shape_error("mean_abs_diff: size mismatch");
    const int y = t.fresh(1);
    KahanSum s;
    for (size_t i = 0; i < xv.size(); ++i) s.add(std::abs(xv[i] - ref[i]));
    const double n = static_cast<double>(xv.size());
    t.val(y)[0] = s.value() / n;
    t.record([&t, x, y, ref = std::move(ref), n]() {
        const auto& xv = t.val(x);
        const double g = t.adj(y)[0] / n;
        auto& xa = t.adj(x);
        for (size_t i = 0; i < xv.size(); ++i) {
            const double d = xv[i] - ref[i];
            xa[i] += g * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
        }
    });
    return y;
}

/// sqrt(mean (x - ref)^2); gradient guarded to 0 at zero residual.
inline int rms_diff_op(Tape& t, int x, std::vector<double> ref) {
    const auto& xv = t.val(x);
    if (xv.size() != ref.size()) throw shape_error("rms_diff: size mismatch");
    const int y = t.fresh(1);
    KahanSum s;
    for (size_t i = 0; i < xv.size(); ++i) {
        const double d = xv[i] - ref[i];
        s.add(d * d);
    }
    const double n = static_cast<double>(xv.size());
    const double rms = std::sqrt(s.value() / n);
    t.val(y)[0] = rms;
    t.record([&t, x, y, ref = std::move(ref), n, rms]() {
        if (rms == 0.0) return;
        const auto& xv = t.val(x);
        const double g = t.adj(y)[0] / (n * rms);
        auto& xa = t.adj(x);
        for (size_t i = 0; i < xv.size(); ++i) xa[i] += g * (xv[i] - ref[i]);
    });
    return y;
}

/// Entropy per cell of a conserved array with Field layout.
inline int entropy_op(Tape& t, int w, const EquationSet& eq, long ncell) {
    const int nv = eq.nvars();
    const int y = t.fresh(ncell);
    {
        const auto& wv = t.val(w);
        auto& yv = t.val(y);
        for (long s = 0; s < ncell; ++s) {
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = wv[static_cast<size_t>(v) * ncell + s];
            yv[s] = entropy(eq, ws);
        }
    }
    t.record([&t, w, y, eq, ncell, nv]() {
        const auto& wv = t.val(w);
        const auto& ya = t.adj(y);
        auto& wa = t.adj(w);
        for (long s = 0; s < ncell; ++s) {
            if (ya[s] == 0.0) continue;
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = wv[static_cast<size_t>(v) * ncell + s];
            const State g = phys::entropy_gradient(eq, ws);
            for (int v = 0; v < nv; ++v) wa[static_cast<size_t>(v) * ncell + s] += ya[s] * g[v];
        }
    });
    return y;
}

/// sum_j max(0, scale * x_j + c_j)^2 (the entropy penalty with constant
/// time-t terms folded into c).
inline int hinge_sq_affine_op(Tape& t, int x, double scale, std::vector<double> c) {
    const auto& xv = t.val(x);
    if (xv.size() != c.size()) throw shape_error("hinge_sq_affine: size mismatch");
    const int y = t.fresh(1);
    KahanSum s;
    for (size_t i = 0; i < xv.size(); ++i) {
        const double K = scale * xv[i] + c[i];
        if (K > 0.0) s.add(K * K);
    }
    t.val(y)[0] = s.value();
    t.record([&t, x, y, scale, c = std::move(c)]() {
        const auto& xv = t.val(x);
        const double g = t.adj(y)[0];
        auto& xa = t.adj(x);
        for (size_t i = 0; i < xv.size(); ++i) {
            const double K = scale * xv[i] + c[i];
            if (K > 0.0) xa[i] += g * 2.0 * K * scale;
        }
    });
    return y;
}

/// Total variation of a Field-layout array (interior neighbor pairs per
/// active dimension, all variables).
inline int tv_op(Tape& t, int x, int nvars, int nx, int ny, int ndim) {
    const int y = t.fresh(1);
    const auto& xv = t.val(x);
    KahanSum s;
    auto val = [&](int v, int j, int i) { return xv[(static_cast<size_t>(v) * ny + j) * nx + i]; };
    for (int v = 0; v < nvars; ++v) {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i) s.add(std::abs(val(v, j, i + 1) - val(v, j, i)));
        if (ndim == 2)
            for (int j = 0; j + 1 < ny; ++j)
                for (int i = 0; i < nx; ++i) s.add(std::abs(val(v, j + 1, i) - val(v, j, i)));
    }
    t.val(y)[0] = s.value();
    t.record([&t, x, y, nvars, nx, ny, ndim]() {
        const auto& xv = t.val(x);
        const double g = t.adj(y)[0];
        if (g == 0.0) return;
        auto& xa = t.adj(x);
        auto idx = [&](int v, int j, int i) { return (static_cast<size_t>(v) * ny + j) * nx + i; };
        auto acc = [&](size_t hi, size_t lo) {
            const double d = xv[hi] - xv[lo];
            const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            xa[hi] += g * sg;
            xa[lo] -= g * sg;
        };
        for (int v = 0; v < nvars; ++v) {
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i + 1 < nx; ++i) acc(idx(v, j, i + 1), idx(v, j, i));
            if (ndim == 2)
                for (int j = 0; j + 1 < ny; ++j)
                    for (int i = 0; i < nx; ++i) acc(idx(v, j + 1, i), idx(v, j, i));
        }
    });
    return y;
}

/// max(0, s - c) of a scalar node.
inline int hinge_shift_op(Tape& t, int s, double c) {
    const int y = t.fresh(1);
    const double v = t.val(s)[0] - c;
    t.val(y)[0] = v > 0.0 ? v : 0.0;
    t.record([&t, s, y, c]() {
        if (t.val(s)[0] - c > 0.0) t.adj(s)[0] += t.adj(y)[0];
    });
    return y;
}

/// L1 norm of all entries (the weight regularizer), subgradient sign(0) = 0.
inline int l1_op(Tape& t, int x) {
    const int y = t.fresh(1);
    const auto& xv = t.val(x);
    KahanSum s;
    for (double v : xv) s.add(std::abs(v));
    t.val(y)[0] = s.value();
    t.record([&t, x, y]() {
        const auto& xv = t.val(x);
        const double g = t.adj(y)[0];
        auto& xa = t.adj(x);
        for (size_t i = 0; i < xv.size(); ++i)
            xa[i] += g * (xv[i] > 0.0 ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0));
    });
    return y;
}

/// Scalar linear combination sum_k coef_k * s_k.
inline int lincomb_op(Tape& t, const std::vector<std::pair<int, double>>& terms) {
    const int y = t.fresh(1);
    double acc = 0.0;
    for (const auto& [id, c] : terms) acc += c * t.val(id)[0];
    t.val(y)[0] = acc;
    t.record([&t, y, terms]() {
        const double g = t.adj(y)[0];
        for (const auto& [id, c] : terms) t.adj(id)[0] += c * g;
    });
    return y;
}

// generic elementwise helpers used by the op-level gradient tests

inline int mul_op(Tape& t, int a, int b) {
    const auto& av = t.val(a);
    const auto& bv = t.val(b);
    if (av.size() != bv.size()) throw shape_error("mul: size mismatch");
    const int y = t.fresh(av.size());
    auto& yv = t.val(y);
    for (size_t i = 0; i < av.size(); ++i) yv[i] = av[i] * bv[i];
    t.record([&t, a, b, y]() {
        const auto& av = t.val(a);
        const auto& bv = t.val(b);
        const auto& ya = t.adj(y);
        auto& aa = t.adj(a);
        auto& ba = t.adj(b);
        for (size_t i = 0; i < av.size(); ++i) {
            aa[i] += bv[i] * ya[i];
            ba[i] += av[i] * ya[i];
        }
    });
    return y;
}

inline int sum_op(Tape& t, int x) {
    const int y = t.fresh(1);
    KahanSum s;
    for (double v : t.val(x)) s.add(v);
    t.val(y)[0] = s.value();
    t.record([&t, x, y]() {
        const double g = t.adj(y)[0];
        for (auto& a : t.adj(x)) a += g;
    });
    return y;
}

}  // namespace ldfv::ad

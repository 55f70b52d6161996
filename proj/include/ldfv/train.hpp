#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ldfv/autodiff.hpp"
#include "ldfv/data.hpp"
#include "ldfv/fv.hpp"
#include "ldfv/model.hpp"

namespace ldfv {

// ---------------------------------------------------------------------------
// plain (non-tape) losses; the tape pipeline reproduces these values exactly
// ---------------------------------------------------------------------------

/// Eq-12 data term: mean |err| + lambda2 sqrt(mean err^2) over primitive
/// variables.
inline double loss_data(const Field& pred, const Field& target, double lambda2 = 1.0) {
    require_same_shape(pred, target);
    KahanSum sa, ss;
    for (size_t k = 0; k < pred.data.size(); ++k) {
        const double d = pred.data[k] - target.data[k];
        sa.add(std::abs(d));
        ss.add(d * d);
    }
    const double n = static_cast<double>(pred.data.size());
    return sa.value() / n + lambda2 * std::sqrt(ss.value() / n);
}

/// Discrete entropy-inequality penalty: sum_j max(0, K_j)^2 with
/// K_j = h^d (eta_j^{t+dt} - eta_j^t) + dt h^{d-1} sum_d (q_d(x_j) - q_d(x_j - h e_d)),
/// entropy fluxes evaluated at time t (ghosts from bc).
inline double loss_entropy(const Field& w_t, const Field& w_next, const EquationSet& eq,
                           double dt, const BoundarySpec& bc) {
    require_same_shape(w_t, w_next);
    const GridSpec& g = w_t.grid;
    const double h = g.dx;
    const double hd = eq.ndim() == 2 ? h * h : h;
    const double hdm1 = eq.ndim() == 2 ? h : 1.0;
    const PaddedField wp = pad(w_t, bc, 1, eq, Repr::Conserved);
    const int nv = eq.nvars();
    KahanSum loss;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            State now{}, nxt{};
            for (int v = 0; v < nv; ++v) {
                now[v] = w_t.at(v, j, i);
                nxt[v] = w_next.at(v, j, i);
            }
            double K = hd * (entropy(eq, nxt) - entropy(eq, now));
            for (int d = 0; d < eq.ndim(); ++d) {
                State left{};
                for (int v = 0; v < nv; ++v)
                    left[v] = d == 0 ? wp.at(v, j, i - 1) : wp.at(v, j - 1, i);
                K += dt * hdm1 * (entropy_flux(eq, now, d) - entropy_flux(eq, left, d));
            }
            if (K > 0.0) loss.add(K * K);
        }
    return loss.value();
}

/// Hinge on total-variation increase.
inline double loss_tvd(const Field& u_t, const Field& u_next) {
    const double d = total_variation(u_next) - total_variation(u_t);
    return d > 0.0 ? d : 0.0;
}

/// L1 norm of all network parameters.
inline double loss_reg(const NetworkParams& p) {
    KahanSum s;
    for (double x : p.theta) s.add(std::abs(x));
    return s.value();
}

// ---------------------------------------------------------------------------
// one-step differentiable pipeline
// ---------------------------------------------------------------------------

struct LossWeights {
    double data_weight = 1.0;
    double lambda2 = 1.0; // fixed to 1 by default
    double ent = 1e-4;
    double tvd = 1e-4;
    double reg = 1e-4;
};

struct LossParts {
    double data = 0, ent = 0, tvd = 0, reg = 0, total = 0;
};

struct TapeRun {
    ad::Tape tape;
    int theta = -1;
    int loss = -1;
    LossParts parts;
    Field prediction; // primitive variables
};

namespace detail_train {

/// Gather padded primitive lines for one sweep direction (same slot swap as
/// the plain solver).
inline std::vector<double> gather_lines(const PaddedField& up, const EquationSet& eq, int d) {
    const int n = d == 0 ? up.grid.nx : up.grid.ny;
    const int nlines = d == 0 ? up.grid.ny : up.grid.nx;
    const int nv = up.nvars;
    std::vector<double> out(static_cast<size_t>(nv) * nlines * (n + 4));
    for (int v = 0; v < nv; ++v) {
        const int pv = detail_fv::line_var(eq, d, v);
        for (int line = 0; line < nlines; ++line)
            for (int c = -2; c <= n + 1; ++c)
                out[(static_cast<size_t>(v) * nlines + line) * (n + 4) + c + 2] =
                    d == 0 ? up.at(pv, line, c) : up.at(pv, c, line);
    }
    return out;
}

}  // namespace detail_train

/// Record one learned solver step plus the Eq-12 losses on the tape.
/// Throws admissibility_error when the step leaves the admissible set (the
/// caller skips the sample). The primal prediction matches the plain
/// step() with the same model bit for bit.
inline TapeRun build_one_step_loss(const NetworkParams& params, const Field& w_in,
                                   const Field& w_target, double dt, const BoundarySpec& bc,
                                   const EquationSet& eq, const LossWeights& lw,
                                   int wall_zero_width = 1) {
    if (bc.has_solid()) throw config_error("training with solid masks is not supported");
    const GridSpec& g = w_in.grid;
    const int nv = eq.nvars();
    const long ncell = g.ncell();

    TapeRun run;
    ad::Tape& t = run.tape;
    run.theta = t.leaf(params.theta);

    // plain preprocessing (constant w.r.t. theta)
    Field prim = make_field(g, nv);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = w_in.at(v, j, i);
            phys::check_admissible(eq, ws, i, j);
            const State us = conserved_to_primitive(eq, ws);
            for (int v = 0; v < nv; ++v) prim.at(v, j, i) = us[v];
        }
    const Field norm = normalize(prim);
    const PaddedField up = pad(prim, bc, 2, eq, Repr::Primitive);

    // network
    const ModelConfig& mc = params.cfg;
    if (mc.nvars != nv || mc.ndim != eq.ndim())
        throw config_error("model: configuration does not match equation set");
    const std::vector<int> map =
        mc.ndim == 2 ? nn::pad_map_2d(g.nx, g.ny, bc.periodic_x(), bc.periodic_y())
                     : nn::pad_map_1d(g.nx, bc.periodic_x());
    int feat = t.leaf(norm.data);
    for (int b = 0; b < mc.blocks; ++b) {
        const int padded = ad::pad_op(t, feat, mc.in_channels(b), ncell, map);
        if (mc.ndim == 2)
            feat = ad::conv2d_op(t, padded, run.theta, params.weight_offset(b),
                                 params.bias_offset(b), mc.in_channels(b), mc.out_channels(b),
                                 mc.kernel, g.nx + 2, g.ny + 2);
        else
            feat = ad::conv1d_op(t, padded, run.theta, params.weight_offset(b),
                                 params.bias_offset(b), mc.in_channels(b), mc.out_channels(b),
                                 mc.kernel, g.nx + 2);
        if (b + 1 < mc.blocks) feat = ad::selu_op(t, feat);
    }
    int alpha_ml = ad::constrain_op(t, feat, nv * mc.ndim, ncell);
    if (bc.any_slip()) {
        CoeffField ones = make_coeff_field(mc.ndim, nv, g.nx, g.ny);
        for (auto& x : ones.a) x = 1.0;
        zero_wall_coeffs(ones, bc, wall_zero_width);
        alpha_ml = ad::mask_mul_op(t, alpha_ml, ones.a);
    }

    // sweeps
    const int ndirs = eq.ndim();
    int F[2] = {-1, -1};
    ad::SweepGeom geom[2];
    for (int d = 0; d < ndirs; ++d) {
        ad::SweepGeom& sg = geom[d];
        sg.d = d;
        sg.n = d == 0 ? g.nx : g.ny;
        sg.nlines = d == 0 ? g.ny : g.nx;
        sg.nvars = nv;
        sg.nx = g.nx;
        sg.ny = g.ny;
        sg.periodic = d == 0 ? bc.periodic_x() : bc.periodic_y();
        sg.eq = eq;
        const std::vector<double> u_lines = detail_train::gather_lines(up, eq, d);
        const int dh = ad::dhat_op(t, alpha_ml, u_lines, sg);
        const auto [uL, uR] = ad::traces_op(t, dh, u_lines, sg, 1e-14, true);
        const long S = sg.nsites_trace() / nv;
        const int wl = ad::prim_to_cons_op(t, uL, eq, S);
        const int wr = ad::prim_to_cons_op(t, uR, eq, S);
        F[d] = ad::rusanov_op(t, wl, wr, eq, S);
    }
    const int wnext = ad::update_op(t, w_in, F[0], F[1], geom[0], geom[1], dt / g.dx,
                                    ndirs == 2 ? dt / g.dy : 0.0);

    // admissibility of the update (throws like the plain step)
    {
        const auto& wv = t.val(wnext);
        for (long s = 0; s < ncell; ++s) {
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = wv[static_cast<size_t>(v) * ncell + s];
            if (!phys::admissible(eq, ws))
                throw admissibility_error("updated state left the admissible set",
                                          static_cast<int>(s % g.nx), static_cast<int>(s / g.nx));
        }
    }
    const int upred = ad::cons_to_prim_op(t, wnext, eq, ncell);

    // reference primitives
    Field ref = make_field(g, nv);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            State ws{};
            for (int v = 0; v < nv; ++v) ws[v] = w_target.at(v, j, i);
            const State us = conserved_to_primitive(eq, ws);
            for (int v = 0; v < nv; ++v) ref.at(v, j, i) = us[v];
        }

    const int l_abs = ad::mean_abs_diff_op(t, upred, ref.data);
    const int l_rms = ad::rms_diff_op(t, upred, ref.data);

    // entropy penalty: time-t terms are constants
    const double h = g.dx;
    const double hd = eq.ndim() == 2 ? h * h : h;
    const double hdm1 = eq.ndim() == 2 ? h : 1.0;
    std::vector<double> centr(ncell);
    {
        const PaddedField wp = pad(w_in, bc, 1, eq, Repr::Conserved);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                State now{};
                for (int v = 0; v < nv; ++v) now[v] = w_in.at(v, j, i);
                double c = -hd * entropy(eq, now);
                for (int d = 0; d < eq.ndim(); ++d) {
                    State left{};
                    for (int v = 0; v < nv; ++v)
                        left[v] = d == 0 ? wp.at(v, j, i - 1) : wp.at(v, j - 1, i);
                    c += dt * hdm1 * (entropy_flux(eq, now, d) - entropy_flux(eq, left, d));
                }
                centr[static_cast<size_t>(j) * g.nx + i] = c;
            }
    }
    const int eta_next = ad::entropy_op(t, wnext, eq, ncell);
    const int l_ent = ad::hinge_sq_affine_op(t, eta_next, hd, centr);

    const int tv_pred = ad::tv_op(t, upred, nv, g.nx, g.ny, eq.ndim());
    const int l_tvd = ad::hinge_shift_op(t, tv_pred, total_variation(prim));

    const int l_reg = ad::l1_op(t, run.theta);

    run.loss = ad::lincomb_op(t, {{l_abs, lw.data_weight},
                                  {l_rms, lw.data_weight * lw.lambda2},
                                  {l_ent, lw.ent},
                                  {l_tvd, lw.tvd},
                                  {l_reg, lw.reg}});

    run.parts.data = t.val(l_abs)[0] + lw.lambda2 * t.val(l_rms)[0];
    run.parts.ent = t.val(l_ent)[0];
    run.parts.tvd = t.val(l_tvd)[0];
    run.parts.reg = t.val(l_reg)[0];
    run.parts.total = t.val(run.loss)[0];
    run.prediction = make_field(g, nv);
    run.prediction.data = t.val(upred);
    return run;
}

/// Gradient of the composed one-step loss w.r.t. every network parameter.
inline std::vector<double> loss_gradient(TapeRun& run) {
    run.tape.backward(run.loss);
    return run.tape.adj(run.theta);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

inline void adam_update(std::vector<double>& params, const std::vector<double>& grad,
                        AdamState& st, double lr) {
    if (st.m.empty()) {
        st.m.assign(params.size(), 0.0);
        st.v.assign(params.size(), 0.0);
    }
    if (grad.size() != params.size() || st.m.size() != params.size())
        throw shape_error("adam: shape mismatch");
    st.t += 1;
    const double b1t = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double b2t = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (size_t i = 0; i < params.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / b1t;
        const double vhat = st.v[i] / b2t;
        params[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr = 1e-3;
    int batch = 32;
    int epochs = 10;        // phase 1 (periodic data)
    int epochs_phase2 = 0;  // phase 2 (slip data, wall-zeroed coefficients)
    LossWeights weights{};
    uint64_t seed = 0;
    int wall_zero_width = 1;
    double val_fraction = 0.1;
    int threads = 1;
    std::string metrics_path;   // CSV log, empty = none
    double skip_abort_fraction = 0.10;
};

struct EpochMetrics {
    int epoch = 0;
    int phase = 1;
    double train_loss = 0, val_loss = 0;
    long skipped = 0;
    double wall_s = 0;
};

struct FitResult {
    NetworkParams params;
    std::vector<EpochMetrics> log;
    long total_skipped = 0;
};

namespace detail_train {

/// Validation split: the last ceil(fraction * n_ic) initial conditions (never
/// time-interleaved with the training ICs).
inline size_t val_boundary(const Dataset& ds, double fraction) {
    const int val_ics = std::min(ds.n_ic, std::max(ds.n_ic > 1 ? 1 : 0,
                                                   static_cast<int>(std::ceil(fraction * ds.n_ic))));
    return static_cast<size_t>(ds.n_ic - val_ics) * ds.n_steps;
}

/// Mean one-step data loss over the validation slice with the current
/// parameters (plain solver path; this is L_tot - L_penalization).
inline double validation_loss(const Dataset& ds, const NetworkParams& p, const TrainConfig& cfg,
                              long& skipped) {
    const size_t lo = val_boundary(ds, cfg.val_fraction);
    if (lo >= ds.size()) return 0.0;
    SchemeConfig sc;
    sc.model = &p;
    sc.wall_zero_width = cfg.wall_zero_width;
    const BoundarySpec bc = ds.bc();
    KahanSum s;
    long n = 0;
    for (size_t k = lo; k < ds.size(); ++k) {
        try {
            const Field in = ds.field(ds.inputs[k]);
            const Field pred = step(in, bc, ds.eq, sc, ds.dt);
            Field pred_prim = make_field(in.grid, in.nvars), tgt_prim = pred_prim;
            const Field tgt = ds.field(ds.targets[k]);
            for (int j = 0; j < in.grid.ny; ++j)
                for (int i = 0; i < in.grid.nx; ++i) {
                    State a{}, b{};
                    for (int v = 0; v < in.nvars; ++v) {
                        a[v] = pred.at(v, j, i);
                        b[v] = tgt.at(v, j, i);
                    }
                    const State ap = conserved_to_primitive(ds.eq, a);
                    const State bp = conserved_to_primitive(ds.eq, b);
                    for (int v = 0; v < in.nvars; ++v) {
                        pred_prim.at(v, j, i) = ap[v];
                        tgt_prim.at(v, j, i) = bp[v];
                    }
                }
            s.add(loss_data(pred_prim, tgt_prim, cfg.weights.lambda2));
            ++n;
        } catch (const admissibility_error&) {
            ++skipped;
        }
    }
    return n > 0 ? s.value() / n : std::nan("");
}

}  // namespace detail_train

/// Two-phase training: phase 1 over the periodic dataset, phase 2 over the
/// slip dataset with wall-zeroed coefficients inside the step. Mini-batches
/// are shuffled with a seeded generator; batch gradients are combined in
/// fixed sample order, so results do not depend on the thread count.
inline FitResult fit(const Dataset& phase1, const Dataset* phase2, NetworkParams params0,
                     const TrainConfig& cfg) {
    if (phase1.size() == 0) throw config_error("fit: empty dataset");
    if (cfg.epochs_phase2 > 0 && (phase2 == nullptr || phase2->size() == 0))
        throw config_error("fit: phase 2 requested without slip dataset");

    FitResult out;
    out.params = std::move(params0);
    AdamState adam;

    std::ofstream metrics;
    if (!cfg.metrics_path.empty()) {
        metrics.open(cfg.metrics_path);
        if (!metrics) throw config_error("cannot open metrics file: " + cfg.metrics_path);
        metrics << "epoch,phase,train_loss,val_loss,skipped_samples,wall_time_s\n";
    }

    int epoch_counter = 0;
    auto run_phase = [&](const Dataset& ds, int phase, int epochs) {
        const size_t n_train = detail_train::val_boundary(ds, cfg.val_fraction);
        if (n_train == 0) throw config_error("fit: no training samples after validation split");
        std::vector<size_t> order(n_train);
        std::iota(order.begin(), order.end(), size_t{0});
        const BoundarySpec bc = ds.bc();

        for (int e = 0; e < epochs; ++e) {
            const auto t0 = std::chrono::steady_clock::now();
            CounterRng shuffle_rng(cfg.seed, 5000 + 131ULL * phase + epoch_counter);
            for (size_t i = n_train; i > 1; --i)
                std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<int>(i) - 1)]);

            KahanSum loss_sum;
            long processed = 0, skipped = 0;
            for (size_t b0 = 0; b0 < n_train; b0 += cfg.batch) {
                const size_t b1 = std::min(b0 + cfg.batch, n_train);
                const size_t nb = b1 - b0;
                std::vector<std::vector<double>> grads(nb);
                std::vector<double> losses(nb, std::nan(""));

                auto work = [&](size_t lo, size_t hi) {
                    for (size_t k = lo; k < hi; ++k) {
                        const size_t idx = order[b0 + k];
                        try {
                            TapeRun run = build_one_step_loss(
                                out.params, ds.field(ds.inputs[idx]), ds.field(ds.targets[idx]),
                                ds.dt, bc, ds.eq, cfg.weights, cfg.wall_zero_width);
                            grads[k] = loss_gradient(run);
                            losses[k] = run.parts.total;
                        } catch (const admissibility_error&) {
                            grads[k].clear();
                        }
                    }
                };
                if (cfg.threads <= 1) {
                    work(0, nb);
                } else {
                    std::vector<std::thread> pool;
                    const size_t chunk = (nb + cfg.threads - 1) / cfg.threads;
                    for (int tid = 0; tid < cfg.threads; ++tid) {
                        const size_t lo = tid * chunk, hi = std::min(lo + chunk, nb);
                        if (lo < hi) pool.emplace_back(work, lo, hi);
                    }
                    for (auto& th : pool) th.join();
                }

                std::vector<double> gsum(out.params.theta.size(), 0.0);
                long nok = 0;
                for (size_t k = 0; k < nb; ++k) { // fixed order
                    if (grads[k].empty()) {
                        ++skipped;
                        continue;
                    }
                    for (size_t i = 0; i < gsum.size(); ++i) gsum[i] += grads[k][i];
                    loss_sum.add(losses[k]);
                    ++nok;
                }
                processed += nok;
                if (nok == 0) continue;
                for (auto& x : gsum) x /= static_cast<double>(nok);
                adam_update(out.params.theta, gsum, adam, cfg.lr);
            }

            out.total_skipped += skipped;
            if (skipped > cfg.skip_abort_fraction * static_cast<double>(n_train))
                throw std::runtime_error("fit: more than " +
                                         std::to_string(int(cfg.skip_abort_fraction * 100)) +
                                         "% of an epoch was skipped (solver left admissible set)");

            EpochMetrics m;
            m.epoch = ++epoch_counter;
            m.phase = phase;
            m.train_loss = processed > 0 ? loss_sum.value() / processed : std::nan("");
            long vskip = 0;
            m.val_loss = detail_train::validation_loss(ds, out.params, cfg, vskip);
            m.skipped = skipped + vskip;
            m.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            out.log.push_back(m);
            if (metrics)
                metrics << m.epoch << "," << m.phase << "," << m.train_loss << "," << m.val_loss
                        << "," << m.skipped << "," << m.wall_s << "\n";
        }
    };

    run_phase(phase1, 1, cfg.epochs);
    if (cfg.epochs_phase2 > 0) run_phase(*phase2, 2, cfg.epochs_phase2);
    return out;
}

}  // namespace ldfv

#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "ldfv/fv.hpp"
#include "ldfv/grid.hpp"
#include "ldfv/model.hpp"

namespace ldfv {

/// Frozen 3-point stencil of the linearized scheme at a constant base state.
struct LinearizedStencil {
    std::array<double, 3> alpha{0.0, -1.0, 1.0}; // (a_-1, a_0, a_1), zero sum
    double wbar = 0.0;
};

/// One-step von Neumann amplification factor of the limiter-frozen scheme:
///   S(theta) = 1 - Co (1 - e^{-i theta})
///                  (1 + (a_-1 (e^{-i theta} - 1) + a_1 (e^{i theta} - 1)) / 2).
inline std::complex<double> amplification_factor(const LinearizedStencil& st, double co,
                                                 double theta) {
    const std::complex<double> em = std::exp(std::complex<double>(0.0, -theta));
    const std::complex<double> ep = std::exp(std::complex<double>(0.0, theta));
    const std::complex<double> bracket =
        1.0 + 0.5 * (st.alpha[0] * (em - 1.0) + st.alpha[2] * (ep - 1.0));
    return 1.0 - co * (1.0 - em) * bracket;
}

struct DissipationRow {
    double theta;
    double magnitude;
    double phase;
    double exact_phase; // -Co theta, the exact advection dispersion
};

/// Uniform theta sweep over [0, pi] with the exact advection reference.
inline std::vector<DissipationRow> dissipation_dispersion_table(const LinearizedStencil& st,
                                                                double co, int n_theta) {
    if (n_theta < 2) throw config_error("dissipation table: need at least 2 samples");
    std::vector<DissipationRow> rows(n_theta);
    for (int k = 0; k < n_theta; ++k) {
        const double theta = M_PI * k / (n_theta - 1);
        const auto S = amplification_factor(st, co, theta);
        rows[k] = {theta, std::abs(S), std::arg(S), -co * theta};
    }
    return rows;
}

/// Empirical per-mode amplification: one limiter-frozen linear-advection step
/// on an n-cell periodic grid, Fourier-transformed mode by mode. Matches
/// amplification_factor to roundoff; used as the analytic-vs-empirical check.
inline std::vector<std::complex<double>> empirical_amplification(const LinearizedStencil& st,
                                                                 double co, int n) {
    auto eq = EquationSet::advection(1.0);
    auto g = make_uniform_grid(1, {0.0, 1.0}, n);
    Field w = make_field(g, 1);
    CounterRng rng(2024, 0);
    // all modes present with O(1) amplitudes
    std::vector<double> phase(n / 2 + 1);
    for (auto& p : phase) p = rng.uniform(0.0, 2.0 * M_PI);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k <= n / 2; ++k) s += std::cos(2.0 * M_PI * k * i / n + phase[k]);
        w.data[i] = s;
    }
    SchemeConfig cfg;
    cfg.limiter_on = false;
    cfg.fixed_alpha = st.alpha;
    const double dt = co * g.dx / 1.0;
    const Field w1 = step(w, BoundarySpec::all_periodic(), eq, cfg, dt);

    auto dft = [n](const std::vector<double>& x, int k) {
        std::complex<double> acc(0.0, 0.0);
        for (int i = 0; i < n; ++i)
            acc += x[i] * std::exp(std::complex<double>(0.0, -2.0 * M_PI * k * i / n));
        return acc;
    };
    std::vector<std::complex<double>> ratio(n / 2 + 1);
    for (int k = 0; k <= n / 2; ++k) {
        const auto before = dft(w.data, k);
        ratio[k] = dft(w1.data, k) / before;
    }
    return ratio;
}

/// Linearize the end-to-end learned increment operator at a constant base
/// state by single-cell probing: the recorded response of dhat around the
/// perturbed cell reads off the frozen stencil. (The min-max normalization
/// makes the pointwise definition alpha(wbar, wbar, wbar) degenerate, so the
/// probe is the operative definition; they coincide when both exist.)
inline LinearizedStencil linearize_network(const NetworkParams& params, double wbar,
                                           const EquationSet& eq, int n = 64) {
    if (eq.nvars() != 1)
        throw config_error("linearize_network: scalar equation sets only");
    if (!std::isfinite(wbar)) throw config_error("linearize_network: base state must be finite");
    auto g = make_uniform_grid(1, {0.0, 1.0}, n);
    const auto bc = BoundarySpec::all_periodic();
    const int j0 = n / 2;
    const double delta = 1e-4 * std::max(1.0, std::abs(wbar));

    auto dhat_of = [&](double sign) {
        Field f = make_field(g, 1);
        for (auto& x : f.data) x = wbar;
        f.data[j0] += sign * delta;
        CoeffField alpha = forward(params, f, bc);
        add_alpha_base(alpha);
        const PaddedField up = pad(f, bc, 1, eq, Repr::Primitive);
        return learned_increment(up, alpha, 0);
    };
    const Field dp = dhat_of(1.0);
    const Field dm = dhat_of(-1.0);

    LinearizedStencil st;
    st.wbar = wbar;
    // response at cell j0 - k carries alpha_k
    st.alpha[0] = (dp.data[j0 + 1] - dm.data[j0 + 1]) / (2.0 * delta);
    st.alpha[1] = (dp.data[j0] - dm.data[j0]) / (2.0 * delta);
    st.alpha[2] = (dp.data[j0 - 1] - dm.data[j0 - 1]) / (2.0 * delta);
    const double mean = (st.alpha[0] + st.alpha[1] + st.alpha[2]) / 3.0;
    for (auto& a : st.alpha) a -= mean;
    return st;
}

// ---------------------------------------------------------------------------
// convergence study
// ---------------------------------------------------------------------------

struct ConvergenceVariant {
    std::string name;
    SchemeConfig scheme;
};

struct ConvergenceStudy {
    std::vector<int> grids;
    std::vector<std::string> variants;
    // errors[v][g]: L2 error of variant v on grid g vs the projected
    // reference; eoc[v][g-1] = log2(e_{g-1} / e_g)
    std::vector<std::vector<double>> errors;
    std::vector<std::vector<double>> eoc;
};

/// L2 errors against the finest classical run projected to each grid.
/// `ref_factor` refines the reference beyond the largest requested grid so
/// every row carries a positive error.
inline ConvergenceStudy convergence_study(
    const EquationSet& eq, const std::function<Field(const GridSpec&)>& ic,
    const BoundarySpec& bc, const std::vector<int>& grids, double t_end,
    const std::vector<ConvergenceVariant>& variants, int ref_factor = 4) {
    if (grids.size() < 2) throw config_error("convergence study: need at least 2 grids");
    for (size_t k = 0; k + 1 < grids.size(); ++k)
        if (grids[k + 1] % grids[k] != 0 || grids[k + 1] <= grids[k])
            throw config_error("convergence study: grids must be an increasing divisible ladder");

    const int ndim = eq.ndim();
    auto grid_of = [&](int nc) {
        return ndim == 2 ? make_uniform_grid(2, {0, 1, 0, 1}, nc, nc)
                         : make_uniform_grid(1, {0, 1}, nc);
    };
    const int nref = grids.back() * std::max(1, ref_factor);
    SchemeConfig classical = variants.empty() ? SchemeConfig{} : variants.front().scheme;
    classical.model = nullptr;
    classical.fixed_alpha.reset();
    const Field ref =
        simulate(ic(grid_of(nref)), bc, eq, classical, t_end).states.back();

    ConvergenceStudy out;
    out.grids = grids;
    for (const auto& v : variants) out.variants.push_back(v.name);
    out.errors.assign(variants.size(), {});
    out.eoc.assign(variants.size(), {});
    for (size_t v = 0; v < variants.size(); ++v) {
        for (int nc : grids) {
            const Field got =
                simulate(ic(grid_of(nc)), bc, eq, variants[v].scheme, t_end).states.back();
            const Field projected = nref == nc ? ref : project_fine_to_coarse(ref, nref / nc);
            out.errors[v].push_back(l2_error(got, projected));
        }
        for (size_t k = 0; k + 1 < grids.size(); ++k) {
            const double ratio = std::log2(static_cast<double>(grids[k + 1]) / grids[k]);
            out.eoc[v].push_back(std::log2(out.errors[v][k] / out.errors[v][k + 1]) / ratio);
        }
    }
    return out;
}

}  // namespace ldfv

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldfv/boundary.hpp"
#include "ldfv/common.hpp"
#include "ldfv/grid.hpp"
#include "ldfv/physics.hpp"

namespace ldfv {

/// Architecture of the coefficient network: N conv blocks with boundary-aware
/// padding, SELU after the hidden blocks, and a fixed zero-sum linear
/// constraint mapping 4 raw channels to the 3 stencil coefficients of each
/// (variable, direction) group.
struct ModelConfig {
    int ndim = 1;
    int nvars = 1;
    int blocks = 3;
    int hidden = 32;
    int kernel = 3;
    int raw_per_group = 4;

    int raw_channels() const { return raw_per_group * nvars * ndim; }
    int in_channels(int block) const { return block == 0 ? nvars : hidden; }
    int out_channels(int block) const { return block == blocks - 1 ? raw_channels() : hidden; }
    int weights_per_block(int block) const {
        const int ksz = ndim == 2 ? kernel * kernel : kernel;
        return out_channels(block) * in_channels(block) * ksz;
    }
    long param_count() const {
        long n = 0;
        for (int b = 0; b < blocks; ++b) n += weights_per_block(b) + out_channels(b);
        return n;
    }
};

/// Flat parameter store. Canonical layout: blocks in order; per block the
/// weights W[out][in][k(xk)] row-major, then the biases b[out].
struct NetworkParams {
    ModelConfig cfg;
    std::vector<double> theta;

    long weight_offset(int block) const {
        long off = 0;
        for (int b = 0; b < block; ++b) off += cfg.weights_per_block(b) + cfg.out_channels(b);
        return off;
    }
    long bias_offset(int block) const { return weight_offset(block) + cfg.weights_per_block(block); }
};

/// Per-cell, per-variable, per-direction 3-point stencil coefficients
/// alpha = (alpha_-1, alpha_0, alpha_1). Layout:
/// a[((d * nvars + v) * ncell + site) * 3 + (k+1)], site = j*nx + i.
struct CoeffField {
    int ndim = 1, nvars = 1, nx = 0, ny = 1;
    std::vector<double> a;

    long ncell() const { return static_cast<long>(nx) * ny; }
    double* at(int d, int v, int j, int i) {
        return &a[(((static_cast<size_t>(d) * nvars + v) * ncell()) + static_cast<size_t>(j) * nx + i) * 3];
    }
    const double* at(int d, int v, int j, int i) const {
        return &a[(((static_cast<size_t>(d) * nvars + v) * ncell()) + static_cast<size_t>(j) * nx + i) * 3];
    }
};

inline CoeffField make_coeff_field(int ndim, int nvars, int nx, int ny) {
    CoeffField c;
    c.ndim = ndim;
    c.nvars = nvars;
    c.nx = nx;
    c.ny = ny;
    c.a.assign(static_cast<size_t>(ndim) * nvars * nx * ny * 3, 0.0);
    return c;
}

/// Baseline stencil: the undivided forward difference of the classical scheme.
/// The network output is added to it, so zero ML contribution degenerates to
/// the reference MUSCL scheme exactly.
inline constexpr std::array<double, 3> alpha_base() { return {0.0, -1.0, 1.0}; }

namespace nn {

// SELU with the standard published constants.
inline constexpr double selu_lambda = 1.0507009873554804934193349852946;
inline constexpr double selu_alpha = 1.6732632423543772848170429916717;

inline double selu(double x) {
    return x > 0.0 ? selu_lambda * x : selu_lambda * selu_alpha * (std::exp(x) - 1.0);
}
inline double selu_deriv(double x) {
    return x > 0.0 ? selu_lambda : selu_lambda * selu_alpha * std::exp(x);
}

/// Zero-sum linear constraint: alpha_ML = B raw with the fixed 3x4 matrix B
/// whose columns are (-1,1,0), (0,-1,1), (-1,0,1), (1,-2,1) scaled by 1/2.
/// Every column sums to zero, so sum(alpha_ML) = 0 identically.
inline void constrain(const double r[4], double alpha[3]) {
    alpha[0] = 0.5 * (-r[0] - r[2] + r[3]);
    alpha[1] = 0.5 * (r[0] - r[1] - 2.0 * r[3]);
    alpha[2] = 0.5 * (r[1] + r[2] + r[3]);
}

/// Rows of B^T, used by the tape backward pass.
inline constexpr double constrain_matrix[3][4] = {
    {-0.5, 0.0, -0.5, 0.5},
    {0.5, -0.5, 0.0, -1.0},
    {0.0, 0.5, 0.5, 0.5},
};

// Padding index maps for feature tensors (periodic -> wrap, everything else
// -> edge replicate; the network's ghost depth is one, where replicate and
// the slip mirror coincide). The same maps drive the plain forward pass and
// the tape op.

inline std::vector<int> pad_map_1d(int n, bool periodic) {
    std::vector<int> m(n + 2);
    m[0] = periodic ? n - 1 : 0;
    for (int i = 0; i < n; ++i) m[i + 1] = i;
    m[n + 1] = periodic ? 0 : n - 1;
    return m;
}

/// Map padded (ny+2) x (nx+2) entries to source sites of an ny x nx tensor,
/// x direction first, then y (corners therefore wrap/replicate in y of the
/// already-extended rows).
inline std::vector<int> pad_map_2d(int nx, int ny, bool per_x, bool per_y) {
    const std::vector<int> mx = pad_map_1d(nx, per_x);
    const std::vector<int> my = pad_map_1d(ny, per_y);
    std::vector<int> m(static_cast<size_t>(nx + 2) * (ny + 2));
    for (int j = 0; j < ny + 2; ++j)
        for (int i = 0; i < nx + 2; ++i)
            m[static_cast<size_t>(j) * (nx + 2) + i] = my[j] * nx + mx[i];
    return m;
}

inline void apply_pad(const double* in, int nch, long ncell, const std::vector<int>& map,
                      double* out) {
    const long npad = static_cast<long>(map.size());
    for (int c = 0; c < nch; ++c)
        for (long k = 0; k < npad; ++k) out[c * npad + k] = in[c * ncell + map[k]];
}

/// 1D convolution, kernel k, valid region of a by-one padded input.
/// Accumulation order (ci outer, tap inner) is part of the contract: the tape
/// primal must match this bit for bit.
inline void conv1d(const double* in, int in_ch, int n_pad, const double* W, const double* b,
                   int out_ch, int k, double* out) {
    const int n = n_pad - (k - 1);
    for (int co = 0; co < out_ch; ++co)
        for (int i = 0; i < n; ++i) {
            double acc = b[co];
            for (int ci = 0; ci < in_ch; ++ci) {
                const double* row = in + static_cast<size_t>(ci) * n_pad + i;
                const double* w = W + (static_cast<size_t>(co) * in_ch + ci) * k;
                for (int t = 0; t < k; ++t) acc += w[t] * row[t];
            }
            out[static_cast<size_t>(co) * n + i] = acc;
        }
}

/// 2D convolution, k x k kernel, valid region of a by-one padded input.
inline void conv2d(const double* in, int in_ch, int nx_pad, int ny_pad, const double* W,
                   const double* b, int out_ch, int k, double* out) {
    const int nx = nx_pad - (k - 1);
    const int ny = ny_pad - (k - 1);
    for (int co = 0; co < out_ch; ++co)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double acc = b[co];
                for (int ci = 0; ci < in_ch; ++ci) {
                    const double* w = W + ((static_cast<size_t>(co) * in_ch + ci) * k) * k;
                    for (int ty = 0; ty < k; ++ty) {
                        const double* row =
                            in + (static_cast<size_t>(ci) * ny_pad + j + ty) * nx_pad + i;
                        for (int tx = 0; tx < k; ++tx) acc += w[ty * k + tx] * row[tx];
                    }
                }
                out[(static_cast<size_t>(co) * ny + j) * nx + i] = acc;
            }
}

}  // namespace nn

/// Min-max normalization to [-1, 1] per variable over the whole spatial
/// domain of the current snapshot. A variable with span below 1e-13 maps to
/// all zeros.
inline Field normalize(const Field& prim) {
    Field out = prim;
    const long nc = prim.grid.ncell();
    for (int v = 0; v < prim.nvars; ++v) {
        double mn = prim.data[static_cast<size_t>(v) * nc];
        double mx = mn;
        for (long k = 0; k < nc; ++k) {
            const double x = prim.data[static_cast<size_t>(v) * nc + k];
            mn = std::min(mn, x);
            mx = std::max(mx, x);
        }
        const double span = mx - mn;
        for (long k = 0; k < nc; ++k) {
            double& y = out.data[static_cast<size_t>(v) * nc + k];
            y = span < 1e-13 ? 0.0 : 2.0 * (y - mn) / span - 1.0;
        }
    }
    return out;
}

/// Run the network: normalize -> [pad(bc,1) -> conv -> SELU] x (N-1)
/// -> pad(bc,1) -> conv -> linear constraint. Output spatial shape equals the
/// input shape; returns the ML part alpha_ML only (add alpha_base for the
/// total stencil). Pure function of (params, field): concurrent inference is
/// safe as long as params are not mutated.
inline CoeffField forward(const NetworkParams& params, const Field& prim,
                          const BoundarySpec& bc) {
    const ModelConfig& cfg = params.cfg;
    const GridSpec& g = prim.grid;
    if (prim.nvars != cfg.nvars || g.ndim != cfg.ndim)
        throw config_error("model: field shape does not match network configuration");
    const long nc = g.ncell();

    const Field norm = normalize(prim);
    std::vector<double> feat(norm.data);
    std::vector<double> padded, next;

    const std::vector<int> map = cfg.ndim == 2
                                     ? nn::pad_map_2d(g.nx, g.ny, bc.periodic_x(), bc.periodic_y())
                                     : nn::pad_map_1d(g.nx, bc.periodic_x());

    for (int b = 0; b < cfg.blocks; ++b) {
        const int ic = cfg.in_channels(b);
        const int oc = cfg.out_channels(b);
        padded.assign(static_cast<size_t>(ic) * map.size(), 0.0);
        nn::apply_pad(feat.data(), ic, nc, map, padded.data());
        next.assign(static_cast<size_t>(oc) * nc, 0.0);
        const double* W = params.theta.data() + params.weight_offset(b);
        const double* bias = params.theta.data() + params.bias_offset(b);
        if (cfg.ndim == 2)
            nn::conv2d(padded.data(), ic, g.nx + 2, g.ny + 2, W, bias, oc, cfg.kernel, next.data());
        else
            nn::conv1d(padded.data(), ic, g.nx + 2, W, bias, oc, cfg.kernel, next.data());
        if (b + 1 < cfg.blocks)
            for (double& x : next) x = nn::selu(x);
        feat.swap(next);
    }

    // Raw channel ((d * nvars + v) * 4 + j) feeds coefficient group (d, v).
    CoeffField alpha = make_coeff_field(cfg.ndim, cfg.nvars, g.nx, g.ny);
    const int ngroups = cfg.nvars * cfg.ndim;
    for (int grp = 0; grp < ngroups; ++grp)
        for (long s = 0; s < nc; ++s) {
            double r[4];
            for (int j = 0; j < 4; ++j) r[j] = feat[(static_cast<size_t>(grp) * 4 + j) * nc + s];
            nn::constrain(r, &alpha.a[(static_cast<size_t>(grp) * nc + s) * 3]);
        }
    return alpha;
}

/// In-place: alpha_total = alpha_ML + alpha_base.
inline void add_alpha_base(CoeffField& c) {
    const auto base = alpha_base();
    for (size_t s = 0; s < c.a.size(); s += 3) {
        c.a[s] += base[0];
        c.a[s + 1] += base[1];
        c.a[s + 2] += base[2];
    }
}

/// Zero the ML contribution in the `width` cells adjacent to any Slip side
/// and around/inside masked solid cells, so alpha_total falls back to
/// alpha_base there.
inline void zero_wall_coeffs(CoeffField& c, const BoundarySpec& bc, int width) {
    if (width < 1) throw config_error("zero_wall_coeffs: width must be >= 1");
    const int nx = c.nx, ny = c.ny;
    auto zero_cell = [&](int j, int i) {
        for (int d = 0; d < c.ndim; ++d)
            for (int v = 0; v < c.nvars; ++v) {
                double* a = c.at(d, v, j, i);
                a[0] = a[1] = a[2] = 0.0;
            }
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            bool zero = false;
            if (bc.side[0].type == BcType::Slip && i < width) zero = true;
            if (bc.side[1].type == BcType::Slip && i >= nx - width) zero = true;
            if (c.ndim == 2 && bc.side[2].type == BcType::Slip && j < width) zero = true;
            if (c.ndim == 2 && bc.side[3].type == BcType::Slip && j >= ny - width) zero = true;
            if (!zero && bc.has_solid()) {
                for (int dj = -width; dj <= width && !zero; ++dj)
                    for (int di = -width; di <= width && !zero; ++di) {
                        const int jj = j + dj, ii = i + di;
                        if (jj >= 0 && jj < ny && ii >= 0 && ii < nx &&
                            bc.solid[static_cast<size_t>(jj) * nx + ii])
                            zero = true;
                    }
            }
            if (zero) zero_cell(j, i);
        }
}

/// Apply a total stencil to a padded primitive field:
/// dhat_i = a_-1 u_{i-1} + a_0 u_i + a_1 u_{i+1} along `direction`.
inline Field learned_increment(const PaddedField& u, const CoeffField& coeffs_total,
                               int direction) {
    if (u.grid.nx != coeffs_total.nx || u.grid.ny != coeffs_total.ny ||
        u.nvars != coeffs_total.nvars)
        throw shape_error("learned_increment: coefficient shape mismatch");
    Field out = make_field(u.grid, u.nvars);
    for (int v = 0; v < u.nvars; ++v)
        for (int j = 0; j < u.grid.ny; ++j)
            for (int i = 0; i < u.grid.nx; ++i) {
                const double* a = coeffs_total.at(direction, v, j, i);
                const double um = direction == 0 ? u.at(v, j, i - 1) : u.at(v, j - 1, i);
                const double up = direction == 0 ? u.at(v, j, i + 1) : u.at(v, j + 1, i);
                out.at(v, j, i) = a[0] * um + a[1] * u.at(v, j, i) + a[2] * up;
            }
    return out;
}

/// Truncated-normal init scaled by 1/sqrt(fan_in); the final layer starts at
/// zero so an untrained network reproduces the classical scheme.
inline NetworkParams init_params(const ModelConfig& cfg, uint64_t seed) {
    NetworkParams p;
    p.cfg = cfg;
    p.theta.assign(cfg.param_count(), 0.0);
    for (int b = 0; b + 1 < cfg.blocks; ++b) {
        CounterRng rng(seed, 1000 + static_cast<uint64_t>(b));
        const int ksz = cfg.ndim == 2 ? cfg.kernel * cfg.kernel : cfg.kernel;
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.in_channels(b) * ksz));
        double* W = p.theta.data() + p.weight_offset(b);
        for (int i = 0; i < cfg.weights_per_block(b); ++i) W[i] = scale * rng.truncated_normal();
        // biases stay zero
    }
    return p;
}

// ---------------------------------------------------------------------------
// Checkpoint format: JSON manifest + raw little-endian f64 blob holding theta
// in the canonical layout. The manifest references the blob by file name,
// resolved relative to the manifest location. Contents are deterministic so
// identical runs produce byte-identical checkpoints.
// ---------------------------------------------------------------------------

namespace detail {
inline uint64_t fnv1a(const std::vector<double>& v) {
    uint64_t h = 1469598103934665603ULL;
    const auto* p = reinterpret_cast<const unsigned char*>(v.data());
    for (size_t i = 0; i < v.size() * sizeof(double); ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}
}  // namespace detail

inline void save_checkpoint(const std::string& manifest_path, const NetworkParams& params,
                            int wall_zero_width, const nlohmann::json& training_meta = {}) {
    namespace fs = std::filesystem;
    fs::path mp(manifest_path);
    fs::path blob = mp;
    blob.replace_extension(".bin");

    nlohmann::json m;
    m["format"] = "ldfv-checkpoint";
    m["version"] = 1;
    m["ndim"] = params.cfg.ndim;
    m["nvars"] = params.cfg.nvars;
    m["blocks"] = params.cfg.blocks;
    m["hidden"] = params.cfg.hidden;
    m["kernel"] = params.cfg.kernel;
    m["raw_per_group"] = params.cfg.raw_per_group;
    m["param_count"] = params.theta.size();
    m["param_layout"] = "blocks in order; per block: weights row-major out x in x k(xk), then biases";
    m["params_file"] = blob.filename().string();
    m["params_fnv1a"] = detail::fnv1a(params.theta);
    m["wall_zero_width"] = wall_zero_width;
    if (!training_meta.is_null() && !training_meta.empty()) m["training"] = training_meta;

    std::ofstream os(manifest_path);
    if (!os) throw config_error("cannot open for write: " + manifest_path);
    os << m.dump(2) << "\n";

    std::ofstream ob(blob, std::ios::binary);
    if (!ob) throw config_error("cannot open for write: " + blob.string());
    ob.write(reinterpret_cast<const char*>(params.theta.data()),
             static_cast<std::streamsize>(params.theta.size() * sizeof(double)));
}

struct Checkpoint {
    NetworkParams params;
    int wall_zero_width = 1;
};

inline Checkpoint load_checkpoint(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw config_error("cannot open: " + manifest_path);
    nlohmann::json m = nlohmann::json::parse(is);
    if (m.value("format", "") != "ldfv-checkpoint") throw config_error("not a checkpoint manifest");
    Checkpoint ck;
    ck.params.cfg.ndim = m.at("ndim");
    ck.params.cfg.nvars = m.at("nvars");
    ck.params.cfg.blocks = m.at("blocks");
    ck.params.cfg.hidden = m.at("hidden");
    ck.params.cfg.kernel = m.at("kernel");
    ck.params.cfg.raw_per_group = m.at("raw_per_group");
    ck.wall_zero_width = m.value("wall_zero_width", 1);

    namespace fs = std::filesystem;
    fs::path blob = fs::path(manifest_path).parent_path() / std::string(m.at("params_file"));
    std::ifstream ib(blob, std::ios::binary);
    if (!ib) throw config_error("cannot open checkpoint blob: " + blob.string());
    ck.params.theta.assign(ck.params.cfg.param_count(), 0.0);
    ib.read(reinterpret_cast<char*>(ck.params.theta.data()),
            static_cast<std::streamsize>(ck.params.theta.size() * sizeof(double)));
    if (!ib) throw config_error("checkpoint blob truncated: " + blob.string());
    if (m.contains("params_fnv1a") &&
        static_cast<uint64_t>(m["params_fnv1a"]) != detail::fnv1a(ck.params.theta))
        throw config_error("checkpoint blob checksum mismatch");
    return ck;
}

}  // namespace ldfv

// Command-line driver: data generation, training, simulation, benchmarks and
// the von Neumann analysis behind one reproducible JSON configuration.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldfv/analysis.hpp"
#include "ldfv/bench.hpp"
#include "ldfv/data.hpp"
#include "ldfv/fv.hpp"
#include "ldfv/model.hpp"
#include "ldfv/train.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ldfv;

namespace {

// ---------------------------------------------------------------------------
// configuration handling
// ---------------------------------------------------------------------------

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
    if (j.is_null()) return;
    if (!j.is_object()) throw config_error("config: section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("config: unknown key '" + it.key() + "' in section '" + section +
                               "'");
}

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    check_keys(j, "top level",
               {"grid", "equation", "bc", "scheme", "train", "dataset", "bench", "converge",
                "seed"});
    return j;
}

/// Apply one `--set section.key=value` override (value parsed as JSON when
/// possible, else taken as a string).
void apply_override(json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw config_error("--set expects section.key=value");
    const std::string path = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(val);
    } catch (...) {
        parsed = val;
    }
    json* node = &cfg;
    size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw config_error("--set: empty key in '" + kv + "'");
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

EquationSet parse_equation(const json& j) {
    check_keys(j, "equation", {"kind", "gamma", "a"});
    const std::string kind = j.value("kind", "burgers");
    if (kind == "burgers") return EquationSet::burgers();
    if (kind == "advection") return EquationSet::advection(j.value("a", 1.0));
    if (kind == "euler1d") return EquationSet::euler1d(j.value("gamma", 1.4));
    if (kind == "euler2d") return EquationSet::euler2d(j.value("gamma", 1.4));
    throw config_error("equation.kind must be advection|burgers|euler1d|euler2d");
}

SideBc parse_side(const json& j, const EquationSet& eq) {
    check_keys(j, "bc side", {"type", "w_inf", "p_exit"});
    SideBc s;
    const std::string t = j.value("type", "periodic");
    if (t == "periodic")
        s.type = BcType::Periodic;
    else if (t == "supersonic_inflow")
        s.type = BcType::SupersonicInflow;
    else if (t == "supersonic_outflow")
        s.type = BcType::SupersonicOutflow;
    else if (t == "subsonic_inflow")
        s.type = BcType::SubsonicInflow;
    else if (t == "subsonic_outflow")
        s.type = BcType::SubsonicOutflow;
    else if (t == "slip")
        s.type = BcType::Slip;
    else
        throw config_error("unknown bc type: " + t);
    if (j.contains("w_inf")) {
        const auto v = j["w_inf"];
        if (!v.is_array() || v.size() != static_cast<size_t>(eq.nvars()))
            throw config_error("bc w_inf must be a primitive tuple of length nvars");
        for (size_t k = 0; k < v.size(); ++k) s.u_inf[k] = v[k];
    }
    s.p_exit = j.value("p_exit", 0.0);
    return s;
}

BoundarySpec parse_bc(const json& j, const EquationSet& eq, const GridSpec& g) {
    check_keys(j, "bc", {"left", "right", "bottom", "top", "solid_rects"});
    BoundarySpec bc;
    const char* names[4] = {"left", "right", "bottom", "top"};
    for (int s = 0; s < 4; ++s)
        if (j.contains(names[s])) bc.side[s] = parse_side(j[names[s]], eq);
    if (j.contains("solid_rects")) {
        bc.solid.assign(g.ncell(), 0);
        for (const auto& r : j["solid_rects"]) {
            check_keys(r, "solid rect", {"x0", "x1", "y0", "y1"});
            for (int jj = 0; jj < g.ny; ++jj)
                for (int ii = 0; ii < g.nx; ++ii)
                    if (g.xc(ii) >= r.value("x0", 0.0) && g.xc(ii) <= r.value("x1", 0.0) &&
                        g.yc(jj) >= r.value("y0", 0.0) && g.yc(jj) <= r.value("y1", 0.0))
                        bc.solid[static_cast<size_t>(jj) * g.nx + ii] = 1;
        }
    }
    validate_bc(bc, eq, g);
    return bc;
}

SchemeConfig parse_scheme(const json& j) {
    check_keys(j, "scheme", {"cfl", "limiter_on", "eps_ratio", "dt_max", "wall_zero_width"});
    SchemeConfig sc;
    sc.cfl = j.value("cfl", 0.4);
    sc.limiter_on = j.value("limiter_on", true);
    sc.eps_ratio = j.value("eps_ratio", 1e-14);
    sc.dt_max = j.value("dt_max", 1.0);
    sc.wall_zero_width = j.value("wall_zero_width", 1);
    sc.validate();
    return sc;
}

DatasetSpec parse_dataset(const json& j) {
    check_keys(j, "dataset",
               {"eq", "gamma", "a", "fine_nx", "fine_ny", "R", "n_ic", "n_steps", "phase", "seed",
                "cfl"});
    DatasetSpec spec;
    json eqj;
    eqj["kind"] = j.value("eq", "burgers");
    if (j.contains("gamma")) eqj["gamma"] = j["gamma"];
    if (j.contains("a")) eqj["a"] = j["a"];
    spec.eq = parse_equation(eqj);
    spec.fine_nx = j.value("fine_nx", 512);
    spec.fine_ny = j.value("fine_ny", spec.eq.ndim() == 2 ? spec.fine_nx : 1);
    spec.R = j.value("R", 2);
    spec.n_ic = j.value("n_ic", 1);
    spec.n_steps = j.value("n_steps", 1);
    const std::string phase = j.value("phase", "periodic");
    if (phase == "periodic")
        spec.phase = BcPhase::Periodic;
    else if (phase == "slip")
        spec.phase = BcPhase::Slip;
    else
        throw config_error("dataset.phase must be periodic|slip");
    spec.seed = j.value("seed", 0);
    spec.cfl = j.value("cfl", 0.4);
    spec.validate();
    return spec;
}

TrainConfig parse_train(const json& j, int threads) {
    check_keys(j, "train",
               {"lr", "batch", "epochs", "epochs_phase2", "lambda2", "lambda_ent", "lambda_tvd",
                "lambda_reg", "data_weight", "seed", "wall_zero_width", "val_fraction",
                "phase2_data"});
    TrainConfig cfg;
    cfg.lr = j.value("lr", 1e-3);
    cfg.batch = j.value("batch", 32);
    cfg.epochs = j.value("epochs", 10);
    cfg.epochs_phase2 = j.value("epochs_phase2", 0);
    cfg.weights.lambda2 = j.value("lambda2", 1.0);
    cfg.weights.ent = j.value("lambda_ent", 1e-4);
    cfg.weights.tvd = j.value("lambda_tvd", 1e-4);
    cfg.weights.reg = j.value("lambda_reg", 1e-4);
    cfg.weights.data_weight = j.value("data_weight", 1.0);
    cfg.seed = j.value("seed", 0);
    cfg.wall_zero_width = j.value("wall_zero_width", 1);
    cfg.val_fraction = j.value("val_fraction", 0.1);
    cfg.threads = threads;
    return cfg;
}

/// Fully-resolved configuration echoed beside every output.
json resolve_config(const json& cfg, const std::string& command, int threads) {
    json r = cfg;
    r["_command"] = command;
    r["_threads"] = threads;
    if (!r.contains("seed")) r["seed"] = 0;
    if (r.contains("train") && !r["train"].contains("seed")) r["train"]["seed"] = 0;
    if (r.contains("dataset") && !r["dataset"].contains("seed")) r["dataset"]["seed"] = 0;
    return r;
}

void write_resolved(const fs::path& target_dir_or_file, const json& resolved) {
    fs::path dir = target_dir_or_file;
    std::string name = "resolved_config.json";
    if (dir.has_extension()) {
        name = dir.filename().string() + ".resolved_config.json";
        dir = dir.parent_path();
    }
    if (dir.empty()) dir = ".";
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    os << resolved.dump(2) << "\n";
}

int thread_count(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("LDFV_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

SchemeConfig scheme_from_config(const json& cfg) {
    return cfg.contains("scheme") ? parse_scheme(cfg["scheme"]) : SchemeConfig{};
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen_data(const std::string& cfg_path, const std::vector<std::string>& overrides,
                 const std::string& out, int threads) {
    json cfg = load_config(cfg_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    if (!cfg.contains("dataset")) throw config_error("gen-data: config needs a dataset section");
    const DatasetSpec spec = parse_dataset(cfg["dataset"]);
    const Dataset ds = build_dataset(spec);
    save_dataset(out, ds);
    write_resolved(out, resolve_config(cfg, "gen-data", threads));
    std::cout << "wrote " << out << ": " << ds.size() << " samples, dt = " << ds.dt
              << ", redraws = " << ds.redraws << "\n";
    return 0;
}

int cmd_train(const std::string& cfg_path, const std::vector<std::string>& overrides,
              const std::string& data_path, const std::string& out, int threads) {
    json cfg = load_config(cfg_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    const TrainConfig tc = [&] {
        TrainConfig t = parse_train(cfg.value("train", json::object()), threads);
        t.metrics_path = (fs::path(out).parent_path() /
                          (fs::path(out).stem().string() + "_metrics.csv"))
                             .string();
        return t;
    }();
    const Dataset ds = load_dataset(data_path);
    std::optional<Dataset> phase2;
    if (cfg.contains("train") && cfg["train"].contains("phase2_data"))
        phase2 = load_dataset(cfg["train"]["phase2_data"]);

    ModelConfig mc;
    mc.ndim = ds.eq.ndim();
    mc.nvars = ds.eq.nvars();
    NetworkParams p0 = init_params(mc, tc.seed);
    const FitResult r = fit(ds, phase2 ? &*phase2 : nullptr, std::move(p0), tc);

    json meta;
    meta["epochs"] = tc.epochs;
    meta["epochs_phase2"] = tc.epochs_phase2;
    meta["lr"] = tc.lr;
    meta["batch"] = tc.batch;
    meta["lambda_ent"] = tc.weights.ent;
    meta["lambda_tvd"] = tc.weights.tvd;
    meta["lambda_reg"] = tc.weights.reg;
    meta["seed"] = tc.seed;
    meta["skipped_samples"] = r.total_skipped;
    meta["data_file"] = fs::path(data_path).filename().string();
    save_checkpoint(out, r.params, tc.wall_zero_width, meta);
    write_resolved(out, resolve_config(cfg, "train", threads));
    if (!r.log.empty())
        std::cout << "trained " << r.log.size() << " epochs; final train loss "
                  << r.log.back().train_loss << ", val loss " << r.log.back().val_loss << "\n";
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_simulate(const std::string& cfg_path, const std::vector<std::string>& overrides,
                 const std::string& ckpt, const std::string& out, int threads) {
    json cfg = load_config(cfg_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    check_keys(cfg.value("bench", json::object()), "bench",
               {"case", "t_end", "grid", "snapshots", "compare_fine"});
    const json bj = cfg.value("bench", json::object());
    if (!bj.contains("case")) throw config_error("simulate: bench.case names the initial condition");

    auto reg = case_registry();
    const BenchCase& c = find_case(reg, bj["case"]);
    SchemeConfig sc = scheme_from_config(cfg);
    std::optional<Checkpoint> ck;
    if (!ckpt.empty()) {
        ck = load_checkpoint(ckpt);
        sc.model = &ck->params;
        sc.wall_zero_width = ck->wall_zero_width;
    }
    int nx = c.coarse_nx, ny = c.coarse_ny;
    if (bj.contains("grid")) {
        nx = bj["grid"][0];
        ny = bj["grid"].size() > 1 ? int(bj["grid"][1]) : 1;
    }
    const double t_end = bj.value("t_end", c.t_end);
    const int nsnap = bj.value("snapshots", 2);

    const GridSpec g = c.eq.ndim() == 2 ? make_uniform_grid(2, c.bounds, nx, ny)
                                        : make_uniform_grid(1, {c.bounds[0], c.bounds[1]}, nx);
    // the bc section overrides the case's default boundary conditions
    const BoundarySpec bc = cfg.contains("bc") ? parse_bc(cfg["bc"], c.eq, g) : c.bc(g);
    const Trajectory tr = simulate(c.ic(g, c.eq), bc, c.eq, sc, t_end, std::nullopt, nsnap);

    fs::create_directories(out);
    json index;
    index["case"] = c.name;
    index["variant"] = ckpt.empty() ? "classical" : "learned";
    index["t_end"] = t_end;
    index["total_steps"] = tr.total_steps;
    index["times"] = tr.times;
    json files = json::array();
    for (size_t k = 0; k < tr.states.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "snap_%04zu.ldfv", k);
        save_field((fs::path(out) / name).string(), tr.states[k]);
        files.push_back(name);
    }
    index["files"] = files;
    std::ofstream(fs::path(out) / "index.json") << index.dump(2) << "\n";
    write_resolved(out, resolve_config(cfg, "simulate", threads));
    std::cout << "simulated " << c.name << " to t = " << t_end << " in " << tr.total_steps
              << " steps -> " << out << "\n";
    return 0;
}

int cmd_bench(const std::string& which, const std::string& ckpt, const std::string& out,
              bool no_reference, const std::string& grid_flag, double t_end_flag, int threads) {
    auto reg = case_registry();
    std::vector<const BenchCase*> cases;
    if (which == "all")
        for (const auto& c : reg) cases.push_back(&c);
    else
        cases.push_back(&find_case(reg, which));

    SchemeConfig sc;
    std::optional<Checkpoint> ck;
    if (!ckpt.empty()) {
        ck = load_checkpoint(ckpt);
        sc.model = &ck->params;
        sc.wall_zero_width = ck->wall_zero_width;
    }
    std::optional<std::pair<int, int>> grid_override;
    if (!grid_flag.empty()) {
        const auto comma = grid_flag.find(',');
        grid_override = {std::stoi(grid_flag.substr(0, comma)),
                         comma == std::string::npos ? 1 : std::stoi(grid_flag.substr(comma + 1))};
    }
    std::optional<double> t_override;
    if (t_end_flag > 0.0) t_override = t_end_flag;

    json cfg;
    cfg["bench"] = {{"case", which},
                    {"compare_fine", !no_reference},
                    {"variant", ckpt.empty() ? "classical" : "learned"}};
    write_resolved(out, resolve_config(cfg, "bench", threads));
    for (const BenchCase* c : cases) {
        const auto rep = run_case(*c, sc, (fs::path(out) / c->name).string(), !no_reference,
                                  grid_override, t_override,
                                  ckpt.empty() ? "classical" : "learned");
        std::cout << c->name << ": steps = " << rep["steps"];
        if (rep.contains("l2_density")) std::cout << ", l2_density = " << rep["l2_density"];
        if (rep.contains("symmetry_defect"))
            std::cout << ", symmetry_defect = " << rep["symmetry_defect"];
        std::cout << "\n";
    }
    return 0;
}

int cmd_vonneumann(const std::string& ckpt, const std::string& alpha_flag, double co, double wbar,
                   int ntheta, const std::string& out, bool svg, int threads) {
    LinearizedStencil st;
    if (!alpha_flag.empty()) {
        std::array<double, 3> a{};
        if (std::sscanf(alpha_flag.c_str(), "%lf,%lf,%lf", &a[0], &a[1], &a[2]) != 3)
            throw config_error("--alpha expects a,b,c");
        st.alpha = a;
    } else if (!ckpt.empty()) {
        const Checkpoint ck = load_checkpoint(ckpt);
        if (ck.params.cfg.nvars != 1 || ck.params.cfg.ndim != 1)
            throw config_error("vonneumann: checkpoint must be a 1D scalar model");
        st = linearize_network(ck.params, wbar, EquationSet::burgers());
    } else {
        throw config_error("vonneumann: pass --alpha a,b,c or --ckpt");
    }

    const auto rows = dissipation_dispersion_table(st, co, ntheta);
    fs::create_directories(fs::path(out).parent_path().empty() ? "."
                                                               : fs::path(out).parent_path());
    std::ofstream os(out);
    if (!os) throw config_error("cannot open for write: " + out);
    os.precision(17);
    os << "theta,magnitude,phase,exact_phase\n";
    for (const auto& r : rows)
        os << r.theta << "," << r.magnitude << "," << r.phase << "," << r.exact_phase << "\n";

    if (svg) {
        ldfv_cli::Series mag{"|S|", "#1f6fb2", {}, {}}, ph{"arg S", "#b23f1f", {}, {}},
            ex{"exact", "#2ca05a", {}, {}};
        for (const auto& r : rows) {
            mag.x.push_back(r.theta);
            mag.y.push_back(r.magnitude);
            ph.x.push_back(r.theta);
            ph.y.push_back(r.phase);
            ex.x.push_back(r.theta);
            ex.y.push_back(r.exact_phase);
        }
        const fs::path base = fs::path(out).replace_extension();
        ldfv_cli::write_svg_plot(base.string() + "_dissipation.svg", {mag},
                                 "one-step amplification", "theta", "|S|");
        ldfv_cli::write_svg_plot(base.string() + "_dispersion.svg", {ph, ex},
                                 "one-step phase", "theta", "arg S");
    }
    json cfg;
    cfg["vonneumann"] = {{"co", co},
                         {"ntheta", ntheta},
                         {"alpha", st.alpha},
                         {"wbar", wbar},
                         {"ckpt", ckpt}};
    write_resolved(out, resolve_config(cfg, "vonneumann", threads));
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_converge(const std::string& cfg_path, const std::vector<std::string>& overrides,
                 const std::string& ckpt, const std::string& out, int threads) {
    json cfg = load_config(cfg_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    if (!cfg.contains("converge")) throw config_error("converge: config needs a converge section");
    const json cj = cfg["converge"];
    check_keys(cj, "converge", {"case", "grids", "t_end", "variants", "ref_factor"});

    auto reg = case_registry();
    const BenchCase& c = find_case(reg, cj.value("case", "advect-sine"));
    std::vector<int> grids = cj.value("grids", std::vector<int>{64, 128, 256});
    const double t_end = cj.value("t_end", c.t_end);
    const int ref_factor = cj.value("ref_factor", 4);

    SchemeConfig base = scheme_from_config(cfg);
    std::vector<ConvergenceVariant> variants;
    std::optional<Checkpoint> ck;
    for (const std::string& name : cj.value("variants", std::vector<std::string>{"classical"})) {
        ConvergenceVariant v{name, base};
        if (name == "learned") {
            if (ckpt.empty()) throw config_error("converge: learned variant needs --ckpt");
            ck = load_checkpoint(ckpt);
            v.scheme.model = &ck->params;
            v.scheme.wall_zero_width = ck->wall_zero_width;
        } else if (name != "classical") {
            throw config_error("converge: variants are classical|learned");
        }
        variants.push_back(v);
    }

    const auto study = convergence_study(
        c.eq, [&](const GridSpec& g) { return c.ic(g, c.eq); }, c.bc(make_uniform_grid(
                                                                    c.eq.ndim(), c.bounds,
                                                                    grids[0],
                                                                    c.eq.ndim() == 2 ? grids[0] : 1)),
        grids, t_end, variants, ref_factor);

    std::ofstream os(out);
    if (!os) throw config_error("cannot open for write: " + out);
    os.precision(17);
    os << "n_cells";
    for (const auto& v : study.variants) os << ",err_" << v << ",eoc_" << v;
    os << "\n";
    for (size_t gdx = 0; gdx < study.grids.size(); ++gdx) {
        os << study.grids[gdx];
        for (size_t v = 0; v < study.variants.size(); ++v) {
            os << "," << study.errors[v][gdx] << ",";
            if (gdx > 0) os << study.eoc[v][gdx - 1];
        }
        os << "\n";
    }
    write_resolved(out, resolve_config(cfg, "converge", threads));
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_dataset_inspect(const std::string& path) {
    std::cout << inspect_dataset(path).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ldfv: data-driven finite-volume solver for hyperbolic conservation laws"};
    app.require_subcommand(1);
    int threads_flag = 0;
    app.add_option("--threads", threads_flag,
                   "worker threads (1 = bit-reproducible; env LDFV_THREADS as fallback)");

    std::vector<std::string> overrides;
    std::string cfg_path, out, data_path, ckpt, which, alpha_flag, grid_flag;
    double co = 0.4, wbar = 1.0, t_end_flag = -1.0;
    int ntheta = 256;
    bool svg = false, no_reference = false;

    auto* gen = app.add_subcommand("gen-data", "generate a training dataset");
    gen->add_option("spec", cfg_path, "dataset spec JSON")->required();
    gen->add_option("-o,--output", out, "output dataset file")->required();
    gen->add_option("--set", overrides, "override config values (section.key=value)");

    auto* train = app.add_subcommand("train", "train the coefficient network");
    train->add_option("config", cfg_path, "run configuration JSON")->required();
    train->add_option("--data", data_path, "phase-1 dataset file")->required();
    train->add_option("-o,--output", out, "checkpoint manifest path (.json)")->required();
    train->add_option("--set", overrides, "override config values");

    auto* sim = app.add_subcommand("simulate", "run one case and store snapshots");
    sim->add_option("config", cfg_path, "run configuration JSON")->required();
    sim->add_option("--ckpt", ckpt, "checkpoint manifest (learned scheme; classical if absent)");
    sim->add_option("-o,--output", out, "output directory")->required();
    sim->add_option("--set", overrides, "override config values");

    auto* bench = app.add_subcommand("bench", "run canonical benchmark cases");
    bench->add_option("case", which, "case name or 'all'")->required();
    bench->add_option("--ckpt", ckpt, "checkpoint manifest (learned variant)");
    bench->add_option("-o,--output", out, "output directory")->required();
    bench->add_flag("--no-reference", no_reference, "skip the fine reference run");
    bench->add_option("--grid", grid_flag, "coarse grid override nx[,ny]");
    bench->add_option("--t-end", t_end_flag, "final time override");

    auto* von = app.add_subcommand("vonneumann", "amplification-factor tables and curves");
    von->add_option("--ckpt", ckpt, "linearize this checkpoint");
    von->add_option("--alpha", alpha_flag, "fixed stencil a,b,c");
    von->add_option("--co", co, "Courant number")->required();
    von->add_option("--wbar", wbar, "base state for linearization");
    von->add_option("--ntheta", ntheta, "theta samples");
    von->add_option("-o,--output", out, "output CSV")->required();
    von->add_flag("--svg", svg, "write SVG curves next to the CSV");

    auto* conv = app.add_subcommand("converge", "grid convergence study");
    conv->add_option("config", cfg_path, "run configuration JSON")->required();
    conv->add_option("--ckpt", ckpt, "checkpoint for the learned variant");
    conv->add_option("-o,--output", out, "output CSV")->required();
    conv->add_option("--set", overrides, "override config values");

    auto* dataset = app.add_subcommand("dataset", "dataset utilities");
    auto* inspect = dataset->add_subcommand("inspect", "print a dataset header as JSON");
    inspect->add_option("file", data_path, "dataset file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    const int threads = thread_count(threads_flag);
    try {
        if (*gen) return cmd_gen_data(cfg_path, overrides, out, threads);
        if (*train) return cmd_train(cfg_path, overrides, data_path, out, threads);
        if (*sim) return cmd_simulate(cfg_path, overrides, ckpt, out, threads);
        if (*bench)
            return cmd_bench(which, ckpt, out, no_reference, grid_flag, t_end_flag, threads);
        if (*von) return cmd_vonneumann(ckpt, alpha_flag, co, wbar, ntheta, out, svg, threads);
        if (*conv) return cmd_converge(cfg_path, overrides, ckpt, out, threads);
        if (*inspect) return cmd_dataset_inspect(data_path);
        std::cerr << app.help();
        return 1;
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const shape_error& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 1;
    } catch (const admissibility_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ldfv/fv.hpp"
#include "ldfv/model.hpp"

using namespace ldfv;

namespace {

Field random_burgers_field(int n, uint64_t seed) {
    auto g = make_uniform_grid(1, {0.0, 1.0}, n);
    Field f = make_field(g, 1);
    CounterRng rng(seed, 0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int m = 0; m < 8; ++m)
            s += rng.uniform(-0.5, 0.5) * std::sin(2 * M_PI * rng.uniform_int(2, 10) * g.xc(i));
        f.data[i] = s;
    }
    return f;
}

NetworkParams random_params(const ModelConfig& cfg, uint64_t seed) {
    NetworkParams p = init_params(cfg, seed);
    CounterRng rng(seed, 99);
    // give the final layer nonzero weights too
    for (double& x : p.theta) x += 0.05 * rng.uniform(-1, 1);
    return p;
}

}  // namespace

TEST_CASE("normalize", "[model]") {
    auto g = make_uniform_grid(1, {0.0, 1.0}, 4);
    Field f = make_field(g, 2);
    f.data = {0.0, 1.0, 2.0, 1.0, /* var 1: constant */ 3.0, 3.0, 3.0, 3.0};
    auto n = normalize(f);
    CHECK(n.data[0] == -1.0);
    CHECK(n.data[2] == 1.0);
    CHECK(n.data[1] == Catch::Approx(0.0).margin(1e-15));
    for (int i = 0; i < 4; ++i) CHECK(n.data[4 + i] == 0.0);

    SECTION("midpoint of span maps to zero") {
        Field h = make_field(g, 1);
        h.data = {-1.0, 3.0, 1.0, 0.0}; // span [-1, 3], value 1 -> 0
        auto hn = normalize(h);
        CHECK(hn.data[2] == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("constrain zero-sum map", "[model]") {
    double a[3];
    double r0[4] = {0, 0, 0, 0};
    nn::constrain(r0, a);
    CHECK((a[0] == 0.0 && a[1] == 0.0 && a[2] == 0.0));

    double r1[4] = {0, 0, 1, 0};
    nn::constrain(r1, a);
    CHECK(a[0] == Catch::Approx(-0.5));
    CHECK(a[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(a[2] == Catch::Approx(0.5));

    CounterRng rng(13, 0);
    for (int t = 0; t < 100; ++t) {
        double r[4];
        for (double& x : r) x = rng.uniform(-10, 10);
        nn::constrain(r, a);
        CHECK(a[0] + a[1] + a[2] == Catch::Approx(0.0).margin(1e-13));
    }
}

TEST_CASE("forward basics", "[model]") {
    ModelConfig cfg{1, 1};
    auto bc = BoundarySpec::all_periodic();
    Field f = random_burgers_field(32, 5);

    SECTION("zero-initialized network emits exactly zero coefficients") {
        NetworkParams p = init_params(cfg, 3);
        auto alpha = forward(p, f, bc);
        for (double x : alpha.a) CHECK(x == 0.0);
    }

    SECTION("coefficients sum to zero per site") {
        NetworkParams p = random_params(cfg, 7);
        auto alpha = forward(p, f, bc);
        for (size_t s = 0; s < alpha.a.size(); s += 3)
            CHECK(alpha.a[s] + alpha.a[s + 1] + alpha.a[s + 2] ==
                  Catch::Approx(0.0).margin(1e-13));
    }

    SECTION("bit-exact determinism") {
        NetworkParams p = random_params(cfg, 7);
        auto a1 = forward(p, f, bc);
        auto a2 = forward(p, f, bc);
        CHECK(a1.a == a2.a);
    }

    SECTION("translation equivariance under periodic bc") {
        NetworkParams p = random_params(cfg, 11);
        auto a1 = forward(p, f, bc);
        const int m = 5, n = f.grid.nx;
        Field shifted = f;
        for (int i = 0; i < n; ++i) shifted.data[(i + m) % n] = f.data[i];
        auto a2 = forward(p, shifted, bc);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 3; ++k)
                CHECK(a2.a[((i + m) % n) * 3 + k] ==
                      Catch::Approx(a1.a[i * 3 + k]).margin(1e-12));
    }

    SECTION("invariance under positive affine rescaling of the input") {
        NetworkParams p = random_params(cfg, 15);
        Field f2 = f;
        for (double& x : f2.data) x = 3.5 * x + 1.25;
        auto n1 = normalize(f);
        auto n2 = normalize(f2);
        for (size_t k = 0; k < n1.data.size(); ++k)
            CHECK(n2.data[k] == Catch::Approx(n1.data[k]).margin(1e-12));
        auto a1 = forward(p, f, bc);
        auto a2 = forward(p, f2, bc);
        for (size_t k = 0; k < a1.a.size(); ++k)
            CHECK(a2.a[k] == Catch::Approx(a1.a[k]).margin(1e-12));
    }

    SECTION("shape mismatch rejected") {
        NetworkParams p = init_params(ModelConfig{1, 3}, 0);
        CHECK_THROWS_AS(forward(p, f, bc), config_error);
    }
}

TEST_CASE("learned increment stencils", "[model]") {
    auto g = make_uniform_grid(1, {0.0, 1.0}, 8);
    auto eq = EquationSet::burgers();
    auto bc = BoundarySpec::all_periodic();

    SECTION("alpha_base on u_i = i gives the forward difference 1") {
        Field f = make_field(g, 1);
        for (int i = 0; i < 8; ++i) f.data[i] = i;
        auto p = pad(f, bc, 1, eq, Repr::Primitive);
        // overwrite wrap ghosts so the line is globally linear
        p.at(0, 0, -1) = -1.0;
        p.at(0, 0, 8) = 8.0;
        CoeffField c = make_coeff_field(1, 1, 8, 1);
        add_alpha_base(c);
        auto d = learned_increment(p, c, 0);
        for (int i = 0; i < 8; ++i) CHECK(d.data[i] == Catch::Approx(1.0));
    }

    SECTION("zero-sum alpha on constant field gives zero") {
        Field f = make_field(g, 1);
        for (auto& x : f.data) x = 4.2;
        auto p = pad(f, bc, 1, eq, Repr::Primitive);
        CoeffField c = make_coeff_field(1, 1, 8, 1);
        CounterRng rng(3, 0);
        for (size_t s = 0; s < c.a.size(); s += 3) {
            c.a[s] = rng.uniform(-1, 1);
            c.a[s + 2] = rng.uniform(-1, 1);
            c.a[s + 1] = -c.a[s] - c.a[s + 2];
        }
        auto d = learned_increment(p, c, 0);
        for (int i = 0; i < 8; ++i) CHECK(d.data[i] == Catch::Approx(0.0).margin(1e-13));
    }

    SECTION("centered stencil on squares: (9-1)/2 = 4") {
        Field f = make_field(g, 1);
        for (int i = 0; i < 8; ++i) f.data[i] = (i + 1.0) * (i + 1.0); // 1,4,9,...
        auto p = pad(f, bc, 1, eq, Repr::Primitive);
        CoeffField c = make_coeff_field(1, 1, 8, 1);
        for (size_t s = 0; s < c.a.size(); s += 3) {
            c.a[s] = -0.5;
            c.a[s + 2] = 0.5;
        }
        auto d = learned_increment(p, c, 0);
        CHECK(d.data[1] == Catch::Approx(4.0)); // values 1, 4, 9 around i = 1
    }
}

TEST_CASE("zero wall coefficients", "[model]") {
    CoeffField c = make_coeff_field(1, 1, 8, 1);
    for (auto& x : c.a) x = 1.0;

    SECTION("periodic-only bc leaves everything untouched") {
        auto copy = c;
        zero_wall_coeffs(copy, BoundarySpec::all_periodic(), 2);
        CHECK(copy.a == c.a);
    }

    SECTION("slip walls zero the `width` adjacent cells") {
        BoundarySpec bc;
        bc.side[0].type = BcType::Slip;
        bc.side[1].type = BcType::Slip;
        auto copy = c;
        zero_wall_coeffs(copy, bc, 2);
        for (int i = 0; i < 8; ++i)
            for (int k = 0; k < 3; ++k)
                CHECK(copy.a[i * 3 + k] == ((i < 2 || i >= 6) ? 0.0 : 1.0));
    }
}

TEST_CASE("learned path with zero ML equals classical bit for bit", "[model]") {
    auto eq = EquationSet::burgers();
    auto bc = BoundarySpec::all_periodic();
    Field f = random_burgers_field(64, 21);
    NetworkParams p = init_params(ModelConfig{1, 1}, 4);

    SchemeConfig classical;
    SchemeConfig learned;
    learned.model = &p;

    Field a = f, b = f;
    for (int k = 0; k < 25; ++k) {
        const double dt = cfl_dt(a, bc, eq, classical);
        a = step(a, bc, eq, classical, dt, k);
        b = step(b, bc, eq, learned, dt, k);
    }
    CHECK(a.data == b.data); // bitwise

    SECTION("euler1d as well") {
        auto eq1 = EquationSet::euler1d();
        auto g = make_uniform_grid(1, {0.0, 1.0}, 32);
        Field w = make_field(g, 3);
        for (int i = 0; i < 32; ++i) {
            State u{1.0 + 0.2 * std::sin(2 * M_PI * g.xc(i)), 0.4, 1.0, 0.0};
            State ws = primitive_to_conserved(eq1, u);
            for (int v = 0; v < 3; ++v) w.at(v, 0, i) = ws[v];
        }
        NetworkParams p3 = init_params(ModelConfig{1, 3}, 4);
        SchemeConfig withml;
        withml.model = &p3;
        Field x = w, y = w;
        for (int k = 0; k < 10; ++k) {
            const double dt = cfl_dt(x, bc, eq1, classical);
            x = step(x, bc, eq1, classical, dt, k);
            y = step(y, bc, eq1, withml, dt, k);
        }
        CHECK(x.data == y.data);
    }
}

TEST_CASE("checkpoint round trip", "[model]") {
    ModelConfig cfg{1, 1};
    NetworkParams p = random_params(cfg, 31);
    auto dir = std::filesystem::temp_directory_path() / "ldfv_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.json").string();
    save_checkpoint(path, p, 2, {{"epochs", 0}});
    auto ck = load_checkpoint(path);
    CHECK(ck.params.theta == p.theta);
    CHECK(ck.wall_zero_width == 2);
    CHECK(ck.params.cfg.hidden == 32);

    SECTION("identical saves are byte-identical") {
        const std::string p2 = (dir / "model2.json").string();
        save_checkpoint(p2, p, 2, {{"epochs", 0}});
        auto slurp = [](const std::string& f) {
            std::ifstream is(f, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(is), {});
        };
        CHECK(slurp((dir / "model.bin").string()) == slurp((dir / "model2.bin").string()));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("forward in 2d with mixed padding", "[model]") {
    ModelConfig cfg{2, 4};
    auto g = make_uniform_grid(2, {0.0, 1.0, 0.0, 1.0}, 8, 8);
    Field f = make_field(g, 4);
    CounterRng rng(41, 0);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) {
            f.at(0, j, i) = rng.uniform(0.5, 2.0);
            f.at(1, j, i) = rng.uniform(-1, 1);
            f.at(2, j, i) = rng.uniform(-1, 1);
            f.at(3, j, i) = rng.uniform(0.5, 2.0);
        }
    BoundarySpec bc;
    bc.side[0].type = BcType::Periodic;
    bc.side[1].type = BcType::Periodic;
    bc.side[2].type = BcType::Slip;
    bc.side[3].type = BcType::Slip;

    NetworkParams p = random_params(cfg, 51);
    auto alpha = forward(p, f, bc);
    CHECK(alpha.a.size() == static_cast<size_t>(2 * 4 * 64 * 3));
    for (size_t s = 0; s < alpha.a.size(); s += 3)
        CHECK(alpha.a[s] + alpha.a[s + 1] + alpha.a[s + 2] == Catch::Approx(0.0).margin(1e-12));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "morsedisk/disk.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace morsedisk;

namespace {

const double kPi = 3.14159265358979323846;
const ModelManifold kCircle{1, ManifoldKind::FlatTorus};

ScalarFunction tfn(const std::string& src) { return ScalarFunction::parse(src, 1, {true}); }

PointSelector by_index(int k) { return {std::nullopt, k}; }

std::string shifted_cos(double amp, double shift)
{
    std::ostringstream os;
    os.precision(17);
    os << amp << "*cos(2*pi*x0 - " << 2 * kPi * shift << ")";
    return os.str();
}

TreeProblem floer_circle()
{
    auto tree = enumerate_ribbon_trees(2, false, true).front();
    return make_problem(tree, kCircle, {{{0, 1}, tfn("cos(2*pi*x0)")}}, {by_index(0), by_index(0)});
}

TreeProblem four_leaf(const std::string& encoding)
{
    std::map<std::pair<int, int>, ScalarFunction> fns;
    const double shifts[4][4] = {{0, .11, .23, .37}, {0, 0, .41, .53}, {0, 0, 0, .67}, {0, 0, 0, 0}};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            fns.emplace(std::make_pair(i, j), tfn(shifted_cos(0.15 + 0.02 * (i + j), shifts[i][j])));
    return make_problem(RibbonTree::from_encoding(encoding), kCircle, fns,
                        {by_index(1), by_index(0), by_index(0), by_index(0)});
}

double simpson(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

double max_strip_residual(const DiskMap& u)
{
    double r = 0.0;
    for (std::size_t e = 0; e < u.strips.size(); ++e)
        r = std::max(r, strip_residual(u, static_cast<int>(e)).max_norm);
    return r;
}

} // namespace

TEST_CASE("smooth step and cutoffs")
{
    CHECK(smooth_step(0.0) == 0.0);
    CHECK(smooth_step(1.0) == 1.0);
    CHECK(smooth_step(-3.0) == 0.0);
    double prev = 0.0;
    for (int i = 1; i < 100; ++i) {
        const double t = i / 100.0;
        CHECK(smooth_step(t) >= prev);
        prev = smooth_step(t);
        CHECK(smooth_step(t) + smooth_step(1 - t) == doctest::Approx(1.0).epsilon(1e-14));
        const double d = 1e-6;
        CHECK(smooth_step_derivative(t)
              == doctest::Approx((smooth_step(t + d) - smooth_step(t - d)) / (2 * d)).epsilon(1e-6));
    }
    CHECK(cutoff_rho(3.0, 1.5) == 1.0);
    for (double s : {0.1, 0.25, 0.4})
        CHECK(cutoff_rho(0.5, s) <= smooth_step(0.5));
    CHECK(smooth_step(0.5) < 1.0);
    CHECK(cutoff_rho(2.0, 0.0) == 0.0);
    CHECK(cutoff_rho(2.0, -0.5) == 0.0);
    CHECK(cutoff_rho_external(-2.0) == 1.0);
    CHECK(cutoff_rho_external(0.0) == 0.0);
    for (double s : {0.3, 0.9, 1.7}) {
        const double d = 1e-6, l = 1.9;
        CHECK(cutoff_rho_dl(l, s)
              == doctest::Approx((cutoff_rho(l + d, s) - cutoff_rho(l - d, s)) / (2 * d)).epsilon(1e-6));
        CHECK(cutoff_rho_dl(l, s) >= 0.0);
    }
}

TEST_CASE("strip length bookkeeping")
{
    const double eps = 0.1;
    for (double l0 : {2.0, 5.0, 10.0}) {
        const double R = eps * strip_integral(l0);
        CHECK(std::abs(strip_length_from_edge(R, eps) - l0) <= 1e-10);
    }
    // Asymptote: phi(t) + phi(1 - t) = 1 makes the offset exactly 1.
    for (double R : {5.0, 50.0})
        CHECK(std::abs(strip_length_from_edge(R, 0.2) - (R / 0.2 + 1.0)) <= 1e-10);

    // Oracle: fine Simpson integral of rho_l, bisected independently.
    auto oracle_integral = [](double l) {
        return simpson([l](double s) { return smooth_step(l) * smooth_step(s) * smooth_step(l - s); }, 0.0, l, 20000);
    };
    double lo = 0.0, hi = 3.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.1 * oracle_integral(mid) < 0.05 ? lo : hi) = mid;
    }
    CHECK(std::abs(strip_length_from_edge(0.05, 0.1) - 0.5 * (lo + hi)) <= 1e-9);
    CHECK(strip_integral(1.3) == doctest::Approx(oracle_integral(1.3)).epsilon(1e-11));

    CHECK_THROWS_AS(strip_length_from_edge(0.0, 0.1), Error);
    CHECK_THROWS_AS(strip_length_from_edge(-1.0, 0.1), Error);
    CHECK_THROWS_AS(strip_length_from_edge(1.0, 0.0), Error);
}

TEST_CASE("constructed Floer strip")
{
    auto p = floer_circle();
    auto g = solve(p).front();
    auto u = build_solution(p, g, 0.1, Vector(0));
    REQUIRE(u.strips.size() == 2);
    REQUIRE(u.vertices.size() == 1);
    for (const auto& st : u.strips) {
        CHECK(st.kind == Strip::Kind::External);
        CHECK(st.p.cwiseAbs().maxCoeff() == 0.0);
        // independent of t
        for (int j = 0; j < st.ns(); j += 37)
            for (int i = 1; i < st.nt(); ++i)
                CHECK(st.q.col(st.column(i, j)) == st.q.col(st.column(0, j)));
        CHECK(kCircle.distance(st.q.col(st.column(0, st.ns() - 1)), u.vertices[0].position) <= 1e-9);
        CHECK(st.end_gap <= 1e-8);
        CHECK(st.s0 == doctest::Approx(-(st.morse_length / 0.1 + 0.5)));
        for (std::size_t j = 1; j < st.l.size(); ++j)
            CHECK(st.l[j] >= st.l[j - 1]);
    }
    CHECK(vertex_residual(u, 0) == 0.0);
    auto b = beta(u.strips[0]);
    for (std::size_t j = 0; j < b.s.size(); ++j) {
        CHECK(std::abs(b.beta[j]) <= 1e-12);
        CHECK(std::abs(b.beta_dot[j]) <= 1e-12);
    }
    CHECK(energy_identity_check(u).defect <= 1e-10);

    CHECK_THROWS_AS(build_solution(p, g, 0.3, Vector(0)), Error);
    CHECK_THROWS_AS(build_solution(p, g, 0.1, Vector::Zero(1)), Error);
}

TEST_CASE("strip residual is pure discretization error")
{
    auto p = four_leaf("((1,2),3)");
    auto g = solve(p).front();
    for (double eps : {0.2, 0.1, 0.05}) {
        double prev = 0.0;
        for (int spu : {200, 400, 800}) {
            DiskGrid grid;
            grid.s_per_unit = spu;
            grid.t_nodes = 5;
            auto u = build_solution(p, g, eps, Vector(0), grid);
            const double r = max_strip_residual(u);
            if (prev > 0.0)
                CHECK(prev / r > 3.5);
            prev = r;
            const Strip& st = u.strips[static_cast<std::size_t>(p.tree.internal_edge_id(0))];
            CHECK(st.kind == Strip::Kind::Internal);
            CHECK(st.length_gap <= 1e-9);
            // strip ends match the vertex regions
            const auto& he = p.tree.half_edge(st.end_half_edge);
            CHECK(kCircle.distance(st.q.col(st.column(0, st.ns() - 1)),
                                   u.vertices[static_cast<std::size_t>(he.source)].position)
                  <= 1e-9);
        }
        CHECK(prev <= 1e-5);
    }

    // A generic map is not a solution.
    auto u = build_solution(p, g, 0.1, Vector(0));
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> c(0.5, 1.5);
    Strip& st = u.strips[4];
    const double a = c(rng), k = c(rng);
    for (int j = 0; j < st.ns(); ++j)
        for (int i = 0; i < st.nt(); ++i) {
            st.q(0, st.column(i, j)) += a * std::sin(k * st.s[j]) * std::cos(kPi * st.t[i]);
            st.p(0, st.column(i, j)) += a * std::sin(kPi * st.t[i]);
        }
    CHECK(strip_residual(u, 4).max_norm > 0.1);
}

TEST_CASE("zero-length edge becomes a constant neck")
{
    auto p = four_leaf("((1,2),3)");
    SolveOptions pin;
    pin.metric_guess = {0.0};
    auto g = solve(p, pin).front();
    auto u = build_solution(p, g, 0.1, Vector(0));
    const Strip& st = u.strips[4];
    CHECK(st.kind == Strip::Kind::Neck);
    CHECK(st.length == 0.0);
    for (int c = 1; c < st.q.cols(); ++c)
        CHECK(st.q.col(c) == st.q.col(0));
    CHECK(strip_residual(u, 4).max_norm == 0.0);

    auto corolla = four_leaf("(1,2,3)");
    auto gc = solve(corolla).front();
    CHECK_NOTHROW(build_solution(corolla, gc, 0.1, Vector::Zero(1)));
    CHECK_THROWS_AS(build_solution(corolla, gc, 0.1, Vector(0)), Error);
}

TEST_CASE("beta and its first-derivative identity")
{
    auto p = floer_circle();
    auto u = build_solution(p, solve(p).front(), 0.1, Vector(0));
    Strip st = u.strips[0];
    const double c = 0.7;
    auto w = [](double s) { return std::exp(-s * s); };
    for (int j = 0; j < st.ns(); ++j)
        for (int i = 0; i < st.nt(); ++i)
            st.p(0, st.column(i, j)) = c * std::sin(kPi * st.t[i]) * w(st.s[j]);
    auto b = beta(st);
    for (int j = 0; j < st.ns(); j += 50)
        CHECK(b.beta[j] == doctest::Approx(0.25 * c * c * w(st.s[j]) * w(st.s[j])).epsilon(2e-3));

    // Manufactured field with d_s p = d_t q: q = A sin(k s) cos(pi t),
    // p = A pi / k (cos(k s) - 1) sin(pi t).
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> r(0.5, 1.5);
    const double A = r(rng), k = r(rng);
    double prev = 0.0;
    for (int k2 : {2, 4, 8}) {
        DiskGrid grid;
        grid.t_nodes = 64 * k2 + 1;
        grid.s_per_unit = 50 * k2;
        auto v = build_solution(p, solve(p).front(), 0.1, Vector(0), grid);
        Strip& m = v.strips[1];
        for (int j = 0; j < m.ns(); ++j)
            for (int i = 0; i < m.nt(); ++i) {
                const double s = m.s[j], t = m.t[i];
                m.q(0, m.column(i, j)) = A * std::sin(k * s) * std::cos(kPi * t);
                m.p(0, m.column(i, j)) = A * kPi / k * (std::cos(k * s) - 1.0) * std::sin(kPi * t);
            }
        auto bm = beta(m);
        double worst = 0.0;
        for (std::size_t j = 0; j < bm.s.size(); ++j)
            worst = std::max(worst, std::abs(bm.beta_dot[j] - bm.flux[j]));
        if (prev > 0.0)
            CHECK(prev / worst > 3.5);
        prev = worst;
    }
    CHECK(prev <= 1e-5);
}

TEST_CASE("energy identity and vertex Stokes")
{
    auto p = four_leaf("((1,2),3)");
    auto g = solve(p).front();
    double prev = 0.0;
    for (int k : {1, 2, 4}) {
        DiskGrid grid;
        grid.s_per_unit = 50 * k;
        grid.t_nodes = 16 * k + 1;
        grid.angular_per_arc = 24 * k;
        grid.radial_nodes = 8 * k + 1;
        auto u = build_solution(p, g, 0.1, Vector(0), grid);
        CHECK(energy_identity_check(u).defect <= 1e-10);
        perturb_lagrangian(u, 2024, 0.3);
        auto rep = energy_identity_check(u);
        double scale = 0.0;
        for (double x : rep.strip_terms)
            scale = std::max(scale, std::abs(x));
        CHECK(scale > 1e-3);  // the perturbation is not trivial
        if (prev > 0.0)
            CHECK(prev / rep.defect > 3.5);
        prev = rep.defect;
    }

    VertexRegion r;
    r.half_edges = {0, 1, 2};
    r.arc_reversed = {false, true, false};
    r.nr = 51;
    r.per_arc = 32;
    r.ntheta = 6 * r.per_arc;
    r.q.resize(1, r.nr * r.ntheta);
    r.p.resize(1, r.nr * r.ntheta);
    for (int a = 0; a < r.nr; ++a)
        for (int m = 0; m < r.ntheta; ++m) {
            const double x = r.radius(a) * std::cos(r.angle(m)), y = r.radius(a) * std::sin(r.angle(m));
            r.q(0, r.column(a, m)) = x + 0.5 * y * y + 0.2 * x * y;
            r.p(0, r.column(a, m)) = 0.3 + x * y + 0.5 * x;
        }
    // dp ^ dq = (y^2 + 0.5 y - 0.9 x) dx ^ dy integrates to pi / 4.
    auto s = vertex_stokes(r);
    CHECK(std::abs(s.contour - s.area) <= 1e-6);
    CHECK(std::abs(s.area - kPi / 4) <= 1e-6);
}

TEST_CASE("disk export")
{
    auto p = floer_circle();
    DiskGrid grid;
    grid.s_per_unit = 20;
    auto u = build_solution(p, solve(p).front(), 0.2, Vector(0), grid);
    auto dir = std::filesystem::temp_directory_path() / "morsedisk_disk_export";
    std::filesystem::remove_all(dir);
    export_disk(u, dir);
    std::ifstream mf(dir / "manifest.json");
    auto j = nlohmann::json::parse(mf);
    CHECK(j["schema_version"] == 1);
    CHECK(j["strips"].size() == 2);
    CHECK(j["strips"][0]["kind"] == "external");
    std::ifstream sf(dir / "strip_0.csv");
    std::string header;
    std::getline(sf, header);
    CHECK(header == "t,s,q0,p0");
    std::ifstream rf(dir / "residuals.csv");
    std::getline(rf, header);
    CHECK(header == "region,max_residual");
    CHECK(std::filesystem::exists(dir / "beta_1.csv"));
    std::filesystem::remove_all(dir);
}

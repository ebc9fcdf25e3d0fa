#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "morsedisk/moduli.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace morsedisk;

namespace {

ScalarFunction tfn(const std::string& src, int dim = 1)
{
    return ScalarFunction::parse(src, dim, std::vector<bool>(static_cast<std::size_t>(dim), true));
}

std::string shifted_cos(double amp, double shift)
{
    std::ostringstream os;
    os.precision(17);
    os << amp << "*cos(2*pi*x0 - " << 2 * 3.14159265358979323846 * shift << ")";
    return os.str();
}

PointSelector by_index(int k) { return {std::nullopt, k}; }

PointSelector near(std::initializer_list<double> x, std::optional<int> k = std::nullopt)
{
    Vector v(static_cast<int>(x.size()));
    int i = 0;
    for (double a : x)
        v[i++] = a;
    return {v, k};
}

const ModelManifold kCircle{1, ManifoldKind::FlatTorus};
const ModelManifold kTorus2{2, ManifoldKind::FlatTorus};

TreeProblem floer_circle()
{
    auto tree = enumerate_ribbon_trees(2, false, true).front();
    return make_problem(tree, kCircle, {{{0, 1}, tfn("cos(2*pi*x0)")}}, {by_index(0), by_index(0)});
}

TreeProblem tripod(double s01, double s02, double s12, std::vector<PointSelector> sel)
{
    return make_problem(RibbonTree::from_encoding("(1,2)"), kCircle,
                        {{{0, 1}, tfn(shifted_cos(1.0, s01))},
                         {{0, 2}, tfn(shifted_cos(0.8, s02))},
                         {{1, 2}, tfn(shifted_cos(1.2, s12))}},
                        sel);
}

} // namespace

TEST_CASE("oriented functions follow the boundary pairs")
{
    auto p = tripod(0.1, 0.2, 0.3, {by_index(1), by_index(0), by_index(0)});
    Vector x(1);
    x << 0.37;
    // inward functions of the three legs: -F02, F01, F12
    CHECK(p.edge_function(0).eval(x) == doctest::Approx(-p.pair_function(0, 2).eval(x)));
    CHECK(p.edge_function(1).eval(x) == doctest::Approx(p.pair_function(0, 1).eval(x)));
    CHECK(p.edge_function(2).eval(x) == doctest::Approx(p.pair_function(1, 2).eval(x)));
    CHECK(p.stable_dim(0) == 1);
    CHECK(p.stable_dim(1) == 0);

    TreeProblem bad = p;
    bad.functions.erase({1, 2});
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(make_problem(p.tree, kCircle, p.functions, {by_index(1)}), Error);
}

TEST_CASE("Floer flow lines of cos on the circle")
{
    auto p = floer_circle();
    CHECK(p.external_points[0].location[0] == doctest::Approx(0.0));
    CHECK(p.external_points[1].location[0] == doctest::Approx(0.5));
    auto sols = solve(p);
    REQUIRE(sols.size() == 2);
    CHECK(sols[0].vertex_positions[0][0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(sols[1].vertex_positions[0][0] == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(brute_force_count(p, 64) == 2);

    // Oracle: shoot from 10^4 points near the source and count the distinct
    // points where the trajectory crosses the slice F = 0.
    auto f = p.pair_function(0, 1);
    int left = 0, right = 0;
    for (int i = 0; i < 10000; ++i) {
        double x0 = 0.5 + (i < 5000 ? -1 : 1) * 1e-3 * (1 + i % 5000) / 5000.0;
        Vector x(1);
        x << x0;
        Vector y = flow(f, kCircle, x, 1.0, 5e-3);
        if (std::abs(y[0]) < 1e-3 || std::abs(y[0] - 1.0) < 1e-3)
            (x0 < 0.5 ? left : right)++;
    }
    CHECK(left == 5000);
    CHECK(right == 5000);

    for (const auto& g : sols) {
        CHECK(g.residual_norm <= 1e-10);
        auto rep = tangent_report(p, g);
        CHECK(rep.transversal);
        CHECK(rep.dim_moduli == 0);
        CHECK_FALSE(rep.marginal);
        Vector emb = half_edge_embedding(p, g);
        CHECK(emb.size() == 2);
        CHECK(emb[0] == emb[1]);
    }
}

TEST_CASE("tripod with (max, min, min) has one tree at the maximum")
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        auto p = tripod(u(rng), u(rng), u(rng), {by_index(1), by_index(0), by_index(0)});
        auto sols = solve(p);
        int oracle = brute_force_count(p, 64);
        CHECK(static_cast<int>(sols.size()) == oracle);
        REQUIRE(sols.size() == 1);
        CHECK(kCircle.distance(sols[0].vertex_positions[0], p.external_points[0].location) < 1e-9);
        auto rep = tangent_report(p, sols[0]);
        CHECK(rep.transversal);
        CHECK(rep.dim_moduli == 0);
        CHECK(rep.dim_ambient == 3);
        CHECK_FALSE(rep.marginal);
        CHECK(tree_residual(p, sols[0]).norm() <= 1e-10);
    }
}

TEST_CASE("property: solutions move with a rigid translation of the torus")
{
    const double shift = 0.137;
    auto a = tripod(0.11, 0.52, 0.83, {by_index(1), by_index(0), by_index(0)});
    auto b = tripod(0.11 + shift, 0.52 + shift, 0.83 + shift, {by_index(1), by_index(0), by_index(0)});
    auto sa = solve(a), sb = solve(b);
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) {
        Vector moved = kCircle.wrap(sa[i].vertex_positions[0] + Vector::Constant(1, shift));
        CHECK(kCircle.distance(moved, sb[i].vertex_positions[0]) < 1e-6);
    }
}

TEST_CASE("colliding critical points break transversality")
{
    // All inward functions equal cos(2 pi x), every external point at its maximum 0.
    auto p = make_problem(RibbonTree::from_encoding("(1,2)"), kCircle,
                          {{{0, 1}, tfn("cos(2*pi*x0)")},
                           {{0, 2}, tfn("-cos(2*pi*x0)")},
                           {{1, 2}, tfn("cos(2*pi*x0)")}},
                          {by_index(1), by_index(1), by_index(1)});
    auto sols = solve(p);
    REQUIRE(sols.size() == 1);
    auto rep = tangent_report(p, sols[0]);
    CHECK_FALSE(rep.transversal);
    CHECK(rep.dim_TV == 1);
    CHECK(rep.dim_TE == 0);
    // Oracle: the only tangent directions are the diagonal in R^3.
    CHECK(rep.complement_dim() == 2);
    CHECK(rep.dim_moduli == 0);
}

TEST_CASE("Floer flow lines on the two-torus")
{
    auto f = tfn("cos(2*pi*x0)+cos(2*pi*x1)", 2);
    auto tree = enumerate_ribbon_trees(2, false, true).front();
    // saddle (0.5, 0) to the maximum (0, 0) of F
    auto p = make_problem(tree, kTorus2, {{{0, 1}, f}}, {near({0.0, 0.0}, 0), near({0.5, 0.0}, 1)});
    auto sols = solve(p);
    REQUIRE(sols.size() == 2);
    for (const auto& g : sols) {
        CHECK(std::abs(g.vertex_positions[0][1]) < 1e-8);
        CHECK(std::abs(std::cos(2 * 3.14159265358979323846 * g.vertex_positions[0][0])) < 1e-8);
        auto rep = tangent_report(p, g);
        CHECK(rep.transversal);
        CHECK(rep.dim_moduli == 0);
    }
    CHECK(brute_force_count(p, 16) == 2);
}

TEST_CASE("four-leaf trees and the zero-length stratum")
{
    std::map<std::pair<int, int>, ScalarFunction> fns;
    const double shifts[4][4] = {{0, .11, .23, .37}, {0, 0, .41, .53}, {0, 0, 0, .67}, {0, 0, 0, 0}};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            fns.emplace(std::make_pair(i, j), tfn(shifted_cos(0.15 + 0.02 * (i + j), shifts[i][j])));
    std::vector<PointSelector> one_max{by_index(1), by_index(0), by_index(0), by_index(0)};

    // Root vertex pinned at p_0; the other vertex slides along a trajectory:
    // a one-parameter family.
    auto tri = make_problem(RibbonTree::from_encoding("((1,2),3)"), kCircle, fns, one_max);
    auto sols = solve(tri);
    CHECK_FALSE(sols.empty());
    for (const auto& g : sols) {
        CHECK(g.lengths[0] > 0.0);
        auto rep = tangent_report(tri, g);
        CHECK(rep.transversal);
        CHECK(rep.dim_moduli == 1);
    }

    auto corolla = make_problem(RibbonTree::from_encoding("(1,2,3)"), kCircle, fns, one_max);
    auto cs = solve(corolla);
    REQUIRE(cs.size() == 1);
    CHECK(tangent_report(corolla, cs[0]).dim_moduli == 0);

    // Length pinned to 0: both vertices coincide at p_0.
    SolveOptions pin;
    pin.metric_guess = {0.0};
    auto pinned = solve(tri, pin);
    REQUIRE(pinned.size() == 1);
    CHECK(pinned[0].lengths[0] == 0.0);
    CHECK(kCircle.distance(pinned[0].vertex_positions[0], pinned[0].vertex_positions[1]) < 1e-9);
    CHECK(kCircle.distance(pinned[0].vertex_positions[0], cs[0].vertex_positions[0]) < 1e-9);

    // Two maxima on different vertices cannot meet at length 0.
    auto two = make_problem(RibbonTree::from_encoding("((1,2),3)"), kCircle, fns,
                            {by_index(1), by_index(1), by_index(0), by_index(0)});
    CHECK(two.external_points[0].location[0] != doctest::Approx(two.external_points[1].location[0]));
    CHECK(solve(two, pin).empty());
}

TEST_CASE("edge trajectories and errors")
{
    auto p = floer_circle();
    auto sols = solve(p);
    REQUIRE_FALSE(sols.empty());
    const double tb = p.t_back(0);
    auto pts = edge_trajectory(p, sols[0], 0, {-tb, -0.5 * tb, 0.0});
    CHECK(pts.back()[0] == sols[0].vertex_positions[0][0]);
    CHECK(kCircle.distance(pts.front(), p.external_points[0].location) < 1e-3);
    CHECK_THROWS_AS(edge_trajectory(p, sols[0], 0, {0.5}), Error);

    auto tree = RibbonTree::from_encoding("((1,2),3)");
    CHECK_THROWS_AS(brute_force_count(tripod(0.1, 0.2, 0.3, {by_index(0), by_index(0), by_index(0)}), 8),
                    Error);  // not square
    std::map<std::pair<int, int>, ScalarFunction> fns;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            fns.emplace(std::make_pair(i, j), tfn("cos(2*pi*x0)"));
    auto q = make_problem(tree, kCircle, fns, {by_index(0), by_index(0), by_index(0), by_index(0)});
    CHECK_THROWS_AS(brute_force_count(q, 8), Error);  // internal edge
    CHECK_THROWS_AS(make_problem(tree, kCircle, fns, {near({0.2}, 3), by_index(0), by_index(0), by_index(0)}),
                    Error);
}

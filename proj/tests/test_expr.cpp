#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "morsedisk/expr.hpp"

#include <cmath>
#include <numbers>
#include <random>

using morsedisk::ParseError;
using morsedisk::ScalarFunction;
using morsedisk::Vector;

namespace {

// Functions shipped in configs/ and used throughout the tests.
struct Shipped
{
    const char* src;
    int dim;
    bool torus;
};

const Shipped kShipped[] = {
    {"x0^2/2", 1, false},
    {"x0^2/2 + x1^2", 2, false},
    {"x0*x1 + exp(x0/3) - x1^3/7", 2, false},
    {"cos(2*pi*x0)", 1, true},
    {"cos(2*pi*(x0 - 0.3)) + 0.2*sin(4*pi*x0)", 1, true},
    {"cos(2*pi*x0)+cos(2*pi*x1)", 2, true},
    {"-cos(2*pi*(x0 - 0.61))", 1, true},
    {"cos(2*pi*x0 + 2*pi*x1) + 0.5*sin(2*pi*x1)", 2, true},
};

ScalarFunction make(const Shipped& s)
{
    return ScalarFunction::parse(s.src, s.dim, std::vector<bool>(static_cast<std::size_t>(s.dim), s.torus));
}

} // namespace

TEST_CASE("parse accepts polynomial and torus functions")
{
    auto f = ScalarFunction::parse("x0^2/2", 1);
    CHECK(f.eval(Vector::Constant(1, 3.0)) == doctest::Approx(4.5));

    auto g = ScalarFunction::parse("cos(2*pi*x0)+cos(2*pi*x1)", 2, {true, true});
    CHECK(g.eval(Vector::Zero(2)) == doctest::Approx(2.0));
}

TEST_CASE("syntax errors report the offset")
{
    try {
        (void)ScalarFunction::parse("x0 + ", 1);
        FAIL("expected a syntax error");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::Syntax);
        CHECK(e.offset() == 5);
    }
    CHECK_THROWS_AS((void)ScalarFunction::parse("(x0", 1), ParseError);
    CHECK_THROWS_AS((void)ScalarFunction::parse("x0^1.5", 1), ParseError);
    CHECK_THROWS_AS((void)ScalarFunction::parse("x0 x0", 1), ParseError);
}

TEST_CASE("unknown identifiers are rejected")
{
    try {
        (void)ScalarFunction::parse("x0 + x1", 1);
        FAIL("expected an unknown-identifier error");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::UnknownIdentifier);
        CHECK(e.offset() == 5);
    }
    CHECK_THROWS_AS((void)ScalarFunction::parse("tan(x0)", 1), ParseError);
}

TEST_CASE("periodic variables must sit inside sin/cos with 2*pi*k coefficients")
{
    auto bad = [](const char* s) {
        try {
            (void)ScalarFunction::parse(s, 1, {true});
        } catch (const ParseError& e) {
            return e.kind() == ParseError::Kind::Periodicity;
        }
        return false;
    };
    CHECK(bad("x0"));
    CHECK(bad("cos(x0)"));
    CHECK(bad("cos(2*pi*x0^2)"));
    CHECK(bad("cos(2*pi*x0) + x0"));
    CHECK(bad("sin(3*x0)"));
    CHECK_NOTHROW((void)ScalarFunction::parse("cos(-4*pi*(x0 - 0.25)) * exp(sin(2*pi*x0))", 1, {true}));
    CHECK_NOTHROW((void)ScalarFunction::parse("x1*cos(2*pi*x0 + x1)", 2, {true, false}));
}

TEST_CASE("gradient and Hessian of small examples")
{
    auto f = ScalarFunction::parse("x0^2/2 + x1^2", 2);
    Vector x(2);
    x << 1.0, 1.0;
    Vector g = f.grad(x);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(2.0));

    auto c = ScalarFunction::parse("cos(2*pi*x0)", 1, {true});
    auto h = c.hessian(Vector::Zero(1));
    CHECK(h(0, 0) == doctest::Approx(-4.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-14));

    auto b = ScalarFunction::parse("x0*x1", 2);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 10; ++i) {
        Vector p(2);
        p << u(rng), u(rng);
        auto hb = b.hessian(p);
        CHECK(hb(0, 1) == 1.0);
        CHECK(hb(1, 0) == 1.0);
        CHECK(hb(0, 0) == 0.0);
    }
}

TEST_CASE("negated functions flip value and derivatives")
{
    auto f = ScalarFunction::parse("x0^3 - x0", 1);
    auto n = f.negated();
    Vector x = Vector::Constant(1, 0.7);
    CHECK(n.eval(x) == -f.eval(x));
    CHECK(n.grad(x)[0] == -f.grad(x)[0]);
    CHECK(n.hessian(x)(0, 0) == -f.hessian(x)(0, 0));
    CHECK(n.negated().eval(x) == f.eval(x));
}

TEST_CASE("division by zero is a domain error")
{
    auto f = ScalarFunction::parse("1/x0", 1);
    CHECK_THROWS_AS((void)f.eval(Vector::Zero(1)), morsedisk::Error);
    auto g = ScalarFunction::parse("x0^-2", 1);
    CHECK(g.eval(Vector::Constant(1, 2.0)) == doctest::Approx(0.25));
    CHECK_THROWS_AS((void)g.grad(Vector::Zero(1)), morsedisk::Error);
}

TEST_CASE("property: gradient agrees with central differences")
{
    std::mt19937_64 rng(20261018);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const double step = 1e-5;
    for (const auto& s : kShipped) {
        auto f = make(s);
        for (int trial = 0; trial < 100; ++trial) {
            Vector x(s.dim);
            for (int i = 0; i < s.dim; ++i)
                x[i] = u(rng);
            Vector g = f.grad(x);
            for (int i = 0; i < s.dim; ++i) {
                Vector xp = x, xm = x;
                xp[i] += step;
                xm[i] -= step;
                double fd = (f.eval(xp) - f.eval(xm)) / (2.0 * step);
                CHECK(std::abs(g[i] - fd) <= 1e-6 * (1.0 + g.norm()));
            }
        }
    }
}

TEST_CASE("property: Hessian is symmetric and consistent with the gradient")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& s : kShipped) {
        auto f = make(s);
        for (int trial = 0; trial < 50; ++trial) {
            Vector x(s.dim);
            for (int i = 0; i < s.dim; ++i)
                x[i] = u(rng);
            Vector g;
            morsedisk::Matrix h;
            f.grad_hessian(x, g, h);
            CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
            CHECK((g - f.grad(x)).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + g.norm()));
            for (int i = 0; i < s.dim; ++i) {
                Vector xp = x, xm = x;
                xp[i] += 1e-5;
                xm[i] -= 1e-5;
                Vector fd = (f.grad(xp) - f.grad(xm)) / 2e-5;
                CHECK((fd - h.col(i)).norm() <= 1e-5 * (1.0 + h.norm()));
            }
        }
    }
}

TEST_CASE("property: periodic functions are 1-periodic in declared variables")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& s : kShipped) {
        if (!s.torus)
            continue;
        auto f = make(s);
        for (int trial = 0; trial < 100; ++trial) {
            Vector x(s.dim);
            for (int i = 0; i < s.dim; ++i)
                x[i] = u(rng);
            for (int i = 0; i < s.dim; ++i) {
                Vector y = x;
                y[i] += 1.0;
                CHECK(std::abs(f.eval(x) - f.eval(y)) <= 1e-12);
            }
        }
    }
}

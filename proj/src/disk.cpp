#include "morsedisk/disk.hpp"

#include "parallel.hpp"
#include "quadrature.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

namespace morsedisk {

namespace {

constexpr double kPi = std::numbers::pi;

using detail::gauss_legendre;

int panels_for(double width) { return std::max(1, static_cast<int>(std::ceil(std::abs(width) * 64.0))); }

double trapezoid(const std::vector<double>& y, double h)
{
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += (i == 0 || i + 1 == y.size()) ? 0.5 * y[i] : y[i];
    return s * h;
}

/// Second-order derivative of samples y_0..y_{N-1} at index i.
template <class Get>
auto difference(Get&& y, int i, int count, double h)
{
    if (i == 0)
        return ((-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * h)).eval();
    if (i == count - 1)
        return ((3.0 * y(count - 1) - 4.0 * y(count - 2) + y(count - 3)) / (2.0 * h)).eval();
    return ((y(i + 1) - y(i - 1)) / (2.0 * h)).eval();
}

/// Fourth-order derivative at index i: centered in the interior, one-sided
/// five-point stencils near the ends.
template <class Get>
auto difference4(Get&& y, int i, int count, double h)
{
    if (i == 0)
        return ((-25.0 * y(0) + 48.0 * y(1) - 36.0 * y(2) + 16.0 * y(3) - 3.0 * y(4)) / (12.0 * h)).eval();
    if (i == 1)
        return ((-3.0 * y(0) - 10.0 * y(1) + 18.0 * y(2) - 6.0 * y(3) + y(4)) / (12.0 * h)).eval();
    if (i == count - 1)
        return (-(-25.0 * y(i) + 48.0 * y(i - 1) - 36.0 * y(i - 2) + 16.0 * y(i - 3) - 3.0 * y(i - 4)) / (12.0 * h))
            .eval();
    if (i == count - 2)
        return (-(-3.0 * y(i + 1) - 10.0 * y(i) + 18.0 * y(i - 1) - 6.0 * y(i - 2) + y(i - 3)) / (12.0 * h)).eval();
    return ((-y(i + 2) + 8.0 * y(i + 1) - 8.0 * y(i - 1) + y(i - 2)) / (12.0 * h)).eval();
}

/// Composite Simpson for an even number of intervals, else trapezoid.
double simpson(const std::vector<double>& y, double h)
{
    const std::size_t n = y.size();
    if (n < 3 || n % 2 == 0)
        return trapezoid(y, h);
    double s = y.front() + y.back();
    for (std::size_t i = 1; i + 1 < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * y[i];
    return s * h / 3.0;
}

} // namespace

double smooth_step(double t)
{
    if (t <= 0.0)
        return 0.0;
    if (t >= 1.0)
        return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double smooth_step_derivative(double t)
{
    if (t <= 0.0 || t >= 1.0)
        return 0.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    const double d = a + b;
    return a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / (d * d);
}

double cutoff_rho(double l, double s) { return smooth_step(l) * smooth_step(s) * smooth_step(l - s); }

double cutoff_rho_external(double s) { return smooth_step(-s); }

double cutoff_rho_dl(double l, double s)
{
    return smooth_step_derivative(l) * smooth_step(s) * smooth_step(l - s)
           + smooth_step(l) * smooth_step(s) * smooth_step_derivative(l - s);
}

double cutoff_integral(double l, double a, double b, double eps)
{
    if (b == a)
        return 0.0;
    if (l < 0.0)
        return eps * gauss_legendre(cutoff_rho_external, a, b, panels_for(b - a));
    return eps * gauss_legendre([l](double s) { return cutoff_rho(l, s); }, a, b, panels_for(b - a));
}

double strip_integral(double l)
{
    if (l <= 0.0)
        return 0.0;
    if (l >= 2.0)
        return l - 1.0;
    return cutoff_integral(l, 0.0, l, 1.0);
}

double strip_length_from_edge(double R, double eps)
{
    if (!(R > 0.0) || !std::isfinite(R))
        throw Error("disk", "edge length must be positive");
    if (!(eps > 0.0))
        throw Error("disk", "epsilon must be positive");
    double lo = 0.0, hi = R / eps + 2.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi)
            break;
        (eps * strip_integral(mid) < R ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double VertexRegion::angle(int m) const { return 2.0 * kPi * m / ntheta; }

double VertexRegion::arc_parameter(int slot, double theta) const
{
    const double width = 2.0 * kPi / (2.0 * static_cast<double>(half_edges.size()));
    const double u = (theta - 2.0 * slot * width) / width;
    return arc_reversed[static_cast<std::size_t>(slot)] ? 1.0 - u : u;
}

namespace {

void fill_grid(Strip& st, int n, int t_nodes, const std::vector<Vector>& points)
{
    st.t.resize(static_cast<std::size_t>(t_nodes));
    for (int i = 0; i < t_nodes; ++i)
        st.t[static_cast<std::size_t>(i)] = static_cast<double>(i) / (t_nodes - 1);
    st.q.resize(n, st.nt() * st.ns());
    st.p = Matrix::Zero(n, st.nt() * st.ns());
    for (int j = 0; j < st.ns(); ++j)
        for (int i = 0; i < st.nt(); ++i)
            st.q.col(st.column(i, j)) = points[static_cast<std::size_t>(j)];
}

Strip internal_strip(const TreeProblem& problem, const GradientTree& g, int edge, double eps, const DiskGrid& grid)
{
    const auto& t = problem.tree;
    const Edge& e = t.edge(edge);
    Strip st;
    st.edge = edge;
    st.function = problem.edge_function(edge);
    st.start_half_edge = e.half_edge;
    st.end_half_edge = e.partner;
    const double R = g.lengths.at(static_cast<std::size_t>(edge - t.leaves()));
    const Vector& va = g.vertex_positions[static_cast<std::size_t>(t.half_edge(e.half_edge).source)];
    st.morse_length = R;
    if (R == 0.0) {
        st.kind = Strip::Kind::Neck;
        st.s1 = 1.0;
        const int ns = std::max(grid.s_per_unit, 16) + 1;
        for (int j = 0; j < ns; ++j) {
            st.s.push_back(static_cast<double>(j) / (ns - 1));
            st.l.push_back(0.0);
            st.rho.push_back(0.0);
        }
        fill_grid(st, problem.manifold.dim, grid.t_nodes, std::vector<Vector>(static_cast<std::size_t>(ns), va));
        return st;
    }
    const double le = strip_length_from_edge(R, eps);
    st.length = le;
    st.s1 = le;
    const int ns = std::max(static_cast<int>(std::ceil(le * grid.s_per_unit)), 16) + 1;
    double acc = 0.0;
    for (int j = 0; j < ns; ++j) {
        const double s = j == ns - 1 ? le : le * j / (ns - 1);
        if (j > 0)
            acc += cutoff_integral(le, st.s.back(), s, eps);
        st.s.push_back(s);
        st.l.push_back(acc);
        st.rho.push_back(cutoff_rho(le, s));
    }
    st.length_gap = std::abs(st.l.back() - R);
    fill_grid(st, problem.manifold.dim, grid.t_nodes, edge_trajectory(problem, g, edge, st.l));
    return st;
}

Strip external_strip(const TreeProblem& problem, const GradientTree& g, int edge, double eps, const DiskGrid& grid)
{
    const auto& t = problem.tree;
    const Edge& e = t.edge(edge);
    const auto& m = problem.manifold;
    const CriticalPoint& pe = problem.external_points.at(static_cast<std::size_t>(e.label));
    Strip st;
    st.edge = edge;
    st.kind = Strip::Kind::External;
    st.function = problem.edge_function(edge);
    st.end_half_edge = e.half_edge;
    const Vector& v = g.vertex_positions[static_cast<std::size_t>(t.half_edge(e.half_edge).source)];

    // Backward time at which the trajectory is within 1e-8 of p_e.
    const double cap = 3.0 * problem.t_back(e.label);
    std::vector<double> times;
    for (double s = 0.0; s <= cap; s += 0.01)
        times.push_back(s);
    auto back = sample_trajectory(st.function.negated(), v, times);
    double tau = 0.0, best = INFINITY;
    for (std::size_t i = 0; i < back.size(); ++i) {
        const double d = m.difference(back[i], pe.location).norm();
        if (d < best) {
            best = d;
            tau = times[i];
        }
        if (d <= 1e-8)
            break;
    }
    const double smax = std::max(tau / eps + 0.5, 2.0);
    st.length = smax;
    st.s0 = -smax;
    const int ns = static_cast<int>(std::ceil(smax * grid.s_per_unit)) + 1;
    st.s.resize(static_cast<std::size_t>(ns));
    st.l.resize(static_cast<std::size_t>(ns));
    st.rho.resize(static_cast<std::size_t>(ns));
    double acc = 0.0;
    for (int j = ns - 1; j >= 0; --j) {
        const auto J = static_cast<std::size_t>(j);
        st.s[J] = j == 0 ? -smax : -smax + smax * j / (ns - 1);
        if (j < ns - 1)
            acc += cutoff_integral(-1.0, st.s[J], st.s[J + 1], eps);
        st.l[J] = -acc;
        st.rho[J] = cutoff_rho_external(st.s[J]);
    }
    st.s.back() = 0.0;
    st.morse_length = -st.l.front();
    auto pts = edge_trajectory(problem, g, edge, st.l);
    st.end_gap = m.difference(pts.front(), pe.location).norm();
    fill_grid(st, m.dim, grid.t_nodes, pts);
    return st;
}

} // namespace

DiskMap build_solution(const TreeProblem& problem, const GradientTree& g, double eps, const Vector& vertex_moduli,
                       const DiskGrid& grid)
{
    if (!(eps > 0.0) || eps > kEpsilonMax)
        throw Error("disk", "epsilon must lie in (0, " + std::to_string(kEpsilonMax) + "]");
    if (grid.t_nodes < 3 || grid.radial_nodes < 3 || grid.angular_per_arc < 2 || grid.s_per_unit < 2)
        throw Error("disk", "grid too coarse");
    const auto& t = problem.tree;
    int moduli = 0;
    for (int v = 0; v < t.vertex_count(); ++v)
        moduli += std::max(t.valence(v) - 3, 0);
    if (vertex_moduli.size() != moduli)
        throw Error("disk", "vertex moduli vector has size " + std::to_string(vertex_moduli.size()) + ", expected "
                                + std::to_string(moduli));
    problem.validate();

    DiskMap u;
    u.n = problem.manifold.dim;
    u.epsilon = eps;
    u.vertex_moduli = vertex_moduli;
    u.strips.resize(t.edges().size());
    detail::parallel_for(t.edges().size(), [&](std::size_t e) {
        const int id = static_cast<int>(e);
        u.strips[e] = t.edge(id).external() ? external_strip(problem, g, id, eps, grid)
                                            : internal_strip(problem, g, id, eps, grid);
    });

    std::map<int, bool> reversed;  // half-edge -> glued at the strip's s1 end
    for (const auto& st : u.strips) {
        if (st.start_half_edge >= 0)
            reversed[st.start_half_edge] = false;
        reversed[st.end_half_edge] = true;
    }
    for (int v = 0; v < t.vertex_count(); ++v) {
        VertexRegion r;
        r.vertex = v;
        r.position = g.vertex_positions[static_cast<std::size_t>(v)];
        r.half_edges = t.cyclic_order(v);
        for (int h : r.half_edges)
            r.arc_reversed.push_back(reversed.at(h));
        r.nr = grid.radial_nodes;
        r.per_arc = grid.angular_per_arc;
        r.ntheta = 2 * static_cast<int>(r.half_edges.size()) * r.per_arc;
        r.q = r.position.replicate(1, r.nr * r.ntheta);
        r.p = Matrix::Zero(u.n, r.nr * r.ntheta);
        u.vertices.push_back(std::move(r));
    }
    return u;
}

StripResidual strip_residual(const DiskMap& u, int strip)
{
    const Strip& st = u.strips.at(static_cast<std::size_t>(strip));
    const int n = u.n, nt = st.nt(), ns = st.ns();
    StripResidual out;
    if (nt < 3 || ns < 3)
        return out;
    const double dt = 1.0 / (nt - 1), ds = (st.s1 - st.s0) / (ns - 1);
    out.values.resize(2 * n, (nt - 2) * (ns - 2));
    int c = 0;
    for (int j = 1; j + 1 < ns; ++j)
        for (int i = 1; i + 1 < nt; ++i, ++c) {
            const Vector q = st.q.col(st.column(i, j));
            Vector qs = (st.q.col(st.column(i, j + 1)) - st.q.col(st.column(i, j - 1))) / (2 * ds);
            Vector qt = (st.q.col(st.column(i + 1, j)) - st.q.col(st.column(i - 1, j))) / (2 * dt);
            Vector ps = (st.p.col(st.column(i, j + 1)) - st.p.col(st.column(i, j - 1))) / (2 * ds);
            Vector pt = (st.p.col(st.column(i + 1, j)) - st.p.col(st.column(i - 1, j))) / (2 * dt);
            const double rho = st.rho[static_cast<std::size_t>(j)];
            Vector force = rho == 0.0 ? Vector::Zero(n) : Vector(u.epsilon * rho * st.function.grad(q));
            out.values.col(c).head(n) = qs + pt - force;
            out.values.col(c).tail(n) = qt - ps;
            out.max_norm = std::max(out.max_norm, out.values.col(c).norm());
        }
    return out;
}

double vertex_residual(const DiskMap& u, int vertex)
{
    const VertexRegion& r = u.vertices.at(static_cast<std::size_t>(vertex));
    const double dr = 1.0 / (r.nr - 1), dth = 2.0 * kPi / r.ntheta;
    double worst = 0.0;
    for (int k = 1; k + 1 < r.nr; ++k)
        for (int m = 0; m < r.ntheta; ++m) {
            const int mp = (m + 1) % r.ntheta, mm = (m + r.ntheta - 1) % r.ntheta;
            Vector qr = (r.q.col(r.column(k + 1, m)) - r.q.col(r.column(k - 1, m))) / (2 * dr);
            Vector pr = (r.p.col(r.column(k + 1, m)) - r.p.col(r.column(k - 1, m))) / (2 * dr);
            Vector qth = (r.q.col(r.column(k, mp)) - r.q.col(r.column(k, mm))) / (2 * dth);
            Vector pth = (r.p.col(r.column(k, mp)) - r.p.col(r.column(k, mm))) / (2 * dth);
            const double inv = 1.0 / r.radius(k);
            worst = std::max(worst, std::hypot((qr + inv * pth).norm(), (pr - inv * qth).norm()));
        }
    return worst;
}

BetaSeries beta(const Strip& st)
{
    const int nt = st.nt(), ns = st.ns();
    BetaSeries b;
    b.s = st.s;
    const double dt = 1.0 / (nt - 1);
    std::vector<double> sq(static_cast<std::size_t>(nt)), fx(static_cast<std::size_t>(nt));
    for (int j = 0; j < ns; ++j) {
        for (int i = 0; i < nt; ++i) {
            const Vector p = st.p.col(st.column(i, j));
            Vector qt = difference([&](int k) { return st.q.col(st.column(k, j)); }, i, nt, dt);
            sq[static_cast<std::size_t>(i)] = p.squaredNorm();
            fx[static_cast<std::size_t>(i)] = p.dot(qt);
        }
        b.beta.push_back(0.5 * trapezoid(sq, dt));
        b.flux.push_back(trapezoid(fx, dt));
    }
    if (ns < 3)
        throw Error("disk", "beta needs at least three s nodes");
    const double ds = (st.s1 - st.s0) / (ns - 1);
    using V1 = Eigen::Matrix<double, 1, 1>;
    auto at = [&](int j) { return V1(b.beta[static_cast<std::size_t>(j)]); };
    for (int j = 0; j < ns; ++j)
        b.beta_dot.push_back(difference(at, j, ns, ds)(0));
    for (int j = 0; j < ns; ++j) {
        const int c = std::clamp(j, 1, ns - 2);
        const auto C = static_cast<std::size_t>(c);
        b.beta_ddot.push_back((b.beta[C + 1] - 2.0 * b.beta[C] + b.beta[C - 1]) / (ds * ds));
    }
    return b;
}

namespace {

double strip_contour(const Strip& st)
{
    const int nt = st.nt(), ns = st.ns();
    const double ds = (st.s1 - st.s0) / (ns - 1), dt = 1.0 / (nt - 1);
    auto end_flux = [&](int j) {
        std::vector<double> f(static_cast<std::size_t>(nt));
        for (int i = 0; i < nt; ++i)
            f[static_cast<std::size_t>(i)] = st.p.col(st.column(i, j)).dot(
                difference([&](int k) { return st.q.col(st.column(k, j)); }, i, nt, dt));
        return trapezoid(f, dt);
    };
    auto side = [&](int i) {
        std::vector<double> f(static_cast<std::size_t>(ns));
        for (int j = 0; j < ns; ++j)
            f[static_cast<std::size_t>(j)] = st.p.col(st.column(i, j)).dot(
                difference([&](int k) { return st.q.col(st.column(i, k)); }, j, ns, ds));
        return trapezoid(f, ds);
    };
    // Counter-clockwise in (s, t): bottom, right end, top reversed, left end reversed.
    return side(0) + end_flux(ns - 1) - side(nt - 1) - end_flux(0);
}

/// Periodic fourth-order theta derivative of a vertex field on ring k.
Vector theta_derivative(const VertexRegion& r, const Matrix& field, int k, int m)
{
    const double dth = 2.0 * kPi / r.ntheta;
    auto at = [&](int d) { return field.col(r.column(k, (m + d + 2 * r.ntheta) % r.ntheta)); };
    return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dth);
}

double vertex_contour(const VertexRegion& r)
{
    const int k = r.nr - 1;
    double s = 0.0;
    for (int m = 0; m < r.ntheta; ++m)
        s += r.p.col(r.column(k, m)).dot(theta_derivative(r, r.q, k, m));
    return s * 2.0 * kPi / r.ntheta;
}

} // namespace

EnergyReport energy_identity_check(const DiskMap& u)
{
    EnergyReport rep;
    for (const auto& st : u.strips) {
        rep.strip_terms.push_back(strip_contour(st));
        rep.total += rep.strip_terms.back();
    }
    for (const auto& r : u.vertices) {
        rep.vertex_terms.push_back(vertex_contour(r));
        rep.total += rep.vertex_terms.back();
    }
    rep.defect = std::abs(rep.total);
    return rep;
}

void perturb_lagrangian(DiskMap& u, std::uint64_t seed, double amplitude)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto random_vector = [&] {
        Vector v(u.n);
        for (int i = 0; i < u.n; ++i)
            v[i] = amplitude * unit(rng);
        return v;
    };
    struct Profile
    {
        Vector a, b, c, d;
        Vector p(double t) const { return std::pow(std::sin(kPi * t), 4) * (a + b * std::cos(kPi * t)); }
        Vector q(double t) const { return std::pow(std::sin(kPi * t), 4) * (c + d * std::sin(kPi * t)); }
    };
    std::map<int, Profile> profiles;
    for (const auto& r : u.vertices)
        for (int h : r.half_edges)
            profiles[h] = {random_vector(), random_vector(), random_vector(), random_vector()};

    for (auto& st : u.strips) {
        const Vector e1 = random_vector(), e2 = random_vector();
        const double span = st.s1 - st.s0, w = std::min(1.0, 0.5 * span);
        for (int j = 0; j < st.ns(); ++j) {
            const double s = st.s[static_cast<std::size_t>(j)];
            const double bump = std::pow(std::sin(kPi * (s - st.s0) / span), 4);
            const double ws = st.start_half_edge >= 0 ? 1.0 - smooth_step((s - st.s0) / w) : 0.0;
            const double we = st.end_half_edge >= 0 ? 1.0 - smooth_step((st.s1 - s) / w) : 0.0;
            for (int i = 0; i < st.nt(); ++i) {
                const double t = st.t[static_cast<std::size_t>(i)];
                const int c = st.column(i, j);
                st.p.col(c) += std::sin(kPi * t) * bump * e1;
                st.q.col(c) += std::cos(kPi * t) * bump * e2;
                if (ws != 0.0) {
                    st.p.col(c) += ws * profiles.at(st.start_half_edge).p(t);
                    st.q.col(c) += ws * profiles.at(st.start_half_edge).q(t);
                }
                if (we != 0.0) {
                    st.p.col(c) += we * profiles.at(st.end_half_edge).p(t);
                    st.q.col(c) += we * profiles.at(st.end_half_edge).q(t);
                }
            }
        }
    }
    for (auto& r : u.vertices)
        for (int m = 0; m < r.ntheta; ++m) {
            const int arc = m / r.per_arc;
            if (arc % 2 != 0)
                continue;
            const int slot = arc / 2;
            const Profile& pr = profiles.at(r.half_edges[static_cast<std::size_t>(slot)]);
            const double t = r.arc_parameter(slot, r.angle(m));
            for (int k = 0; k < r.nr; ++k) {
                const double r2 = r.radius(k) * r.radius(k);
                r.p.col(r.column(k, m)) += r2 * pr.p(t);
                r.q.col(r.column(k, m)) += r2 * pr.q(t);
            }
        }
}

StokesCheck vertex_stokes(const VertexRegion& r)
{
    StokesCheck out;
    out.contour = vertex_contour(r);
    if (r.nr < 5)
        throw Error("disk", "area quadrature needs at least five radial nodes");
    const double dr = 1.0 / (r.nr - 1), dth = 2.0 * kPi / r.ntheta;
    std::vector<double> radial(static_cast<std::size_t>(r.nr));
    for (int k = 0; k < r.nr; ++k) {
        double ring = 0.0;
        for (int m = 0; m < r.ntheta; ++m) {
            Vector qr = difference4([&](int i) { return r.q.col(r.column(i, m)); }, k, r.nr, dr);
            Vector pr = difference4([&](int i) { return r.p.col(r.column(i, m)); }, k, r.nr, dr);
            ring += pr.dot(theta_derivative(r, r.q, k, m)) - theta_derivative(r, r.p, k, m).dot(qr);
        }
        radial[static_cast<std::size_t>(k)] = ring * dth;
    }
    out.area = simpson(radial, dr);
    return out;
}

void write_strip_csv(std::ostream& os, const Strip& st)
{
    const int n = static_cast<int>(st.q.rows());
    os << "t,s";
    for (int i = 0; i < n; ++i)
        os << ",q" << i;
    for (int i = 0; i < n; ++i)
        os << ",p" << i;
    os << '\n';
    char buf[40];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    for (int j = 0; j < st.ns(); ++j)
        for (int i = 0; i < st.nt(); ++i) {
            put(st.t[static_cast<std::size_t>(i)]);
            os << ',';
            put(st.s[static_cast<std::size_t>(j)]);
            for (int c = 0; c < n; ++c) {
                os << ',';
                put(st.q(c, st.column(i, j)));
            }
            for (int c = 0; c < n; ++c) {
                os << ',';
                put(st.p(c, st.column(i, j)));
            }
            os << '\n';
        }
}

void write_beta_csv(std::ostream& os, const BetaSeries& b)
{
    os << "s,beta,beta_dot,beta_ddot,flux\n";
    char buf[160];
    for (std::size_t j = 0; j < b.s.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", b.s[j], b.beta[j], b.beta_dot[j],
                      b.beta_ddot[j], b.flux[j]);
        os << buf;
    }
}

void export_disk(const DiskMap& u, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name);
        if (!f)
            throw Error("disk", "cannot write " + (dir / name).string());
        return f;
    };
    static const char* kinds[] = {"internal", "external", "neck"};
    nlohmann::ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["epsilon"] = u.epsilon;
    manifest["dim"] = u.n;
    manifest["vertex_moduli"] = std::vector<double>(u.vertex_moduli.data(), u.vertex_moduli.data() + u.vertex_moduli.size());
    auto residuals = open("residuals.csv");
    residuals << "region,max_residual\n";
    char buf[64];
    for (std::size_t e = 0; e < u.strips.size(); ++e) {
        const Strip& st = u.strips[e];
        const std::string strip_file = "strip_" + std::to_string(e) + ".csv";
        const std::string beta_file = "beta_" + std::to_string(e) + ".csv";
        {
            auto f = open(strip_file);
            write_strip_csv(f, st);
        }
        {
            auto f = open(beta_file);
            write_beta_csv(f, beta(st));
        }
        std::snprintf(buf, sizeof buf, "%.17g", strip_residual(u, static_cast<int>(e)).max_norm);
        residuals << "strip_" << e << ',' << buf << '\n';
        nlohmann::ordered_json j;
        j["edge"] = st.edge;
        j["kind"] = kinds[static_cast<int>(st.kind)];
        j["s0"] = st.s0;
        j["s1"] = st.s1;
        j["length"] = st.length;
        j["morse_length"] = st.morse_length;
        j["length_gap"] = st.length_gap;
        j["end_gap"] = st.end_gap;
        j["start_half_edge"] = st.start_half_edge;
        j["end_half_edge"] = st.end_half_edge;
        j["t_nodes"] = st.nt();
        j["s_nodes"] = st.ns();
        j["file"] = strip_file;
        j["beta_file"] = beta_file;
        manifest["strips"].push_back(j);
    }
    for (const auto& r : u.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g", vertex_residual(u, r.vertex));
        residuals << "vertex_" << r.vertex << ',' << buf << '\n';
        nlohmann::ordered_json j;
        j["vertex"] = r.vertex;
        j["position"] = std::vector<double>(r.position.data(), r.position.data() + r.position.size());
        j["half_edges"] = r.half_edges;
        j["radial_nodes"] = r.nr;
        j["angular_nodes"] = r.ntheta;
        manifest["vertices"].push_back(j);
    }
    auto f = open("manifest.json");
    f << manifest.dump(2) << '\n';
}

} // namespace morsedisk

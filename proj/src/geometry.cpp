#include "morsedisk/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace morsedisk {

namespace {

constexpr double kGradTol = 1e-10;
constexpr double kDegenerateTol = 1e-8;
constexpr double kDedupDistance = 1e-6;

std::string format_point(const Vector& x)
{
    std::ostringstream os;
    os << std::setprecision(10) << "(";
    for (int i = 0; i < x.size(); ++i)
        os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

void check_finite(const Vector& x, const char* what)
{
    if (!x.allFinite())
        throw DivergenceError(std::string(what) + ": non-finite state " + format_point(x));
}

} // namespace

Vector ModelManifold::wrap(const Vector& x) const
{
    if (!torus())
        return x;
    Vector y = x;
    for (int i = 0; i < y.size(); ++i) {
        y[i] -= std::floor(y[i]);
        if (y[i] >= 1.0)
            y[i] = 0.0;
    }
    return y;
}

Vector ModelManifold::difference(const Vector& a, const Vector& b) const
{
    Vector d = a - b;
    if (torus())
        for (int i = 0; i < d.size(); ++i)
            d[i] -= std::ceil(d[i] - 0.5);
    return d;
}

std::vector<bool> ModelManifold::periodic_flags() const
{
    return std::vector<bool>(static_cast<std::size_t>(dim), torus());
}

double backward_time(const CriticalPoint& p)
{
    return std::min(10.0 / p.slowest_rate(), 40.0);
}

CriticalPoint classify_critical_point(const ScalarFunction& f, const ModelManifold& m, const Vector& x0)
{
    const double max_step = m.torus() ? 0.25 : 1.0;
    Vector x = x0;
    Vector g;
    Matrix h;
    // Iterate until the Newton step itself is negligible, not merely until
    // |grad| is small: near a degenerate point the gradient vanishes faster
    // than the Hessian, and stopping early would hide the degeneracy.
    for (int it = 0; it < 200; ++it) {
        f.grad_hessian(x, g, h);
        check_finite(g, "critical point search");
        if (g.norm() == 0.0)
            break;
        Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
        svd.setThreshold(1e-14);
        Vector step = -svd.solve(g);
        if (step.norm() > max_step)
            step *= max_step / step.norm();
        if (step.norm() < 1e-15)
            break;
        x = m.wrap(x + step);
    }
    f.grad_hessian(x, g, h);
    if (!(g.norm() <= kGradTol))
        throw Error("geometry", "Newton did not converge to a critical point from " + format_point(x0));

    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    CriticalPoint cp;
    cp.location = m.wrap(x);
    cp.eigenvalues = eig.eigenvalues();
    cp.eigenvectors = eig.eigenvectors();
    for (int i = 0; i < cp.eigenvalues.size(); ++i) {
        if (std::abs(cp.eigenvalues[i]) < kDegenerateTol)
            throw NonMorseError("degenerate critical point at " + format_point(cp.location)
                                    + " (Hessian eigenvalue " + std::to_string(cp.eigenvalues[i]) + ")",
                                cp.location);
        if (cp.eigenvalues[i] < 0.0)
            ++cp.morse_index;
    }
    return cp;
}

std::vector<CriticalPoint> find_critical_points(const ScalarFunction& f, const ModelManifold& m,
                                                int resolution, double half_width)
{
    if (resolution < 1)
        throw Error("geometry", "seed resolution must be positive");
    if (f.dim() != m.dim)
        throw Error("geometry", "function dimension does not match the manifold");
    const int n = m.dim;
    long total = 1;
    for (int i = 0; i < n; ++i)
        total *= resolution;

    std::vector<CriticalPoint> found;
    for (long s = 0; s < total; ++s) {
        long r = s;
        Vector seed(n);
        for (int i = 0; i < n; ++i) {
            int k = static_cast<int>(r % resolution);
            r /= resolution;
            seed[i] = m.torus() ? static_cast<double>(k) / resolution
                                : -half_width + 2.0 * half_width * (k + 0.5) / resolution;
        }
        CriticalPoint cp;
        try {
            cp = classify_critical_point(f, m, seed);
        } catch (const NonMorseError&) {
            throw;
        } catch (const Error&) {
            continue;
        }
        if (!m.torus() && cp.location.cwiseAbs().maxCoeff() > 1.5 * half_width)
            continue;
        bool dup = std::any_of(found.begin(), found.end(), [&](const CriticalPoint& q) {
            return m.distance(q.location, cp.location) < kDedupDistance;
        });
        if (!dup)
            found.push_back(cp);
    }
    std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        return std::lexicographical_compare(a.location.data(), a.location.data() + a.location.size(),
                                            b.location.data(), b.location.data() + b.location.size());
    });
    return found;
}

namespace {

void check_flow_args(const ScalarFunction& f, const ModelManifold& m, const Vector& x0, double t, double h)
{
    if (f.dim() != m.dim || x0.size() != m.dim)
        throw Error("geometry", "dimension mismatch in flow");
    if (!std::isfinite(t) || t < 0.0)
        throw Error("geometry", "flow time must be finite and nonnegative");
    if (!(h > 0.0))
        throw Error("geometry", "flow step must be positive");
}

Vector rk4_step(const ScalarFunction& f, const Vector& x, double h)
{
    Vector k1 = f.grad(x);
    Vector k2 = f.grad(x + 0.5 * h * k1);
    Vector k3 = f.grad(x + 0.5 * h * k2);
    Vector k4 = f.grad(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

Vector flow(const ScalarFunction& f, const ModelManifold& m, const Vector& x0, double t, double h)
{
    check_flow_args(f, m, x0, t, h);
    Vector x = x0;
    if (t == 0.0)
        return x;
    const long steps = static_cast<long>(std::ceil(t / h - 1e-9));
    double done = 0.0;
    for (long i = 0; i < steps; ++i) {
        double dt = std::min(h, t - done);
        x = m.wrap(rk4_step(f, x, dt));
        check_finite(x, "flow");
        done += dt;
    }
    return x;
}

FlowJacobian flow_with_jacobian(const ScalarFunction& f, const ModelManifold& m, const Vector& x0,
                                double t, double h)
{
    check_flow_args(f, m, x0, t, h);
    const int n = m.dim;
    FlowJacobian out{x0, Matrix::Identity(n, n)};
    if (t == 0.0)
        return out;
    const long steps = static_cast<long>(std::ceil(t / h - 1e-9));
    double done = 0.0;
    Vector g1, g2, g3, g4;
    Matrix h1, h2, h3, h4;
    Vector& x = out.point;
    Matrix& jac = out.jacobian;
    for (long i = 0; i < steps; ++i) {
        double dt = std::min(h, t - done);
        f.grad_hessian(x, g1, h1);
        Matrix k1 = h1 * jac;
        f.grad_hessian(x + 0.5 * dt * g1, g2, h2);
        Matrix k2 = h2 * (jac + 0.5 * dt * k1);
        f.grad_hessian(x + 0.5 * dt * g2, g3, h3);
        Matrix k3 = h3 * (jac + 0.5 * dt * k2);
        f.grad_hessian(x + dt * g3, g4, h4);
        Matrix k4 = h4 * (jac + dt * k3);
        x = m.wrap(x + (dt / 6.0) * (g1 + 2.0 * g2 + 2.0 * g3 + g4));
        jac += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(x, "flow_with_jacobian");
        if (!jac.allFinite())
            throw DivergenceError("flow_with_jacobian: non-finite Jacobian");
        done += dt;
    }
    return out;
}

std::vector<Vector> sample_trajectory(const ScalarFunction& f, const Vector& x0,
                                      const std::vector<double>& times, double h)
{
    std::vector<Vector> out;
    out.reserve(times.size());
    Vector x = x0;
    double now = 0.0;
    for (double target : times) {
        if (target < now - 1e-15)
            throw Error("geometry", "trajectory sample times must be nondecreasing and >= 0");
        double span = target - now;
        if (span > 0.0) {
            long steps = static_cast<long>(std::ceil(span / h - 1e-9));
            double dt = span / static_cast<double>(steps);
            for (long i = 0; i < steps; ++i)
                x = rk4_step(f, x, dt);
            check_finite(x, "sample_trajectory");
            now = target;
        }
        out.push_back(x);
    }
    return out;
}

double unstable_defect(const ScalarFunction& f, const ModelManifold& m, const CriticalPoint& p,
                       const Vector& x, double t_back, double h, double trust_radius)
{
    if (!(t_back > 0.0))
        throw Error("geometry", "backward time must be positive");
    Vector y;
    try {
        y = flow(f.negated(), m, x, t_back, h);
    } catch (const DivergenceError& e) {
        throw InconclusiveError(std::string("backward flow diverged: ") + e.what());
    }
    Vector d = m.difference(y, p.location);
    if (!(d.norm() <= trust_radius))
        throw InconclusiveError("backward flow left the trust region around " + format_point(p.location));
    return (p.stable_basis().transpose() * d).norm();
}

DefectJacobian defect_with_jacobian(const ScalarFunction& f, const ModelManifold& m,
                                    const CriticalPoint& p, const Vector& x, double t_back, double h)
{
    FlowJacobian fj = flow_with_jacobian(f.negated(), m, x, t_back, h);
    Matrix vs = p.stable_basis();
    DefectJacobian out;
    out.displacement = m.difference(fj.point, p.location);
    out.coefficients = vs.transpose() * out.displacement;
    out.jacobian = vs.transpose() * fj.jacobian;
    return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                          const std::vector<Vector>& points)
{
    if (times.size() != points.size())
        throw Error("geometry", "trajectory CSV: times and points differ in length");
    os << "t";
    const long n = points.empty() ? 0 : points.front().size();
    for (long i = 0; i < n; ++i)
        os << ",x" << i;
    os << "\n" << std::setprecision(17);
    for (std::size_t k = 0; k < times.size(); ++k) {
        os << times[k];
        for (long i = 0; i < n; ++i)
            os << ',' << points[k][i];
        os << "\n";
    }
}

} // namespace morsedisk

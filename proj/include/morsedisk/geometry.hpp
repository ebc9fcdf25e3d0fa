#pragma once

#include "morsedisk/common.hpp"
#include "morsedisk/expr.hpp"

#include <iosfwd>
#include <vector>

namespace morsedisk {

enum class ManifoldKind { Euclidean, FlatTorus };

/// R^n or the flat torus R^n / Z^n. The metric is the identity in
/// coordinates on both; torus points live in [0,1)^n and differences are
/// taken in (-1/2, 1/2]^n.
struct ModelManifold
{
    int dim = 1;
    ManifoldKind kind = ManifoldKind::Euclidean;

    bool torus() const noexcept { return kind == ManifoldKind::FlatTorus; }
    Vector wrap(const Vector& x) const;
    Vector difference(const Vector& a, const Vector& b) const;
    double distance(const Vector& a, const Vector& b) const { return difference(a, b).norm(); }
    std::vector<bool> periodic_flags() const;
};

/// Default step of the fixed-step integrator.
inline constexpr double kFlowStep = 1e-3;

struct CriticalPoint
{
    Vector location;
    int morse_index = 0;
    Vector eigenvalues;   // ascending
    Matrix eigenvectors;  // orthonormal columns, matching eigenvalues

    int dim() const { return static_cast<int>(location.size()); }
    /// dim W^u(p) for the upward flow = number of positive eigenvalues.
    int unstable_dim() const { return dim() - morse_index; }
    /// Columns spanning the stable subspace (negative eigenvalues).
    Matrix stable_basis() const { return eigenvectors.leftCols(morse_index); }
    Matrix unstable_basis() const { return eigenvectors.rightCols(unstable_dim()); }
    /// Smallest |eigenvalue|: the slowest linear rate at p.
    double slowest_rate() const { return eigenvalues.cwiseAbs().minCoeff(); }
};

/// Backward time used for unstable-manifold membership: 10 / slowest rate,
/// capped at 40.
double backward_time(const CriticalPoint& p);

/// Refines x to a critical point by Newton on the gradient and classifies
/// it. Throws NonMorseError if the Hessian has an eigenvalue below 1e-8 in
/// absolute value, and Error("geometry") if Newton does not reach
/// |grad| <= 1e-10.
CriticalPoint classify_critical_point(const ScalarFunction& f, const ModelManifold& m, const Vector& x);

/// Newton from a resolution^n grid of seeds (the unit cell on tori, the box
/// [-half_width, half_width]^n on R^n). Results are deduplicated at distance
/// 1e-6 and sorted by location.
std::vector<CriticalPoint> find_critical_points(const ScalarFunction& f, const ModelManifold& m,
                                                int resolution, double half_width = 2.0);

/// Time-t map of the upward gradient flow x' = grad f(x), classical RK4 with
/// fixed step h (the last step shortened). Torus coordinates are wrapped
/// after every step.
Vector flow(const ScalarFunction& f, const ModelManifold& m, const Vector& x0, double t,
            double h = kFlowStep);

struct FlowJacobian
{
    Vector point;
    Matrix jacobian;
};

/// flow() together with its derivative, from the variational equation
/// J' = Hess f(x) J integrated with the same RK4 stages.
FlowJacobian flow_with_jacobian(const ScalarFunction& f, const ModelManifold& m, const Vector& x0,
                                double t, double h = kFlowStep);

/// Samples the trajectory through x0 at the given nondecreasing times >= 0.
/// Points are returned unwrapped (a continuous lift on tori).
std::vector<Vector> sample_trajectory(const ScalarFunction& f, const Vector& x0,
                                      const std::vector<double>& times, double h = kFlowStep);

/// Norm of the stable-subspace component of flow(x, -t_back) - p.
/// Throws InconclusiveError if the backward flow is non-finite or ends
/// farther than trust_radius from p.
double unstable_defect(const ScalarFunction& f, const ModelManifold& m, const CriticalPoint& p,
                       const Vector& x, double t_back, double h = kFlowStep,
                       double trust_radius = 1e3);

/// Stable coordinates of flow(x, -t_back) - p and their derivative in x;
/// the residual used by the tree solver for external edges.
struct DefectJacobian
{
    Vector coefficients;  // morse_index entries
    Matrix jacobian;      // morse_index x n
    Vector displacement;  // full (wrapped) flow(x, -t_back) - p
};

DefectJacobian defect_with_jacobian(const ScalarFunction& f, const ModelManifold& m,
                                    const CriticalPoint& p, const Vector& x, double t_back,
                                    double h = kFlowStep);

/// CSV with header "t,x0,...,x{n-1}".
void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                          const std::vector<Vector>& points);

} // namespace morsedisk

#pragma once

#include "morsedisk/moduli.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace morsedisk {

/// Bump chi = 35/(32 w) (1 - u^2)^3 with u = (t - L/2) / w, w = L/6, so its
/// support is [L/3, 2L/3] and its integral is 1. The primitive psi rises
/// from 0 to 1 in closed form.
struct CutoffChi
{
    double length = 1.0;

    explicit CutoffChi(double l);
    double value(double t) const;
    double primitive(double t) const;
};

/// One edge of the linearization: a uniform grid over the edge's time
/// interval ([0, L] internal, [-T, 0] external) with the trajectory, its
/// velocity and the Hessian along it at nodes and cell midpoints.
struct EdgeSample
{
    int edge = -1;
    bool external = false;
    double t0 = 0.0, t1 = 0.0;
    double h = 0.0;
    std::vector<double> t;  // nodes
    std::vector<Vector> gamma, velocity;
    std::vector<Matrix> hessian;
    std::vector<Vector> gamma_mid, velocity_mid;
    std::vector<Matrix> hessian_mid;

    int nodes() const { return static_cast<int>(t.size()); }
    double mid(int j) const { return 0.5 * (t[static_cast<std::size_t>(j)] + t[static_cast<std::size_t>(j) + 1]); }
};

/// Samples edge `edge` of g with max(ceil(m * length), 32) cells.
EdgeSample sample_edge(const TreeProblem& problem, const GradientTree& g, int edge, int m);

/// Dense realization of a linearized operator.
///
/// Unknowns: nodal values of xi on each edge (n per node, edges in id
/// order), then one lambda per internal edge. Rows: n per grid cell for the
/// ODE, evaluated at cell midpoints (box scheme), then boundary and vertex
/// constraint rows, each of unit norm.
struct DiscretizedOperator
{
    Matrix matrix;
    int n = 1;
    std::vector<EdgeSample> edges;
    std::vector<int> column_offset;  // per edge
    std::vector<int> row_offset;     // per edge: first ODE row
    std::vector<int> lambda_column;  // per edge, -1 if none
    int constraint_row_begin = 0;

    int rows() const { return static_cast<int>(matrix.rows()); }
    int cols() const { return static_cast<int>(matrix.cols()); }
    /// ODE rows of one edge applied to x (the equation residual at midpoints).
    Vector edge_residual(int edge, const Vector& x) const;
};

/// Linearization D_0 of the gradient-tree equation along g. Throws if m < 50
/// or an internal length is zero.
DiscretizedOperator assemble_D0(const TreeProblem& problem, const GradientTree& g, int m);

struct SpectrumReport
{
    int kernel = 0;
    int cokernel = 0;
    int index = 0;
    bool marginal = false;
    double sigma_max = 0.0;
    Vector singular_values;  // descending, of the scaled matrix
};

/// Singular values of a scaled copy (ODE rows times h, lambda columns
/// normalized); rank counts values above tol * sigma_max and a value in
/// [tol / 100, tol] * sigma_max sets `marginal`.
SpectrumReport analyze(const DiscretizedOperator& op, double tol = 1e-7);

/// Singular values (descending) of the operator measured from H^1 on each
/// edge (plus the plain norm on lambda) to L^2 on the ODE rows plus the plain
/// norm on constraint rows. Unlike the h-scaled values these converge as the
/// grid is refined.
Vector operator_singular_values(const DiscretizedOperator& op);

/// n + |E_in| - sum of stable dimensions (minus 1 for the Floer slice).
int expected_index(const TreeProblem& problem);

/// Vector with psi_e * gamma_dot_e on internal edge `edge`, lambda_e = 1 and
/// zeros elsewhere.
Vector lambda_kernel_candidate(const DiscretizedOperator& op, int edge);

/// Adjoint check on one edge of a linearization. D xi is the box-scheme
/// operator; D* eta = (eta' + H eta, int chi <gamma_dot, eta>) is assembled
/// separately from nodal centered differences with trapezoid quadrature.
/// Returns |<D(xi, lambda), eta> + <(xi, lambda), D* eta> - [<xi, eta>]|.
struct AdjointCheck
{
    double d_xi_eta = 0.0;   // <D(xi, lambda), eta>
    double xi_dstar_eta = 0.0;  // <(xi, lambda), D* eta>, lambda part included
    double lhs = 0.0;
    double boundary = 0.0;
    double defect = 0.0;
};

using Section = std::function<Vector(double)>;

AdjointCheck adjoint_identity_check(const EdgeSample& edge, const Section& xi, double lambda,
                                    const Section& eta);

struct IndexAdditivity
{
    int index_D0 = 0;
    int vertex_moduli = 0;  // sum over vertices of |v| - 3
    int total = 0;
    int expected = 0;  // dim_moduli from tangent_report plus vertex_moduli
    bool ok = false;
};

IndexAdditivity index_additivity_check(const TreeProblem& problem, const GradientTree& g, int m);

/// The t-independent strip equation on internal edge e,
///   xi' - eps rho H(gamma(l(s))) xi - lambda eps chi~ grad f(gamma(l(s))),
/// by the box scheme on [0, l_e] with max(ceil(m l_e), 32) cells. Columns are
/// the nodal xi values then lambda; there are no boundary rows.
/// chi~ = chi_e(l(s)) rho_l(s) + d rho_l / dl; its integral must be nonzero.
struct ReducedStripOperator
{
    Matrix matrix;
    int n = 1;
    int edge = -1;
    double epsilon = 0.0;
    double strip_length = 0.0;
    double h = 0.0;
    std::vector<double> s, l;           // nodes and l(s)
    std::vector<Vector> gamma;          // gamma(l(s)) at nodes
    std::vector<double> chi_tilde;      // at nodes
    std::vector<double> psi_tilde;      // eps int_0^s chi~
    double chi_tilde_integral = 0.0;
    int lambda_column = -1;

    int nodes() const { return static_cast<int>(s.size()); }
};

/// eps = 0 gives the plain difference operator on a unit strip with a zero
/// lambda column. Throws Error("linearized") for external or zero-length
/// edges, m < 50, or a vanishing integral of chi~.
ReducedStripOperator assemble_strip_reduced(const TreeProblem& problem, const GradientTree& g, int edge,
                                            double eps, int m);

/// xi(s) = xi0(l(s)) with xi0 the variational solution along the edge
/// trajectory starting from xi0(0) = start, lambda = 0.
Vector reduced_morse_candidate(const ReducedStripOperator& op, const TreeProblem& problem, const Vector& start);

/// xi(s) = psi~(s) gamma_dot(l(s)) with lambda = 1.
Vector reduced_length_candidate(const ReducedStripOperator& op, const TreeProblem& problem);

/// "# morsedisk-operator v1 rows cols nnz" then one "i j value" line per
/// nonzero entry.
void write_operator(std::ostream& os, const Matrix& matrix);

} // namespace morsedisk

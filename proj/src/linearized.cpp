#include "morsedisk/linearized.hpp"

#include "morsedisk/disk.hpp"
#include "quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

namespace morsedisk {

CutoffChi::CutoffChi(double l) : length(l)
{
    if (!(l > 0.0) || !std::isfinite(l))
        throw Error("linearized", "cutoff needs a positive finite edge length");
}

double CutoffChi::value(double t) const
{
    const double w = length / 6.0;
    const double u = (t - 0.5 * length) / w;
    if (std::abs(u) >= 1.0)
        return 0.0;
    const double q = 1.0 - u * u;
    return 35.0 / (32.0 * w) * q * q * q;
}

double CutoffChi::primitive(double t) const
{
    const double w = length / 6.0;
    const double u = (t - 0.5 * length) / w;
    if (u <= -1.0)
        return 0.0;
    if (u >= 1.0)
        return 1.0;
    const double u2 = u * u;
    return 0.5 + 35.0 / 32.0 * u * (1.0 - u2 + 0.6 * u2 * u2 - u2 * u2 * u2 / 7.0);
}

EdgeSample sample_edge(const TreeProblem& problem, const GradientTree& g, int edge, int m)
{
    const auto& t = problem.tree;
    const Edge& e = t.edge(edge);
    EdgeSample s;
    s.edge = edge;
    s.external = e.external();
    if (s.external) {
        s.t0 = -problem.t_back(e.label);
        s.t1 = 0.0;
    } else {
        s.t0 = 0.0;
        s.t1 = g.lengths.at(static_cast<std::size_t>(edge - t.leaves()));
        if (!(s.t1 > 0.0))
            throw Error("linearized", "zero-length internal edges have no linearization grid");
    }
    const double len = s.t1 - s.t0;
    const int cells = std::max(static_cast<int>(std::ceil(m * len)), 32);
    s.h = len / cells;
    std::vector<double> times;
    for (int j = 0; j <= cells; ++j) {
        s.t.push_back(s.t0 + j * s.h);
        times.push_back(s.t.back());
        if (j < cells)
            times.push_back(s.t0 + (j + 0.5) * s.h);
    }
    times.back() = s.t1;
    s.t.back() = s.t1;
    auto pts = edge_trajectory(problem, g, edge, times);
    const ScalarFunction f = problem.edge_function(edge);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        Vector gr;
        Matrix he;
        f.grad_hessian(pts[k], gr, he);
        if (k % 2 == 0) {
            s.gamma.push_back(pts[k]);
            s.velocity.push_back(gr);
            s.hessian.push_back(he);
        } else {
            s.gamma_mid.push_back(pts[k]);
            s.velocity_mid.push_back(gr);
            s.hessian_mid.push_back(he);
        }
    }
    return s;
}

Vector DiscretizedOperator::edge_residual(int edge, const Vector& x) const
{
    const auto& s = edges.at(static_cast<std::size_t>(edge));
    return matrix.middleRows(row_offset[static_cast<std::size_t>(edge)], (s.nodes() - 1) * n) * x;
}

namespace {

/// Node of the edge grid that sits at the source vertex of half-edge h.
std::pair<int, int> vertex_node(const RibbonTree& t, const std::vector<EdgeSample>& edges, int h)
{
    for (const Edge& e : t.edges()) {
        int id = static_cast<int>(&e - t.edges().data());
        int last = edges[static_cast<std::size_t>(id)].nodes() - 1;
        if (e.external() && e.half_edge == h)
            return {id, last};
        if (!e.external() && e.half_edge == h)
            return {id, 0};
        if (!e.external() && e.partner == h)
            return {id, last};
    }
    throw Error("linearized", "half-edge not found");
}

} // namespace

DiscretizedOperator assemble_D0(const TreeProblem& problem, const GradientTree& g, int m)
{
    if (m < 50)
        throw Error("linearized", "grid too coarse: need at least 50 nodes per unit length");
    problem.validate();
    const auto& t = problem.tree;
    const int n = problem.manifold.dim;
    const int ne = static_cast<int>(t.edges().size());
    DiscretizedOperator op;
    op.n = n;
    int cols = 0, rows = 0;
    for (int e = 0; e < ne; ++e) {
        op.edges.push_back(sample_edge(problem, g, e, m));
        op.column_offset.push_back(cols);
        op.row_offset.push_back(rows);
        cols += op.edges.back().nodes() * n;
        rows += (op.edges.back().nodes() - 1) * n;
    }
    for (int e = 0; e < ne; ++e)
        op.lambda_column.push_back(t.edge(e).external() ? -1 : cols++);
    op.constraint_row_begin = rows;
    for (int k = 0; k < t.leaves(); ++k)
        rows += problem.stable_dim(k);
    for (int v = 0; v < t.vertex_count(); ++v)
        rows += n * (t.valence(v) - 1);
    if (t.floer_mode())
        rows += 1;

    Matrix& a = op.matrix;
    a.setZero(rows, cols);
    const Matrix id = Matrix::Identity(n, n);
    for (int e = 0; e < ne; ++e) {
        const auto& s = op.edges[static_cast<std::size_t>(e)];
        const int c0 = op.column_offset[static_cast<std::size_t>(e)];
        const int lam = op.lambda_column[static_cast<std::size_t>(e)];
        std::optional<CutoffChi> chi;
        if (lam >= 0)
            chi.emplace(s.t1 - s.t0);
        for (int j = 0; j + 1 < s.nodes(); ++j) {
            const int r = op.row_offset[static_cast<std::size_t>(e)] + j * n;
            const Matrix& hm = s.hessian_mid[static_cast<std::size_t>(j)];
            a.block(r, c0 + j * n, n, n) = -id / s.h - 0.5 * hm;
            a.block(r, c0 + (j + 1) * n, n, n) = id / s.h - 0.5 * hm;
            if (lam >= 0)
                a.block(r, lam, n, 1) = -chi->value(s.mid(j) - s.t0) * s.velocity_mid[static_cast<std::size_t>(j)];
        }
    }
    int r = op.constraint_row_begin;
    for (int k = 0; k < t.leaves(); ++k) {
        const auto& cp = problem.external_points[static_cast<std::size_t>(k)];
        const int c0 = op.column_offset[static_cast<std::size_t>(t.external_edge_id(k))];
        Matrix b = cp.stable_basis();
        for (int i = 0; i < b.cols(); ++i)
            a.block(r++, c0, 1, n) = b.col(i).transpose();
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int v = 0; v < t.vertex_count(); ++v) {
        const auto& order = t.cyclic_order(v);
        auto [e0, j0] = vertex_node(t, op.edges, order[0]);
        const int base = op.column_offset[static_cast<std::size_t>(e0)] + j0 * n;
        for (std::size_t i = 1; i < order.size(); ++i) {
            auto [e1, j1] = vertex_node(t, op.edges, order[i]);
            const int other = op.column_offset[static_cast<std::size_t>(e1)] + j1 * n;
            for (int c = 0; c < n; ++c) {
                a(r, other + c) += inv_sqrt2;
                a(r, base + c) -= inv_sqrt2;
                ++r;
            }
        }
    }
    if (t.floer_mode()) {
        Vector grad = problem.pair_function(0, 1).grad(g.vertex_positions[0]);
        auto [e0, j0] = vertex_node(t, op.edges, t.cyclic_order(0)[0]);
        a.block(r++, op.column_offset[static_cast<std::size_t>(e0)] + j0 * n, 1, n) =
            grad.transpose() / grad.norm();
    }
    return op;
}

SpectrumReport analyze(const DiscretizedOperator& op, double tol)
{
    Matrix scaled = op.matrix;
    for (std::size_t e = 0; e < op.edges.size(); ++e) {
        const auto& s = op.edges[e];
        scaled.middleRows(op.row_offset[e], (s.nodes() - 1) * op.n) *= s.h;
    }
    for (int c : op.lambda_column)
        if (c >= 0) {
            double norm = scaled.col(c).norm();
            if (norm > 0.0)
                scaled.col(c) /= norm;
        }
    SpectrumReport rep;
    if (scaled.size() == 0)
        return rep;
    Eigen::BDCSVD<Matrix> svd(scaled);
    rep.singular_values = svd.singularValues();
    rep.sigma_max = rep.singular_values.size() ? rep.singular_values[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < rep.singular_values.size(); ++i) {
        double rel = rep.singular_values[i] / rep.sigma_max;
        if (rel > tol)
            ++rank;
        else if (rel >= tol / 100)
            rep.marginal = true;
    }
    rep.kernel = op.cols() - rank;
    rep.cokernel = op.rows() - rank;
    rep.index = rep.kernel - rep.cokernel;
    return rep;
}

Vector operator_singular_values(const DiscretizedOperator& op)
{
    const int cols = op.cols();
    Matrix gram = Matrix::Zero(cols, cols);
    Matrix a = op.matrix;
    for (std::size_t e = 0; e < op.edges.size(); ++e) {
        const auto& s = op.edges[e];
        a.middleRows(op.row_offset[e], (s.nodes() - 1) * op.n) *= std::sqrt(s.h);
        // trapezoid L^2 mass plus difference quotients, per component
        for (int j = 0; j + 1 < s.nodes(); ++j)
            for (int c = 0; c < op.n; ++c) {
                const int i0 = op.column_offset[e] + j * op.n + c, i1 = i0 + op.n;
                gram(i0, i0) += 0.5 * s.h + 1.0 / s.h;
                gram(i1, i1) += 0.5 * s.h + 1.0 / s.h;
                gram(i0, i1) -= 1.0 / s.h;
                gram(i1, i0) -= 1.0 / s.h;
            }
    }
    for (int c : op.lambda_column)
        if (c >= 0)
            gram(c, c) = 1.0;
    Eigen::LLT<Matrix> llt(gram);
    // A G^{-1/2} via the Cholesky factor: singular values of A L^{-T}.
    Matrix b = llt.matrixU().solve<Eigen::OnTheRight>(a);
    return Eigen::BDCSVD<Matrix>(b).singularValues();
}

int expected_index(const TreeProblem& problem)
{
    int k = 0;
    for (int i = 0; i < problem.tree.leaves(); ++i)
        k += problem.stable_dim(i);
    return problem.manifold.dim + problem.tree.internal_edge_count() - k - (problem.tree.floer_mode() ? 1 : 0);
}

Vector lambda_kernel_candidate(const DiscretizedOperator& op, int edge)
{
    const int lam = op.lambda_column.at(static_cast<std::size_t>(edge));
    if (lam < 0)
        throw Error("linearized", "external edges carry no length parameter");
    const auto& s = op.edges[static_cast<std::size_t>(edge)];
    CutoffChi chi(s.t1 - s.t0);
    Vector x = Vector::Zero(op.cols());
    const int c0 = op.column_offset[static_cast<std::size_t>(edge)];
    for (int j = 0; j < s.nodes(); ++j)
        x.segment(c0 + j * op.n, op.n) = chi.primitive(s.t[static_cast<std::size_t>(j)] - s.t0)
                                         * s.velocity[static_cast<std::size_t>(j)];
    x[lam] = 1.0;
    return x;
}

AdjointCheck adjoint_identity_check(const EdgeSample& s, const Section& xi, double lambda, const Section& eta)
{
    const int nodes = s.nodes();
    if (nodes < 3)
        throw Error("linearized", "adjoint check needs at least three nodes");
    if (s.external && lambda != 0.0)
        throw Error("linearized", "external edges carry no length parameter");
    std::optional<CutoffChi> chi;
    if (!s.external)
        chi.emplace(s.t1 - s.t0);
    std::vector<Vector> x, y;
    for (double tj : s.t) {
        x.push_back(xi(tj));
        y.push_back(eta(tj));
    }
    const double h = s.h;

    // <D(xi, lambda), eta>: box scheme, midpoint rule.
    double d_xi = 0.0;
    for (int j = 0; j + 1 < nodes; ++j) {
        const auto J = static_cast<std::size_t>(j);
        Vector dx = (x[J + 1] - x[J]) / h - 0.5 * s.hessian_mid[J] * (x[J] + x[J + 1]);
        if (chi)
            dx -= lambda * chi->value(s.mid(j) - s.t0) * s.velocity_mid[J];
        d_xi += h * dx.dot(0.5 * (y[J] + y[J + 1]));
    }

    // <(xi, lambda), D* eta>: nodal differences, trapezoid rule.
    double adj = 0.0, lam_part = 0.0;
    for (int j = 0; j < nodes; ++j) {
        const auto J = static_cast<std::size_t>(j);
        Vector dy;
        if (j == 0)
            dy = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
        else if (j == nodes - 1)
            dy = (3.0 * y[J] - 4.0 * y[J - 1] + y[J - 2]) / (2.0 * h);
        else
            dy = (y[J + 1] - y[J - 1]) / (2.0 * h);
        const double w = (j == 0 || j == nodes - 1) ? 0.5 * h : h;
        adj += w * x[J].dot(dy + s.hessian[J] * y[J]);
        if (chi)
            lam_part += w * chi->value(s.t[J] - s.t0) * s.velocity[J].dot(y[J]);
    }
    AdjointCheck out;
    out.d_xi_eta = d_xi;
    out.xi_dstar_eta = adj + lambda * lam_part;
    out.lhs = out.d_xi_eta + out.xi_dstar_eta;
    out.boundary = x.back().dot(y.back()) - x.front().dot(y.front());
    out.defect = std::abs(out.lhs - out.boundary);
    return out;
}

IndexAdditivity index_additivity_check(const TreeProblem& problem, const GradientTree& g, int m)
{
    if (problem.tree.floer_mode())
        throw Error("linearized", "index additivity is stated for trees with d >= 3");
    IndexAdditivity out;
    auto spec = analyze(assemble_D0(problem, g, m));
    out.index_D0 = spec.index;
    for (int v = 0; v < problem.tree.vertex_count(); ++v)
        out.vertex_moduli += problem.tree.valence(v) - 3;
    out.total = out.index_D0 + out.vertex_moduli;
    out.expected = tangent_report(problem, g).dim_moduli + out.vertex_moduli;
    out.ok = out.total == out.expected && spec.cokernel == 0;
    return out;
}

ReducedStripOperator assemble_strip_reduced(const TreeProblem& problem, const GradientTree& g, int edge,
                                            double eps, int m)
{
    if (m < 50)
        throw Error("linearized", "grid too coarse: need at least 50 nodes per unit length");
    if (eps < 0.0)
        throw Error("linearized", "epsilon must be nonnegative");
    const auto& t = problem.tree;
    const Edge& e = t.edge(edge);
    if (e.external())
        throw Error("linearized", "the reduced strip operator is built on internal edges");
    const double R = g.lengths.at(static_cast<std::size_t>(edge - t.leaves()));
    if (!(R > 0.0))
        throw Error("linearized", "zero-length internal edges have no strip");
    const int n = problem.manifold.dim;
    const ScalarFunction f = problem.edge_function(edge);

    ReducedStripOperator op;
    op.n = n;
    op.edge = edge;
    op.epsilon = eps;
    op.strip_length = eps == 0.0 ? 1.0 : strip_length_from_edge(R, eps);
    const double le = op.strip_length;
    const int cells = std::max(static_cast<int>(std::ceil(m * le)), 32);
    op.h = le / cells;

    // l at nodes and midpoints, interleaved.
    std::vector<double> ls{0.0};
    std::vector<double> s_all{0.0};
    for (int j = 0; j < cells; ++j) {
        const double a = j * op.h, mid = (j + 0.5) * op.h, b = j + 1 == cells ? le : (j + 1) * op.h;
        const double lm = eps == 0.0 ? 0.0 : ls.back() + cutoff_integral(le, a, mid, eps);
        const double lb = eps == 0.0 ? 0.0 : lm + cutoff_integral(le, mid, b, eps);
        ls.push_back(lm);
        ls.push_back(lb);
        s_all.push_back(mid);
        s_all.push_back(b);
    }
    auto pts = edge_trajectory(problem, g, edge, ls);
    const CutoffChi chi(R);
    auto chi_tilde = [&](double s, double l) {
        return eps == 0.0 ? 0.0 : chi.value(l) * cutoff_rho(le, s) + cutoff_rho_dl(le, s);
    };
    for (std::size_t k = 0; k < ls.size(); k += 2) {
        op.s.push_back(s_all[k]);
        op.l.push_back(ls[k]);
        op.gamma.push_back(pts[k]);
        op.chi_tilde.push_back(chi_tilde(s_all[k], ls[k]));
    }

    // psi~ = eps int chi~, with l re-integrated at each quadrature point.
    op.psi_tilde.push_back(0.0);
    for (int j = 0; j < cells; ++j) {
        const auto J = static_cast<std::size_t>(j);
        const double a = op.s[J], b = op.s[J + 1], la = op.l[J];
        double piece = 0.0;
        if (eps != 0.0)
            piece = eps * detail::gauss_legendre(
                              [&](double x) { return chi_tilde(x, la + cutoff_integral(le, a, x, eps)); }, a, b, 1);
        op.psi_tilde.push_back(op.psi_tilde.back() + piece);
    }
    op.chi_tilde_integral = eps == 0.0 ? 0.0 : op.psi_tilde.back() / eps;
    if (eps != 0.0 && !(std::abs(op.chi_tilde_integral) > 1e-12))
        throw Error("linearized", "the integral of chi~ vanishes");

    const int nodes = cells + 1;
    op.lambda_column = nodes * n;
    op.matrix = Matrix::Zero(cells * n, nodes * n + 1);
    const Matrix id = Matrix::Identity(n, n);
    for (int j = 0; j < cells; ++j) {
        const auto mid = static_cast<std::size_t>(2 * j + 1);
        Vector grad;
        Matrix hess;
        f.grad_hessian(pts[mid], grad, hess);
        const double rho = eps == 0.0 ? 0.0 : cutoff_rho(le, s_all[mid]);
        const Matrix a = 0.5 * eps * rho * hess;
        op.matrix.block(j * n, j * n, n, n) = -id / op.h - a;
        op.matrix.block(j * n, (j + 1) * n, n, n) = id / op.h - a;
        op.matrix.block(j * n, op.lambda_column, n, 1) = -eps * chi_tilde(s_all[mid], ls[mid]) * grad;
    }
    return op;
}

Vector reduced_morse_candidate(const ReducedStripOperator& op, const TreeProblem& problem, const Vector& start)
{
    const int n = op.n;
    if (start.size() != n)
        throw Error("linearized", "initial vector has the wrong dimension");
    const ScalarFunction f = problem.edge_function(op.edge);
    Vector x = Vector::Zero(op.matrix.cols());
    Matrix jac = Matrix::Identity(n, n);
    x.head(n) = start;
    for (int j = 1; j < op.nodes(); ++j) {
        const auto J = static_cast<std::size_t>(j);
        const double dl = op.l[J] - op.l[J - 1];
        if (dl > 0.0)
            jac = flow_with_jacobian(f, problem.manifold, op.gamma[J - 1], dl).jacobian * jac;
        x.segment(j * n, n) = jac * start;
    }
    return x;
}

Vector reduced_length_candidate(const ReducedStripOperator& op, const TreeProblem& problem)
{
    const ScalarFunction f = problem.edge_function(op.edge);
    Vector x = Vector::Zero(op.matrix.cols());
    for (int j = 0; j < op.nodes(); ++j) {
        const auto J = static_cast<std::size_t>(j);
        x.segment(j * op.n, op.n) = op.psi_tilde[J] * f.grad(op.gamma[J]);
    }
    x[op.lambda_column] = 1.0;
    return x;
}

void write_operator(std::ostream& os, const Matrix& a)
{
    long nnz = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (a(i, j) != 0.0)
                ++nnz;
    os << "# morsedisk-operator v1 " << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
    char buf[96];
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0) {
                std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(i), static_cast<long>(j), a(i, j));
                os << buf;
            }
}

} // namespace morsedisk

#include "morsedisk/moduli.hpp"

#include "parallel.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>

namespace morsedisk {

// ---------------------------------------------------------------- problem

void TreeProblem::validate() const
{
    const int d = tree.leaves();
    if (d < 2)
        throw Error("moduli", "tree has no leaves");
    for (const Edge& e : tree.edges()) {
        auto [a, b] = tree.boundary_pair_of_half_edge(e.half_edge);
        auto key = std::minmax(a, b);
        auto it = functions.find({key.first, key.second});
        if (it == functions.end())
            throw Error("moduli", "no function for boundary pair " + std::to_string(key.first) + ","
                                      + std::to_string(key.second));
        if (it->second.dim() != manifold.dim)
            throw Error("moduli", "function for pair " + std::to_string(key.first) + ","
                                      + std::to_string(key.second) + " has the wrong dimension");
        for (int i = 0; i < manifold.dim; ++i)
            if (manifold.torus() && !it->second.periodic(i))
                throw Error("moduli", "torus functions must declare every variable periodic");
    }
    if (static_cast<int>(external_points.size()) != d)
        throw Error("moduli", "need one critical point per external edge");
    for (const auto& p : external_points)
        if (p.dim() != manifold.dim)
            throw Error("moduli", "critical point dimension mismatch");
    if (!(epsilon > 0.0))
        throw Error("moduli", "epsilon must be positive");
}

const ScalarFunction& TreeProblem::pair_function(int i, int j) const
{
    auto it = functions.find({std::min(i, j), std::max(i, j)});
    if (it == functions.end())
        throw Error("moduli", "no function for boundary pair " + std::to_string(i) + "," + std::to_string(j));
    return it->second;
}

ScalarFunction TreeProblem::half_edge_function(int h) const
{
    auto [a, b] = tree.boundary_pair_of_half_edge(h);
    const ScalarFunction& f = pair_function(a, b);
    return a < b ? f : f.negated();
}

ScalarFunction TreeProblem::edge_function(int edge) const
{
    const Edge& e = tree.edge(edge);
    ScalarFunction f = half_edge_function(e.half_edge);
    return e.external() ? f.negated() : f;
}

double TreeProblem::t_back(int label) const
{
    return backward_time(external_points.at(static_cast<std::size_t>(label)));
}

double TreeProblem::slice_level() const
{
    if (!tree.floer_mode())
        throw Error("moduli", "slice level is defined for Floer trees only");
    const ScalarFunction& f = pair_function(0, 1);
    return 0.5 * (f.eval(external_points[0].location) + f.eval(external_points[1].location));
}

CriticalPoint select_critical_point(const ScalarFunction& f, const ModelManifold& m,
                                    const PointSelector& sel, int resolution)
{
    auto cps = find_critical_points(f, m, resolution);
    if (sel.near) {
        if (sel.near->size() != m.dim)
            throw Error("moduli", "selector location has the wrong dimension");
        const CriticalPoint* best = nullptr;
        for (const auto& c : cps)
            if ((!sel.index || c.morse_index == *sel.index)
                && (!best || m.distance(c.location, *sel.near) < m.distance(best->location, *sel.near)))
                best = &c;
        if (!best)
            throw Error("moduli", "no critical point matches the selector");
        return *best;
    }
    if (!sel.index)
        throw Error("moduli", "selector needs a location or an index");
    std::vector<CriticalPoint> match;
    for (const auto& c : cps)
        if (c.morse_index == *sel.index)
            match.push_back(c);
    if (match.size() != 1)
        throw Error("moduli", std::to_string(match.size()) + " critical points of index "
                                  + std::to_string(*sel.index) + " found; add a location to the selector");
    return match.front();
}

TreeProblem make_problem(RibbonTree tree, ModelManifold manifold,
                         std::map<std::pair<int, int>, ScalarFunction> functions,
                         const std::vector<PointSelector>& selectors, int resolution)
{
    TreeProblem p;
    p.tree = std::move(tree);
    p.manifold = manifold;
    p.functions = std::move(functions);
    if (static_cast<int>(selectors.size()) != p.tree.leaves())
        throw Error("moduli", "need one point selector per external edge");
    for (int k = 0; k < p.tree.leaves(); ++k)
        p.external_points.push_back(select_critical_point(p.edge_function(p.tree.external_edge_id(k)),
                                                          p.manifold, selectors[static_cast<std::size_t>(k)],
                                                          resolution));
    p.validate();
    return p;
}

// ---------------------------------------------------------------- system

namespace {

double softplus_inverse(double l) { return l + std::log(-std::expm1(-l)); }
double softplus(double s) { return s > 30.0 ? s : std::log1p(std::exp(s)); }

/// Residual system of a tree problem. Unknowns: vertex positions, then one
/// softplus parameter per internal edge not pinned to length zero.
class TreeSystem
{
public:
    TreeSystem(const TreeProblem& p, std::vector<bool> pinned) : p_(p), pinned_(std::move(pinned))
    {
        n_ = p.manifold.dim;
        nv_ = p.tree.vertex_count();
        const int d = p.tree.leaves();
        for (int e = 0; e < static_cast<int>(p.tree.edges().size()); ++e)
            fn_.push_back(p.edge_function(e));
        cols_ = n_ * nv_;
        for (int i = 0; i < p.tree.internal_edge_count(); ++i) {
            sigma_col_.push_back(pinned_[static_cast<std::size_t>(i)] ? -1 : cols_++);
            rows_ += n_;
        }
        for (int k = 0; k < d; ++k)
            rows_ += p.stable_dim(k);
        if (p.tree.floer_mode()) {
            slice_ = p.slice_level();
            rows_ += 1;
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    /// frac scales every backward time (continuation parameter).
    void eval(const GradientTree& g, double frac, Vector& r, Matrix* jac,
              std::vector<Vector>* displacement = nullptr) const
    {
        const auto& t = p_.tree;
        const auto& m = p_.manifold;
        const int d = t.leaves();
        r.resize(rows_);
        if (jac)
            jac->setZero(rows_, cols_);
        if (displacement)
            displacement->assign(static_cast<std::size_t>(d), Vector());
        int row = 0;
        for (int i = 0; i < t.internal_edge_count(); ++i) {
            const int id = t.internal_edge_id(i);
            const Edge& e = t.edge(id);
            const int a = t.half_edge(e.half_edge).source;
            const int b = t.half_edge(e.partner).source;
            const double len = g.lengths[static_cast<std::size_t>(i)];
            const Vector& va = g.vertex_positions[static_cast<std::size_t>(a)];
            const Vector& vb = g.vertex_positions[static_cast<std::size_t>(b)];
            const ScalarFunction& f = fn_[static_cast<std::size_t>(id)];
            if (jac) {
                FlowJacobian fj = flow_with_jacobian(f, m, va, len);
                r.segment(row, n_) = m.difference(fj.point, vb);
                jac->block(row, a * n_, n_, n_) += fj.jacobian;
                jac->block(row, b * n_, n_, n_) -= Matrix::Identity(n_, n_);
                int c = sigma_col_[static_cast<std::size_t>(i)];
                if (c >= 0)
                    jac->block(row, c, n_, 1) = f.grad(fj.point) * (-std::expm1(-len));
            } else {
                r.segment(row, n_) = m.difference(flow(f, m, va, len), vb);
            }
            row += n_;
        }
        for (int k = 0; k < d; ++k) {
            const int h = t.leaf_half_edge(k);
            const int a = t.half_edge(h).source;
            const auto& cp = p_.external_points[static_cast<std::size_t>(k)];
            const int ks = cp.morse_index;
            const ScalarFunction& f = fn_[static_cast<std::size_t>(t.external_edge_id(k))];
            const Vector& va = g.vertex_positions[static_cast<std::size_t>(a)];
            const double tb = frac * p_.t_back(k);
            if (jac || ks > 0 || displacement) {
                DefectJacobian dj;
                if (jac) {
                    dj = defect_with_jacobian(f, m, cp, va, tb);
                } else {
                    Vector y = flow(f.negated(), m, va, tb);
                    dj.displacement = m.difference(y, cp.location);
                    dj.coefficients = cp.stable_basis().transpose() * dj.displacement;
                }
                r.segment(row, ks) = dj.coefficients;
                if (jac && ks > 0)
                    jac->block(row, a * n_, ks, n_) += dj.jacobian;
                if (displacement)
                    (*displacement)[static_cast<std::size_t>(k)] = dj.displacement;
            }
            row += ks;
        }
        if (t.floer_mode()) {
            const ScalarFunction& f = p_.pair_function(0, 1);
            const Vector& v = g.vertex_positions[0];
            r[row] = f.eval(v) - slice_;
            if (jac)
                jac->block(row, 0, 1, n_) = f.grad(v).transpose();
            ++row;
        }
    }

    GradientTree step(const GradientTree& g, const Vector& dz, double alpha) const
    {
        GradientTree out = g;
        for (int v = 0; v < nv_; ++v)
            out.vertex_positions[static_cast<std::size_t>(v)] =
                p_.manifold.wrap(g.vertex_positions[static_cast<std::size_t>(v)] + alpha * dz.segment(v * n_, n_));
        for (std::size_t i = 0; i < sigma_col_.size(); ++i) {
            int c = sigma_col_[i];
            if (c >= 0)
                out.lengths[i] = softplus(softplus_inverse(g.lengths[i]) + alpha * dz[c]);
        }
        return out;
    }

private:
    const TreeProblem& p_;
    std::vector<bool> pinned_;
    std::vector<ScalarFunction> fn_;
    std::vector<int> sigma_col_;
    int n_ = 0;
    int nv_ = 0;
    int rows_ = 0;
    int cols_ = 0;
    double slice_ = 0.0;
};

bool newton(const TreeSystem& sys, GradientTree& g, double frac, double tol, int max_iter, double max_length)
{
    Vector r, r_trial;
    Matrix jac;
    int slow = 0;
    double last = INFINITY;
    for (int it = 0; it <= max_iter; ++it) {
        sys.eval(g, frac, r, &jac);
        const double norm = r.norm();
        if (!std::isfinite(norm))
            return false;
        g.residual_norm = norm;
        if (norm <= tol)
            return true;
        if (it == max_iter)
            break;
        // Give up on seeds that stall far from a root.
        slow = norm > 0.9 * last ? slow + 1 : 0;
        if (slow >= 5 && norm > 1e-6)
            return false;
        last = norm;
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jac);
        Vector dz = cod.solve(-r);
        if (!dz.allFinite())
            return false;
        const double cap = 0.5;
        if (dz.cwiseAbs().maxCoeff() > cap)
            dz *= cap / dz.cwiseAbs().maxCoeff();
        bool accepted = false;
        for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
            GradientTree trial = sys.step(g, dz, alpha);
            if (std::any_of(trial.lengths.begin(), trial.lengths.end(), [&](double l) { return l > max_length; }))
                continue;
            sys.eval(trial, frac, r_trial, nullptr);
            if (r_trial.norm() < norm) {
                g = std::move(trial);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            return false;
    }
    return false;
}

double tree_distance(const ModelManifold& m, const GradientTree& a, const GradientTree& b)
{
    double dist = 0.0;
    for (std::size_t v = 0; v < a.vertex_positions.size(); ++v)
        dist = std::max(dist, m.distance(a.vertex_positions[v], b.vertex_positions[v]));
    for (std::size_t i = 0; i < a.lengths.size(); ++i)
        dist = std::max(dist, std::abs(a.lengths[i] - b.lengths[i]));
    return dist;
}

double radical_inverse(int base, long i)
{
    double inv = 1.0 / base, f = inv, out = 0.0;
    while (i > 0) {
        out += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return out;
}

std::vector<Vector> make_seeds(int dims, const SolveOptions& o, bool torus)
{
    const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (dims > 16)
        throw Error("moduli", "too many unknowns for the seed generator");
    double total = std::pow(static_cast<double>(o.seed_resolution), dims);
    std::vector<Vector> unit;
    if (total <= o.max_seeds) {
        const long count = static_cast<long>(total);
        for (long s = 0; s < count; ++s) {
            Vector x(dims);
            long rem = s;
            for (int i = 0; i < dims; ++i) {
                x[i] = (static_cast<double>(rem % o.seed_resolution) + 0.5) / o.seed_resolution;
                rem /= o.seed_resolution;
            }
            unit.push_back(x);
        }
    } else {
        for (long s = 1; s <= o.max_seeds; ++s) {
            Vector x(dims);
            for (int i = 0; i < dims; ++i)
                x[i] = radical_inverse(primes[i], s);
            unit.push_back(x);
        }
    }
    if (!torus)
        for (auto& x : unit)
            x = (2.0 * x.array() - 1.0) * o.search_half_width;
    return unit;
}

bool certify(const TreeProblem& p, const GradientTree& g, const SolveOptions& o)
{
    const auto& t = p.tree;
    const auto& m = p.manifold;
    for (int i = 0; i < t.internal_edge_count(); ++i) {
        double len = g.lengths[static_cast<std::size_t>(i)];
        if (!(len >= 0.0) || len > o.max_length)
            return false;
        const Edge& e = t.edge(t.internal_edge_id(i));
        const Vector& va = g.vertex_positions[static_cast<std::size_t>(t.half_edge(e.half_edge).source)];
        const Vector& vb = g.vertex_positions[static_cast<std::size_t>(t.half_edge(e.partner).source)];
        if (m.distance(flow(p.edge_function(t.internal_edge_id(i)), m, va, len), vb) > 1e-8)
            return false;
    }
    for (int k = 0; k < t.leaves(); ++k) {
        const int a = t.half_edge(t.leaf_half_edge(k)).source;
        try {
            double defect = unstable_defect(p.edge_function(t.external_edge_id(k)), m,
                                            p.external_points[static_cast<std::size_t>(k)],
                                            g.vertex_positions[static_cast<std::size_t>(a)], p.t_back(k),
                                            kFlowStep, o.trust_radius);
            if (defect > 1e-6)
                return false;
        } catch (const InconclusiveError&) {
            return false;
        }
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------- solve

Vector half_edge_embedding(const TreeProblem& problem, const GradientTree& g)
{
    const int n = problem.manifold.dim;
    const auto& hes = problem.tree.half_edges();
    Vector out(n * static_cast<int>(hes.size()));
    for (std::size_t h = 0; h < hes.size(); ++h)
        out.segment(static_cast<int>(h) * n, n) = g.vertex_positions[static_cast<std::size_t>(hes[h].source)];
    return out;
}

std::vector<GradientTree> solve(const TreeProblem& problem, const SolveOptions& o)
{
    problem.validate();
    const auto& t = problem.tree;
    const int n = problem.manifold.dim;
    const int ne = t.internal_edge_count();
    std::vector<double> guess = o.metric_guess;
    if (guess.empty())
        guess.assign(static_cast<std::size_t>(ne), 1.0);
    if (static_cast<int>(guess.size()) != ne)
        throw Error("moduli", "metric guess needs one length per internal edge");
    std::vector<bool> pinned(static_cast<std::size_t>(ne));
    for (int i = 0; i < ne; ++i) {
        if (!(guess[static_cast<std::size_t>(i)] >= 0.0))
            throw Error("moduli", "metric guess lengths must be nonnegative");
        pinned[static_cast<std::size_t>(i)] = guess[static_cast<std::size_t>(i)] == 0.0;
    }
    if (o.continuation_stages < 1 || o.max_iterations < 1 || o.seed_resolution < 1)
        throw Error("moduli", "solver options must be positive");

    TreeSystem sys(problem, pinned);
    auto seeds = make_seeds(n * t.vertex_count(), o, problem.manifold.torus());
    std::vector<std::optional<GradientTree>> found(seeds.size());

    detail::parallel_for(seeds.size(), [&](std::size_t s) {
        GradientTree g;
        for (int v = 0; v < t.vertex_count(); ++v)
            g.vertex_positions.push_back(seeds[s].segment(v * n, n));
        g.lengths = guess;
        try {
            const int stages = o.continuation_stages;
            for (int k = 1; k <= stages; ++k) {
                const double tol = k == stages ? o.newton_tol : 1e-8;
                if (!newton(sys, g, static_cast<double>(k) / stages, tol, o.max_iterations, o.max_length))
                    return;
            }
            if (certify(problem, g, o))
                found[s] = std::move(g);
        } catch (const NonMorseError&) {
            throw;
        } catch (const Error&) {
            // divergent or inconclusive seed: discarded
        }
    });

    std::vector<GradientTree> out;
    for (auto& f : found) {
        if (!f)
            continue;
        bool dup = std::any_of(out.begin(), out.end(), [&](const GradientTree& g) {
            return tree_distance(problem.manifold, g, *f) < o.dedup_distance;
        });
        if (!dup)
            out.push_back(std::move(*f));
    }
    auto key = [](const GradientTree& g) {
        std::vector<double> k;
        for (const auto& v : g.vertex_positions)
            k.insert(k.end(), v.data(), v.data() + v.size());
        k.insert(k.end(), g.lengths.begin(), g.lengths.end());
        return k;
    };
    std::sort(out.begin(), out.end(), [&](const GradientTree& a, const GradientTree& b) { return key(a) < key(b); });
    return out;
}

Vector tree_residual(const TreeProblem& problem, const GradientTree& g)
{
    std::vector<bool> pinned;
    for (double l : g.lengths)
        pinned.push_back(l == 0.0);
    TreeSystem sys(problem, pinned);
    Vector r;
    sys.eval(g, 1.0, r, nullptr);
    return r;
}

std::vector<Vector> edge_trajectory(const TreeProblem& problem, const GradientTree& g, int edge,
                                    const std::vector<double>& times)
{
    const auto& t = problem.tree;
    const Edge& e = t.edge(edge);
    const ScalarFunction f = problem.edge_function(edge);
    const Vector& v = g.vertex_positions[static_cast<std::size_t>(t.half_edge(e.half_edge).source)];
    if (!e.external())
        return sample_trajectory(f, v, times);
    std::vector<double> back;
    for (auto it = times.rbegin(); it != times.rend(); ++it) {
        if (*it > 0.0)
            throw Error("moduli", "external trajectory times must be nonpositive");
        back.push_back(-*it);
    }
    auto pts = sample_trajectory(f.negated(), v, back);
    std::reverse(pts.begin(), pts.end());
    return pts;
}

// ---------------------------------------------------------------- tangent spaces

namespace {

struct RankCounter
{
    double tol;
    bool marginal = false;
    double min_accepted = INFINITY;
    double max_rejected = 0.0;

    /// Rank from singular values, relative to the largest.
    int rank(const Vector& sv)
    {
        if (sv.size() == 0)
            return 0;
        const double scale = sv.maxCoeff();
        if (scale == 0.0)
            return 0;
        int r = 0;
        for (int i = 0; i < sv.size(); ++i) {
            double rel = sv[i] / scale;
            if (rel > tol) {
                ++r;
                min_accepted = std::min(min_accepted, rel);
            } else {
                max_rejected = std::max(max_rejected, rel);
            }
            if (rel >= tol / 100 && rel <= tol)
                marginal = true;
        }
        return r;
    }

    /// Orthonormal basis of the column space.
    Matrix range(const Matrix& b)
    {
        if (b.cols() == 0)
            return Matrix(b.rows(), 0);
        Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU);
        int r = rank(svd.singularValues());
        return svd.matrixU().leftCols(r);
    }
};

} // namespace

TransversalityReport tangent_report(const TreeProblem& problem, const GradientTree& g, double rank_tol)
{
    problem.validate();
    const auto& t = problem.tree;
    const auto& m = problem.manifold;
    const int n = m.dim;
    const int nh = static_cast<int>(t.half_edges().size());
    const int ambient = n * nh;
    RankCounter rc{rank_tol};

    // Vertex diagonals.
    Matrix bv = Matrix::Zero(ambient, n * t.vertex_count());
    for (int h = 0; h < nh; ++h) {
        int v = t.half_edge(h).source;
        bv.block(h * n, v * n, n, n) = Matrix::Identity(n, n);
    }
    if (t.floer_mode()) {
        Vector grad = problem.pair_function(0, 1).grad(g.vertex_positions[0]);
        Eigen::JacobiSVD<Matrix> svd(grad.transpose(), Eigen::ComputeFullV);
        Matrix null = svd.matrixV().rightCols(n - 1);
        bv = bv * null;
    }
    Matrix qv = rc.range(bv);

    // Edge tangent spaces, each supported on its own half-edge blocks.
    std::vector<Matrix> pieces;
    int dim_te = 0;
    for (int i = 0; i < t.internal_edge_count(); ++i) {
        const int id = t.internal_edge_id(i);
        const Edge& e = t.edge(id);
        const int a = t.half_edge(e.half_edge).source;
        const ScalarFunction f = problem.edge_function(id);
        FlowJacobian fj = flow_with_jacobian(f, m, g.vertex_positions[static_cast<std::size_t>(a)],
                                             g.lengths[static_cast<std::size_t>(i)]);
        Matrix local = Matrix::Zero(2 * n, n + 1);
        local.topLeftCorner(n, n) = Matrix::Identity(n, n);
        local.bottomLeftCorner(n, n) = fj.jacobian;
        local.bottomRightCorner(n, 1) = f.grad(fj.point);
        Matrix q = rc.range(local);
        Matrix block = Matrix::Zero(ambient, q.cols());
        block.middleRows(e.half_edge * n, n) = q.topRows(n);
        block.middleRows(e.partner * n, n) = q.bottomRows(n);
        pieces.push_back(block);
        dim_te += static_cast<int>(q.cols());
    }
    for (int k = 0; k < t.leaves(); ++k) {
        const int h = t.leaf_half_edge(k);
        const int a = t.half_edge(h).source;
        const auto& cp = problem.external_points[static_cast<std::size_t>(k)];
        Matrix kernel;
        if (cp.morse_index == 0) {
            kernel = Matrix::Identity(n, n);
        } else {
            DefectJacobian dj = defect_with_jacobian(problem.edge_function(t.external_edge_id(k)), m, cp,
                                                     g.vertex_positions[static_cast<std::size_t>(a)],
                                                     problem.t_back(k));
            Eigen::JacobiSVD<Matrix> svd(dj.jacobian, Eigen::ComputeFullV);
            int r = rc.rank(svd.singularValues());
            kernel = svd.matrixV().rightCols(n - r);
        }
        Matrix block = Matrix::Zero(ambient, kernel.cols());
        block.middleRows(h * n, n) = kernel;
        pieces.push_back(block);
        dim_te += static_cast<int>(kernel.cols());
    }

    Matrix all(ambient, qv.cols() + dim_te);
    all.leftCols(qv.cols()) = qv;
    int col = static_cast<int>(qv.cols());
    for (const auto& p : pieces) {
        all.middleCols(col, p.cols()) = p;
        col += static_cast<int>(p.cols());
    }
    TransversalityReport rep;
    rep.dim_ambient = ambient;
    rep.dim_TV = static_cast<int>(qv.cols());
    rep.dim_TE = dim_te;
    if (all.cols() > 0) {
        Eigen::JacobiSVD<Matrix> svd(all);
        rep.rank_sum = rc.rank(svd.singularValues());
    }
    rep.transversal = rep.rank_sum == ambient;
    rep.dim_moduli = rep.dim_TV + rep.dim_TE - rep.rank_sum;
    rep.marginal = rc.marginal;
    rep.smallest_accepted_singular_value = std::isfinite(rc.min_accepted) ? rc.min_accepted : 0.0;
    rep.largest_rejected_singular_value = rc.max_rejected;
    return rep;
}

// ---------------------------------------------------------------- brute force

namespace {

struct CellValue
{
    Vector r;
    double guard = 0.0;  // largest backward-flow distance to an external point
};

class BruteForce
{
public:
    BruteForce(const TreeProblem& p, double trust) : p_(p), sys_(p, {}), trust_(trust) {}

    CellValue at(const Vector& x) const
    {
        GradientTree g;
        g.vertex_positions = {p_.manifold.wrap(x)};
        CellValue cv;
        std::vector<Vector> disp;
        try {
            sys_.eval(g, 1.0, cv.r, nullptr, &disp);
        } catch (const DivergenceError&) {
            cv.r = Vector::Constant(sys_.rows(), NAN);
            cv.guard = INFINITY;
            return cv;
        }
        for (const auto& d : disp)
            cv.guard = std::max(cv.guard, d.norm());
        return cv;
    }

    /// Sign-change test per residual component. Wrap-around jumps of the
    /// stable coordinates also pass it; those are removed at the leaves,
    /// where the residual stays O(1) and the backward flow ends far from p_e.
    bool admissible(const std::vector<CellValue>& corners) const
    {
        for (int i = 0; i < sys_.rows(); ++i) {
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& c : corners) {
                if (!std::isfinite(c.r[i]))
                    return false;
                lo = std::min(lo, c.r[i]);
                hi = std::max(hi, c.r[i]);
            }
            if (lo > 0.0 || hi < 0.0)
                return false;
        }
        return true;
    }

    void refine(const Vector& lo, double size, std::vector<Vector>& hits) const
    {
        const int n = static_cast<int>(lo.size());
        std::vector<CellValue> corners;
        for (int c = 0; c < (1 << n); ++c) {
            Vector x = lo;
            for (int i = 0; i < n; ++i)
                if (c >> i & 1)
                    x[i] += size;
            corners.push_back(at(x));
        }
        if (!admissible(corners))
            return;
        if (size <= 1e-11) {
            Vector centre = lo + Vector::Constant(n, 0.5 * size);
            CellValue cv = at(centre);
            if (cv.r.allFinite() && cv.r.norm() <= 1e-5 && cv.guard <= trust_)
                hits.push_back(p_.manifold.wrap(centre));
            return;
        }
        for (int c = 0; c < (1 << n); ++c) {
            Vector child = lo;
            for (int i = 0; i < n; ++i)
                if (c >> i & 1)
                    child[i] += 0.5 * size;
            refine(child, 0.5 * size, hits);
        }
    }

    int rows() const { return sys_.rows(); }

private:
    const TreeProblem& p_;
    TreeSystem sys_;
    double trust_;
};

} // namespace

int brute_force_count(const TreeProblem& problem, int resolution, double trust_radius)
{
    problem.validate();
    const auto& t = problem.tree;
    const int n = problem.manifold.dim;
    if (t.internal_edge_count() != 0)
        throw Error("moduli", "brute-force counting needs a tree without internal edges");
    if (n * t.vertex_count() > 3)
        throw Error("moduli", "brute-force counting is limited to 3 scan dimensions");
    if (resolution < 1)
        throw Error("moduli", "brute-force resolution must be positive");
    BruteForce bf(problem, trust_radius);
    if (bf.rows() != n)
        throw Error("moduli", "brute-force counting needs a square residual system");

    const double lo = problem.manifold.torus() ? 0.0 : -2.0;
    const double span = problem.manifold.torus() ? 1.0 : 4.0;
    const double size = span / resolution;
    long cells = 1;
    for (int i = 0; i < n; ++i)
        cells *= resolution;
    std::vector<std::vector<Vector>> per_cell(static_cast<std::size_t>(cells));
    detail::parallel_for(per_cell.size(), [&](std::size_t c) {
        Vector corner(n);
        long rem = static_cast<long>(c);
        for (int i = 0; i < n; ++i) {
            corner[i] = lo + size * static_cast<double>(rem % resolution);
            rem /= resolution;
        }
        bf.refine(corner, size, per_cell[c]);
    });

    std::vector<Vector> clusters;
    for (const auto& hits : per_cell)
        for (const auto& x : hits)
            if (std::none_of(clusters.begin(), clusters.end(),
                             [&](const Vector& y) { return problem.manifold.distance(x, y) < 1e-6; }))
                clusters.push_back(x);
    return static_cast<int>(clusters.size());
}

} // namespace morsedisk

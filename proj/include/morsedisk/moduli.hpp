#pragma once

#include "morsedisk/expr.hpp"
#include "morsedisk/geometry.hpp"
#include "morsedisk/tree.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace morsedisk {

/// Gradient-tree problem on a ribbon tree.
///
/// Functions are attached to unordered boundary pairs {i, j}, stored under
/// the key (i, j) with i < j. A half-edge whose (left, right) boundary pair is
/// (a, b) carries F_ab when a < b and -F_ba otherwise, so reversing an edge
/// negates its function.
///
/// External edge k flows from its critical point toward the vertex. Its
/// "inward" function is the one carried by the reversed leaf half-edge, and
/// external_points[k] is a critical point of that inward function.
///
/// Floer trees (two leaves, one 2-valent vertex) additionally fix the
/// vertex on the level set F_01 = (F_01(p_0) + F_01(p_1)) / 2 to remove the
/// translation of the flow line.
struct TreeProblem
{
    RibbonTree tree;
    ModelManifold manifold;
    std::map<std::pair<int, int>, ScalarFunction> functions;
    std::vector<CriticalPoint> external_points;  // by leaf label
    double epsilon = 0.1;

    /// Throws Error("moduli") if a boundary pair lacks a function, a function
    /// has the wrong dimension or periodicity, or a critical point is missing.
    void validate() const;

    const ScalarFunction& pair_function(int i, int j) const;
    ScalarFunction half_edge_function(int h) const;
    /// Internal edges: along the reference half-edge. External: inward.
    ScalarFunction edge_function(int edge) const;
    /// Backward time for the external edge with this leaf label.
    double t_back(int label) const;
    /// Morse index of the inward function at external_points[label]; the
    /// number of residual equations the edge contributes.
    int stable_dim(int label) const { return external_points.at(static_cast<std::size_t>(label)).morse_index; }
    double slice_level() const;
};

/// Picks a critical point of an inward function: the one nearest `near`
/// (restricted to `index` if given), or the unique one of Morse index
/// `index`. Morse index n is the maximum, 0 the minimum.
struct PointSelector
{
    std::optional<Vector> near;
    std::optional<int> index;
};

CriticalPoint select_critical_point(const ScalarFunction& inward, const ModelManifold& m,
                                    const PointSelector& selector, int resolution = 16);

/// Builds and validates a problem, locating external points by selector
/// (one per leaf label, applied to that edge's inward function).
TreeProblem make_problem(RibbonTree tree, ModelManifold manifold,
                         std::map<std::pair<int, int>, ScalarFunction> functions,
                         const std::vector<PointSelector>& selectors, int resolution = 16);

/// A solved point of the gradient-tree moduli space. An internal edge runs
/// from source(half_edge) to source(partner) in time lengths[ordinal];
/// external edge k runs from its critical point (time -infinity) to its
/// vertex (time 0).
struct GradientTree
{
    std::vector<Vector> vertex_positions;
    std::vector<double> lengths;  // per internal ordinal
    double residual_norm = 0.0;
};

struct SolveOptions
{
    int seed_resolution = 8;
    /// Above this many grid seeds a Halton sequence of this length is used.
    int max_seeds = 4096;
    /// Search box [-w, w]^n on R^n.
    double search_half_width = 2.0;
    /// Initial internal lengths; empty means 1. An exact 0 pins that edge to
    /// length zero (the codimension-one stratum).
    std::vector<double> metric_guess;
    double newton_tol = 1e-10;
    int max_iterations = 50;
    /// Number of stages over which the backward time is ramped to t_back.
    int continuation_stages = 8;
    double dedup_distance = 1e-5;
    /// A solution's backward flow must end this close to p_e.
    double trust_radius = 0.1;
    /// Newton never steps to internal lengths beyond this.
    double max_length = 100.0;
};

/// Point of M^{H(T)}: the block of half-edge h is the position of source(h).
Vector half_edge_embedding(const TreeProblem& problem, const GradientTree& g);

/// All distinct Newton solutions from the seed set, sorted by coordinates.
/// Seeds that fail to converge are discarded silently.
std::vector<GradientTree> solve(const TreeProblem& problem, const SolveOptions& options = {});

/// Residual system at full backward time; the vector Newton drives to zero.
Vector tree_residual(const TreeProblem& problem, const GradientTree& g);

/// Trajectory of an edge sampled at the given times: [0, L] for internal
/// edges, [-T, 0] (ascending, nonpositive) for external ones. Points are
/// returned as a continuous lift.
std::vector<Vector> edge_trajectory(const TreeProblem& problem, const GradientTree& g, int edge,
                                    const std::vector<double>& times);

struct TransversalityReport
{
    int dim_ambient = 0;
    int dim_TV = 0;
    int dim_TE = 0;
    int rank_sum = 0;
    bool transversal = false;
    int dim_moduli = 0;
    bool marginal = false;
    double smallest_accepted_singular_value = 0.0;
    double largest_rejected_singular_value = 0.0;

    int complement_dim() const { return dim_ambient - rank_sum; }
};

/// Ranks use singular values against `rank_tol` on orthonormalized bases;
/// values in [rank_tol / 100, rank_tol] set `marginal`.
TransversalityReport tangent_report(const TreeProblem& problem, const GradientTree& g,
                                    double rank_tol = 1e-7);

/// Grid-and-bisection count of solutions, independent of Newton. Only for
/// trees without internal edges whose residual system is square with
/// n |V| <= 3. Throws Error("moduli") otherwise.
int brute_force_count(const TreeProblem& problem, int resolution, double trust_radius = 0.25);

} // namespace morsedisk

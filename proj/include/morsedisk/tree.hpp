#pragma once

#include "morsedisk/common.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace morsedisk {

/// A half-edge starts at `source`. Internal half-edges have a `partner`
/// (the opposite half of the same edge); external ones carry the leaf
/// `label` instead.
struct HalfEdge
{
    int source = -1;
    int partner = -1;
    int label = -1;

    bool external() const noexcept { return partner < 0; }
    friend bool operator==(const HalfEdge&, const HalfEdge&) = default;
};

/// Undirected edge. `half_edge` fixes the reference orientation: the only
/// half-edge for external edges (pointing away from the vertex, toward the
/// leaf) and the lower-numbered half for internal edges.
struct Edge
{
    int half_edge = -1;
    int partner = -1;
    int label = -1;
    bool external() const noexcept { return partner < 0; }
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Tree with a cyclic order of half-edges at each vertex. Leaves are
/// labelled 0..d-1 counter-clockwise along the boundary; boundary component
/// k is the arc between leaf k and leaf k+1 (mod d).
///
/// Edge ids: external edges first, by label; then internal edges ordered by
/// their lower half-edge id. Internal edge ordinal i is edge id d + i.
class RibbonTree
{
public:
    RibbonTree() = default;

    /// Validates every invariant; throws Error("tree", ...) on violation.
    RibbonTree(int vertex_count, std::vector<HalfEdge> half_edges,
               std::vector<std::vector<int>> cyclic_order, bool floer_mode = false);

    /// Builds the tree described by a bracket encoding such as "((1,2),3)".
    /// Leaf 0 is the implicit root; "(1)" is the two-leaf Floer tree.
    static RibbonTree from_encoding(const std::string& encoding);

    int leaves() const noexcept { return leaves_; }
    int vertex_count() const noexcept { return vertex_count_; }
    bool floer_mode() const noexcept { return floer_mode_; }

    const std::vector<HalfEdge>& half_edges() const noexcept { return half_edges_; }
    const HalfEdge& half_edge(int h) const { return half_edges_.at(static_cast<std::size_t>(h)); }
    const std::vector<int>& cyclic_order(int v) const { return order_.at(static_cast<std::size_t>(v)); }
    int valence(int v) const { return static_cast<int>(cyclic_order(v).size()); }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Edge& edge(int e) const;
    int internal_edge_count() const noexcept { return static_cast<int>(edges_.size()) - leaves_; }
    int internal_edge_id(int ordinal) const { return leaves_ + ordinal; }
    int external_edge_id(int label) const { return label; }
    /// Half-edge of the external edge with the given leaf label.
    int leaf_half_edge(int label) const;

    int next(int h) const;
    int prev(int h) const;

    /// (left, right) boundary components of half-edge h, looking from its
    /// source along the edge.
    std::pair<int, int> boundary_pair_of_half_edge(int h) const;

    /// Canonical bracket encoding, read by walking the boundary from leaf 0.
    std::string encoding() const;

    friend bool operator==(const RibbonTree&, const RibbonTree&) = default;

private:
    void validate();
    std::string encode_below(int entry) const;
    int corner_component(int h) const;

    int vertex_count_ = 0;
    int leaves_ = 0;
    bool floer_mode_ = false;
    std::vector<HalfEdge> half_edges_;
    std::vector<std::vector<int>> order_;
    std::vector<int> position_;  // index of each half-edge in its vertex order
    std::vector<Edge> edges_;
};

/// Returns the canonical representative: vertices and half-edges renumbered
/// by a depth-first walk from leaf 0.
RibbonTree canonical(const RibbonTree& tree);

/// One representative per isomorphism class, sorted by encoding. d = 2 is
/// accepted only with floer_mode and yields the single two-leaf tree.
std::vector<RibbonTree> enumerate_ribbon_trees(int d, bool trivalent_only, bool floer_mode = false);

std::pair<int, int> boundary_pair(const RibbonTree& tree, int edge);

/// Ribbon tree plus a nonnegative length on every internal edge, indexed by
/// internal-edge ordinal. External edges are implicitly infinite.
struct MetricRibbonTree
{
    MetricRibbonTree() = default;
    MetricRibbonTree(RibbonTree t, std::vector<double> l);

    RibbonTree tree;
    std::vector<double> lengths;
};

/// Number of internal edges with length exactly zero.
int stratum_codim(const MetricRibbonTree& mt);

void write_tree(std::ostream& os, const MetricRibbonTree& mt);
MetricRibbonTree read_tree(std::istream& is);

} // namespace morsedisk

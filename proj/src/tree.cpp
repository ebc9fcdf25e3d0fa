#include "morsedisk/tree.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace morsedisk {

namespace {

[[noreturn]] void fail(const std::string& msg)
{
    throw Error("tree", msg);
}

constexpr int kMaxLeaves = 8;

} // namespace

RibbonTree::RibbonTree(int vertex_count, std::vector<HalfEdge> half_edges,
                       std::vector<std::vector<int>> cyclic_order, bool floer_mode)
    : vertex_count_(vertex_count),
      floer_mode_(floer_mode),
      half_edges_(std::move(half_edges)),
      order_(std::move(cyclic_order))
{
    validate();
}

void RibbonTree::validate()
{
    const int nh = static_cast<int>(half_edges_.size());
    if (vertex_count_ <= 0)
        fail("tree needs at least one vertex");
    if (static_cast<int>(order_.size()) != vertex_count_)
        fail("one cyclic order per vertex required");

    std::vector<int> seen_label;
    int internal_halves = 0;
    for (int h = 0; h < nh; ++h) {
        const HalfEdge& he = half_edges_[static_cast<std::size_t>(h)];
        if (he.source < 0 || he.source >= vertex_count_)
            fail("half-edge " + std::to_string(h) + " has an invalid source vertex");
        if (he.external()) {
            if (he.label < 0)
                fail("external half-edge " + std::to_string(h) + " needs a label");
            seen_label.push_back(he.label);
        } else {
            if (he.partner >= nh || he.partner == h)
                fail("half-edge " + std::to_string(h) + " has an invalid partner");
            const HalfEdge& p = half_edges_[static_cast<std::size_t>(he.partner)];
            if (p.partner != h)
                fail("partner of half-edge " + std::to_string(h) + " does not point back");
            if (he.label >= 0)
                fail("internal half-edge " + std::to_string(h) + " carries a label");
            ++internal_halves;
        }
    }
    leaves_ = static_cast<int>(seen_label.size());
    std::sort(seen_label.begin(), seen_label.end());
    for (int i = 0; i < leaves_; ++i)
        if (seen_label[static_cast<std::size_t>(i)] != i)
            fail("external labels must be exactly 0..d-1");

    if (floer_mode_) {
        if (leaves_ != 2 || vertex_count_ != 1)
            fail("floer_mode requires the single two-leaf tree");
    } else if (leaves_ < 3) {
        fail("ribbon trees need d >= 3 leaves");
    }

    position_.assign(static_cast<std::size_t>(nh), -1);
    for (int v = 0; v < vertex_count_; ++v) {
        const auto& ord = order_[static_cast<std::size_t>(v)];
        for (std::size_t i = 0; i < ord.size(); ++i) {
            int h = ord[i];
            if (h < 0 || h >= nh || half_edges_[static_cast<std::size_t>(h)].source != v)
                fail("cyclic order at vertex " + std::to_string(v) + " lists a foreign half-edge");
            if (position_[static_cast<std::size_t>(h)] >= 0)
                fail("half-edge " + std::to_string(h) + " appears twice in cyclic orders");
            position_[static_cast<std::size_t>(h)] = static_cast<int>(i);
        }
        int min_valence = floer_mode_ ? 2 : 3;
        if (static_cast<int>(ord.size()) < min_valence)
            fail("vertex " + std::to_string(v) + " has valence " + std::to_string(ord.size())
                 + " < " + std::to_string(min_valence));
    }
    for (int h = 0; h < nh; ++h)
        if (position_[static_cast<std::size_t>(h)] < 0)
            fail("half-edge " + std::to_string(h) + " missing from cyclic orders");

    // Tree: |E_in| = |V| - 1 and connected.
    if (internal_halves / 2 != vertex_count_ - 1)
        fail("graph is not a tree (|E_in| != |V| - 1)");
    std::vector<int> parent(static_cast<std::size_t>(vertex_count_));
    for (int v = 0; v < vertex_count_; ++v)
        parent[static_cast<std::size_t>(v)] = v;
    std::function<int(int)> find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v)
            v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        return v;
    };
    for (const auto& he : half_edges_)
        if (!he.external())
            parent[static_cast<std::size_t>(find(he.source))] = find(half_edges_[static_cast<std::size_t>(he.partner)].source);
    for (int v = 1; v < vertex_count_; ++v)
        if (find(v) != find(0))
            fail("graph is not connected");

    edges_.clear();
    edges_.resize(static_cast<std::size_t>(leaves_));
    for (int h = 0; h < nh; ++h) {
        const HalfEdge& he = half_edges_[static_cast<std::size_t>(h)];
        if (he.external())
            edges_[static_cast<std::size_t>(he.label)] = Edge{h, -1, he.label};
    }
    for (int h = 0; h < nh; ++h) {
        const HalfEdge& he = half_edges_[static_cast<std::size_t>(h)];
        if (!he.external() && h < he.partner)
            edges_.push_back(Edge{h, he.partner, -1});
    }

    // Leaves must be met in label order when walking the boundary.
    std::string enc = encoding();
    std::vector<int> labels;
    int cur = -1;
    for (char c : enc) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            cur = (cur < 0 ? 0 : cur * 10) + (c - '0');
        } else if (cur >= 0) {
            labels.push_back(cur);
            cur = -1;
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != static_cast<int>(i) + 1)
            fail("leaf labels are not in boundary cyclic order");
}

const Edge& RibbonTree::edge(int e) const
{
    if (e < 0 || e >= static_cast<int>(edges_.size()))
        fail("invalid edge id " + std::to_string(e));
    return edges_[static_cast<std::size_t>(e)];
}

int RibbonTree::leaf_half_edge(int label) const
{
    return edge(external_edge_id(label)).half_edge;
}

int RibbonTree::next(int h) const
{
    const auto& ord = order_.at(static_cast<std::size_t>(half_edge(h).source));
    return ord[(static_cast<std::size_t>(position_[static_cast<std::size_t>(h)]) + 1) % ord.size()];
}

int RibbonTree::prev(int h) const
{
    const auto& ord = order_.at(static_cast<std::size_t>(half_edge(h).source));
    std::size_t i = static_cast<std::size_t>(position_[static_cast<std::size_t>(h)]);
    return ord[(i + ord.size() - 1) % ord.size()];
}

// Boundary component of the corner between h and next(h): walk backwards
// along the boundary until the corner sits next to a leaf.
int RibbonTree::corner_component(int h) const
{
    while (!half_edge(h).external())
        h = prev(half_edge(h).partner);
    return half_edge(h).label;
}

std::pair<int, int> RibbonTree::boundary_pair_of_half_edge(int h) const
{
    if (h < 0 || h >= static_cast<int>(half_edges_.size()))
        fail("invalid half-edge id " + std::to_string(h));
    return {corner_component(h), corner_component(prev(h))};
}

std::string RibbonTree::encode_below(int entry) const
{
    std::string out = "(";
    bool first = true;
    for (int h = next(entry); h != entry; h = next(h)) {
        if (!first)
            out += ',';
        first = false;
        const HalfEdge& he = half_edge(h);
        if (he.external())
            out += std::to_string(he.label);
        else
            out += encode_below(he.partner);
    }
    return out + ")";
}

std::string RibbonTree::encoding() const
{
    int root = -1;
    for (int h = 0; h < static_cast<int>(half_edges_.size()); ++h)
        if (half_edges_[static_cast<std::size_t>(h)].external() && half_edges_[static_cast<std::size_t>(h)].label == 0)
            root = h;
    return encode_below(root);
}

RibbonTree RibbonTree::from_encoding(const std::string& enc)
{
    std::vector<HalfEdge> hes;
    std::vector<std::vector<int>> order;
    std::size_t pos = 0;

    auto skip = [&] {
        while (pos < enc.size() && std::isspace(static_cast<unsigned char>(enc[pos])))
            ++pos;
    };
    // Parses "(...)" for a vertex entered through half-edge `entry`.
    std::function<void(int)> parse_vertex = [&](int entry) {
        int v = hes[static_cast<std::size_t>(entry)].source;
        skip();
        if (pos >= enc.size() || enc[pos] != '(')
            fail("tree encoding: expected '(' at offset " + std::to_string(pos));
        ++pos;
        for (;;) {
            skip();
            if (pos < enc.size() && enc[pos] == '(') {
                int h = static_cast<int>(hes.size());
                int w = static_cast<int>(order.size());
                hes.push_back(HalfEdge{v, h + 1, -1});
                hes.push_back(HalfEdge{w, h, -1});
                order[static_cast<std::size_t>(v)].push_back(h);
                order.push_back({h + 1});
                parse_vertex(h + 1);
            } else if (pos < enc.size() && std::isdigit(static_cast<unsigned char>(enc[pos]))) {
                int label = 0;
                while (pos < enc.size() && std::isdigit(static_cast<unsigned char>(enc[pos])))
                    label = label * 10 + (enc[pos++] - '0');
                int h = static_cast<int>(hes.size());
                hes.push_back(HalfEdge{v, -1, label});
                order[static_cast<std::size_t>(v)].push_back(h);
            } else {
                fail("tree encoding: expected '(' or a leaf label at offset " + std::to_string(pos));
            }
            skip();
            if (pos < enc.size() && enc[pos] == ',') {
                ++pos;
                continue;
            }
            if (pos < enc.size() && enc[pos] == ')') {
                ++pos;
                return;
            }
            fail("tree encoding: expected ',' or ')' at offset " + std::to_string(pos));
        }
    };

    hes.push_back(HalfEdge{0, -1, 0});
    order.push_back({0});
    parse_vertex(0);
    skip();
    if (pos != enc.size())
        fail("tree encoding: trailing characters at offset " + std::to_string(pos));
    bool floer = order.size() == 1 && hes.size() == 2;
    const int nv = static_cast<int>(order.size());
    return RibbonTree(nv, std::move(hes), std::move(order), floer);
}

RibbonTree canonical(const RibbonTree& tree)
{
    return RibbonTree::from_encoding(tree.encoding());
}

std::vector<RibbonTree> enumerate_ribbon_trees(int d, bool trivalent_only, bool floer_mode)
{
    if (floer_mode) {
        if (d != 2)
            fail("floer_mode enumeration requires d = 2");
        return {RibbonTree::from_encoding("(1)")};
    }
    if (d < 3)
        fail("enumeration requires d >= 3 (got " + std::to_string(d) + ")");
    if (d > kMaxLeaves)
        fail("enumeration supports at most " + std::to_string(kMaxLeaves) + " leaves");

    // All plane subtrees over consecutive leaves [lo, hi]; internal nodes
    // have at least two children (exactly two when trivalent_only).
    std::map<std::pair<int, int>, std::vector<std::string>> memo;
    std::function<const std::vector<std::string>&(int, int)> subtrees;
    std::function<std::vector<std::string>(int, int)> nodes;

    // Sequences of one or more consecutive subtrees covering [lo, hi].
    std::function<std::vector<std::vector<std::string>>(int, int)> sequences = [&](int lo, int hi) {
        std::vector<std::vector<std::string>> out;
        for (int mid = lo; mid <= hi; ++mid)
            for (const auto& first : subtrees(lo, mid)) {
                if (mid == hi) {
                    out.push_back({first});
                    continue;
                }
                for (auto rest : sequences(mid + 1, hi)) {
                    rest.insert(rest.begin(), first);
                    out.push_back(std::move(rest));
                }
            }
        return out;
    };
    // A vertex over [lo, hi] has at least two children (exactly two when
    // trivalent_only).
    nodes = [&](int lo, int hi) {
        std::vector<std::string> out;
        for (int mid = lo; mid < hi; ++mid)
            for (const auto& first : subtrees(lo, mid))
                for (const auto& rest : sequences(mid + 1, hi)) {
                    if (trivalent_only && rest.size() != 1)
                        continue;
                    std::string s = "(" + first;
                    for (const auto& r : rest)
                        s += "," + r;
                    out.push_back(s + ")");
                }
        return out;
    };
    subtrees = [&](int lo, int hi) -> const std::vector<std::string>& {
        auto key = std::make_pair(lo, hi);
        auto it = memo.find(key);
        if (it != memo.end())
            return it->second;
        std::vector<std::string> out;
        if (lo == hi)
            out.push_back(std::to_string(lo));
        else
            out = nodes(lo, hi);
        return memo.emplace(key, std::move(out)).first->second;
    };

    std::vector<std::string> encodings = nodes(1, d - 1);
    std::sort(encodings.begin(), encodings.end());
    std::vector<RibbonTree> trees;
    trees.reserve(encodings.size());
    for (const auto& e : encodings)
        trees.push_back(RibbonTree::from_encoding(e));
    return trees;
}

std::pair<int, int> boundary_pair(const RibbonTree& tree, int edge)
{
    return tree.boundary_pair_of_half_edge(tree.edge(edge).half_edge);
}

MetricRibbonTree::MetricRibbonTree(RibbonTree t, std::vector<double> l)
    : tree(std::move(t)), lengths(std::move(l))
{
    if (static_cast<int>(lengths.size()) != tree.internal_edge_count())
        fail("expected " + std::to_string(tree.internal_edge_count()) + " internal lengths, got "
             + std::to_string(lengths.size()));
    for (double x : lengths)
        if (!(x >= 0.0) || !std::isfinite(x))
            fail("internal edge lengths must be finite and nonnegative");
}

int stratum_codim(const MetricRibbonTree& mt)
{
    int codim = 0;
    for (double l : mt.lengths) {
        if (l < 0.0)
            fail("negative edge length");
        if (l == 0.0)
            ++codim;
    }
    return codim;
}

void write_tree(std::ostream& os, const MetricRibbonTree& mt)
{
    const RibbonTree& t = mt.tree;
    os << "ribbon_tree 1\n";
    os << "leaves " << t.leaves() << "\n";
    os << "floer " << (t.floer_mode() ? 1 : 0) << "\n";
    os << "vertices " << t.vertex_count() << "\n";
    os << "half_edges " << t.half_edges().size() << "\n";
    for (std::size_t h = 0; h < t.half_edges().size(); ++h) {
        const HalfEdge& he = t.half_edges()[h];
        os << h << ' ' << he.source << ' ';
        if (he.external())
            os << "EXT " << he.label << "\n";
        else
            os << "INT " << he.partner << "\n";
    }
    for (int v = 0; v < t.vertex_count(); ++v) {
        os << "order " << v;
        for (int h : t.cyclic_order(v))
            os << ' ' << h;
        os << "\n";
    }
    os << "lengths " << mt.lengths.size();
    os << std::setprecision(17);
    for (double l : mt.lengths)
        os << ' ' << l;
    os << "\nend\n";
}

MetricRibbonTree read_tree(std::istream& is)
{
    auto expect = [&](const std::string& key) {
        std::string tok;
        if (!(is >> tok) || tok != key)
            fail("tree record: expected '" + key + "', got '" + tok + "'");
    };
    int version = 0, leaves = 0, floer = 0, nv = 0;
    std::size_t nh = 0;
    expect("ribbon_tree");
    is >> version;
    if (version != 1)
        fail("tree record: unsupported version " + std::to_string(version));
    expect("leaves");
    is >> leaves;
    expect("floer");
    is >> floer;
    expect("vertices");
    is >> nv;
    expect("half_edges");
    is >> nh;
    if (!is || nv <= 0 || nh > 1000)
        fail("tree record: malformed header");
    std::vector<HalfEdge> hes(nh);
    for (std::size_t i = 0; i < nh; ++i) {
        std::size_t id = 0;
        std::string kind;
        int src = 0, val = 0;
        is >> id >> src >> kind >> val;
        if (!is || id != i || (kind != "EXT" && kind != "INT"))
            fail("tree record: malformed half-edge line " + std::to_string(i));
        hes[i].source = src;
        if (kind == "EXT")
            hes[i].label = val;
        else
            hes[i].partner = val;
    }
    std::vector<std::vector<int>> order(static_cast<std::size_t>(nv));
    std::string line;
    std::getline(is, line);
    for (int v = 0; v < nv; ++v) {
        if (!std::getline(is, line))
            fail("tree record: missing order line");
        std::istringstream ls(line);
        std::string key;
        int id = -1;
        ls >> key >> id;
        if (key != "order" || id != v)
            fail("tree record: malformed order line for vertex " + std::to_string(v));
        int h = 0;
        while (ls >> h)
            order[static_cast<std::size_t>(v)].push_back(h);
    }
    expect("lengths");
    std::size_t nl = 0;
    is >> nl;
    std::vector<double> lengths(nl);
    for (auto& l : lengths)
        is >> l;
    expect("end");
    if (!is)
        fail("tree record: truncated");
    RibbonTree t(nv, std::move(hes), std::move(order), floer != 0);
    if (t.leaves() != leaves)
        fail("tree record: leaf count mismatch");
    return MetricRibbonTree(std::move(t), std::move(lengths));
}

} // namespace morsedisk

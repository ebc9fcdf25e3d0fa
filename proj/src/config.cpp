#include "morsedisk/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace morsedisk {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& known)
{
    for (const auto& [key, value] : obj.items())
        if (!known.count(key))
            throw ConfigError(join(path, key), "unknown field");
}

const json& require_object(const json& j, const std::string& path)
{
    if (!j.is_object())
        throw ConfigError(path, "expected an object");
    return j;
}

double positive(const json& j, const std::string& path)
{
    if (!j.is_number())
        throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!(v > 0.0))
        throw ConfigError(path, "must be positive");
    return v;
}

int integer(const json& j, const std::string& path, int lo)
{
    if (!j.is_number_integer())
        throw ConfigError(path, "expected an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > 1000000)
        throw ConfigError(path, "must be in [" + std::to_string(lo) + ", 1000000]");
    return static_cast<int>(v);
}

std::string text(const json& j, const std::string& path)
{
    if (!j.is_string())
        throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

std::pair<int, int> pair_key(const std::string& key, int d, const std::string& path)
{
    std::istringstream is(key);
    int i = -1, j = -1;
    char comma = 0;
    if (!(is >> i >> comma >> j) || comma != ',' || !is.eof())
        throw ConfigError(path, "expected a key of the form \"i,j\"");
    if (i < 0 || j >= d || i >= j)
        throw ConfigError(path, "need 0 <= i < j < " + std::to_string(d));
    return {i, j};
}

void read_tolerances(const json& j, Tolerances& t)
{
    require_object(j, "tolerances");
    reject_unknown(j, "tolerances", {"newton", "svd", "residual", "adjoint", "energy", "min_order"});
    auto get = [&](const char* key, double& out) {
        if (j.contains(key))
            out = positive(j[key], join("tolerances", key));
    };
    get("newton", t.newton);
    get("svd", t.svd);
    get("residual", t.residual);
    get("adjoint", t.adjoint);
    get("energy", t.energy);
    get("min_order", t.min_order);
}

void read_grids(const json& j, Grids& g)
{
    require_object(j, "grids");
    reject_unknown(j, "grids", {"m", "adjoint_m", "s_per_unit", "t_nodes", "radial_nodes", "angular_per_arc",
                                "seed_resolution", "critical_resolution"});
    auto get = [&](const char* key, int& out, int lo) {
        if (j.contains(key))
            out = integer(j[key], join("grids", key), lo);
    };
    get("m", g.m, 50);
    get("adjoint_m", g.adjoint_m, 100);
    get("s_per_unit", g.disk.s_per_unit, 10);
    get("t_nodes", g.disk.t_nodes, 5);
    get("radial_nodes", g.disk.radial_nodes, 5);
    get("angular_per_arc", g.disk.angular_per_arc, 4);
    get("seed_resolution", g.seed_resolution, 1);
    get("critical_resolution", g.critical_resolution, 2);
}

PointSelector read_selector(const json& j, const std::string& path, int dim)
{
    require_object(j, path);
    reject_unknown(j, path, {"near", "index"});
    PointSelector s;
    if (j.contains("near")) {
        const auto& a = j["near"];
        if (!a.is_array() || static_cast<int>(a.size()) != dim)
            throw ConfigError(join(path, "near"), "expected " + std::to_string(dim) + " coordinates");
        Vector x(dim);
        for (int i = 0; i < dim; ++i) {
            if (!a[static_cast<std::size_t>(i)].is_number())
                throw ConfigError(join(path, "near"), "expected numbers");
            x(i) = a[static_cast<std::size_t>(i)].get<double>();
        }
        s.near = x;
    }
    if (j.contains("index"))
        s.index = integer(j["index"], join(path, "index"), 0);
    if (s.index && *s.index > dim)
        throw ConfigError(join(path, "index"), "Morse index exceeds the dimension");
    if (!s.near && !s.index)
        throw ConfigError(path, "needs \"near\" or \"index\"");
    return s;
}

} // namespace

void RunConfig::scale_grids(int k)
{
    if (k < 1)
        throw ConfigError("grid_scale", "must be a positive integer");
    grids.m *= k;
    grids.adjoint_m *= k;
    grids.disk.s_per_unit *= k;
    grids.disk.t_nodes = (grids.disk.t_nodes - 1) * k + 1;
    grids.disk.radial_nodes = (grids.disk.radial_nodes - 1) * k + 1;
    grids.disk.angular_per_arc *= k;
}

RibbonTree RunConfig::tree() const
{
    try {
        return RibbonTree::from_encoding(tree_encoding);
    } catch (const Error& e) {
        throw ConfigError("tree", e.what());
    }
}

ScalarFunction RunConfig::function(const std::string& reference) const
{
    const bool neg = !reference.empty() && reference[0] == '-';
    const std::string name = neg ? reference.substr(1) : reference;
    auto it = functions.find(name);
    if (it == functions.end())
        throw ConfigError("functions", "no function named '" + name + "'");
    auto f = ScalarFunction::parse(it->second, manifold.dim, manifold.periodic_flags());
    return neg ? f.negated() : f;
}

TreeProblem RunConfig::problem() const
{
    std::map<std::pair<int, int>, ScalarFunction> fns;
    for (const auto& [key, ref] : pairs)
        fns.emplace(key, function(ref));
    auto p = make_problem(tree(), manifold, std::move(fns), external, grids.critical_resolution);
    p.epsilon = epsilon;
    return p;
}

SolveOptions RunConfig::solve_options() const
{
    SolveOptions o;
    o.seed_resolution = grids.seed_resolution;
    o.search_half_width = search_box;
    o.metric_guess = metric_guess;
    o.newton_tol = tolerances.newton;
    return o;
}

RunConfig parse_config(const json& doc)
{
    require_object(doc, "(root)");
    reject_unknown(doc, "", {"schema_version", "name", "manifold", "tree", "functions", "pairs", "external",
                             "metric_guess", "epsilon", "epsilons", "epsilon_max", "tolerances", "grids",
                             "search_box", "seed", "output", "sample_solutions", "perturbations", "homology",
                             "expect"});
    if (doc.contains("schema_version") && doc["schema_version"] != 1)
        throw ConfigError("schema_version", "only version 1 is supported");

    RunConfig c;
    if (doc.contains("name"))
        c.name = text(doc["name"], "name");

    if (!doc.contains("manifold"))
        throw ConfigError("manifold", "missing");
    const auto& m = require_object(doc["manifold"], "manifold");
    reject_unknown(m, "manifold", {"dim", "kind"});
    if (!m.contains("dim"))
        throw ConfigError("manifold.dim", "missing");
    c.manifold.dim = integer(m["dim"], "manifold.dim", 1);
    const std::string kind = m.contains("kind") ? text(m["kind"], "manifold.kind") : "torus";
    if (kind == "torus")
        c.manifold.kind = ManifoldKind::FlatTorus;
    else if (kind == "euclidean")
        c.manifold.kind = ManifoldKind::Euclidean;
    else
        throw ConfigError("manifold.kind", "expected \"torus\" or \"euclidean\"");

    if (!doc.contains("tree"))
        throw ConfigError("tree", "missing");
    c.tree_encoding = text(doc["tree"], "tree");
    const RibbonTree tree = c.tree();
    const int d = tree.leaves();

    if (!doc.contains("functions"))
        throw ConfigError("functions", "missing");
    const auto& fns = require_object(doc["functions"], "functions");
    if (fns.empty())
        throw ConfigError("functions", "at least one function is required");
    for (const auto& [name, src] : fns.items()) {
        const std::string path = join("functions", name);
        c.functions[name] = text(src, path);
        try {
            ScalarFunction::parse(c.functions[name], c.manifold.dim, c.manifold.periodic_flags());
        } catch (const ParseError& e) {
            throw ConfigError(path, std::string(e.what()) + " (offset " + std::to_string(e.offset()) + ")");
        }
    }

    if (!doc.contains("pairs"))
        throw ConfigError("pairs", "missing");
    const auto& pairs = require_object(doc["pairs"], "pairs");
    for (const auto& [key, ref] : pairs.items()) {
        const std::string path = join("pairs", key);
        std::string r = text(ref, path);
        const std::string name = !r.empty() && r[0] == '-' ? r.substr(1) : r;
        if (!c.functions.count(name))
            throw ConfigError(path, "no function named '" + name + "'");
        c.pairs[pair_key(key, d, path)] = r;
    }
    for (int e = 0; e < static_cast<int>(tree.edges().size()); ++e) {
        auto [a, b] = boundary_pair(tree, e);
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        if (!c.pairs.count(key))
            throw ConfigError("pairs", "missing boundary pair " + std::to_string(key.first) + "," +
                                           std::to_string(key.second));
    }

    if (!doc.contains("external"))
        throw ConfigError("external", "missing");
    const auto& ext = doc["external"];
    if (!ext.is_array() || static_cast<int>(ext.size()) != d)
        throw ConfigError("external", "expected " + std::to_string(d) + " selectors, one per leaf");
    for (int k = 0; k < d; ++k)
        c.external.push_back(read_selector(ext[static_cast<std::size_t>(k)], "external." + std::to_string(k),
                                           c.manifold.dim));

    if (doc.contains("metric_guess")) {
        const auto& g = doc["metric_guess"];
        if (!g.is_array() || static_cast<int>(g.size()) != tree.internal_edge_count())
            throw ConfigError("metric_guess",
                              "expected " + std::to_string(tree.internal_edge_count()) + " lengths");
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_number() || g[i].get<double>() < 0.0)
                throw ConfigError("metric_guess." + std::to_string(i), "expected a nonnegative number");
            c.metric_guess.push_back(g[i].get<double>());
        }
    }

    if (doc.contains("epsilon_max")) {
        c.epsilon_max = positive(doc["epsilon_max"], "epsilon_max");
        if (c.epsilon_max > kEpsilonMax)
            throw ConfigError("epsilon_max", "must not exceed 0.25");
    }
    if (doc.contains("epsilon"))
        c.epsilon = positive(doc["epsilon"], "epsilon");
    if (c.epsilon > c.epsilon_max)
        throw ConfigError("epsilon", "exceeds epsilon_max");
    if (doc.contains("epsilons")) {
        const auto& es = doc["epsilons"];
        if (!es.is_array() || es.empty())
            throw ConfigError("epsilons", "expected a nonempty array");
        c.epsilons.clear();
        for (std::size_t i = 0; i < es.size(); ++i) {
            const std::string path = "epsilons." + std::to_string(i);
            c.epsilons.push_back(positive(es[i], path));
            if (c.epsilons.back() > c.epsilon_max)
                throw ConfigError(path, "exceeds epsilon_max");
        }
    }

    if (doc.contains("tolerances"))
        read_tolerances(doc["tolerances"], c.tolerances);
    if (doc.contains("grids"))
        read_grids(doc["grids"], c.grids);
    if (doc.contains("search_box"))
        c.search_box = positive(doc["search_box"], "search_box");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned())
            throw ConfigError("seed", "expected a nonnegative integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("output"))
        c.output = text(doc["output"], "output");
    if (doc.contains("sample_solutions"))
        c.sample_solutions = integer(doc["sample_solutions"], "sample_solutions", 1);
    if (doc.contains("perturbations"))
        c.perturbations = integer(doc["perturbations"], "perturbations", 1);

    if (doc.contains("homology")) {
        const auto& h = require_object(doc["homology"], "homology");
        reject_unknown(h, "homology", {"function", "expected_betti"});
        if (!tree.floer_mode())
            throw ConfigError("homology", "needs the Floer tree \"(1)\"");
        if (!h.contains("function"))
            throw ConfigError("homology.function", "missing");
        c.homology_function = text(h["function"], "homology.function");
        if (!c.functions.count(*c.homology_function))
            throw ConfigError("homology.function", "no function named '" + *c.homology_function + "'");
        if (h.contains("expected_betti")) {
            const auto& b = h["expected_betti"];
            if (!b.is_array() || static_cast<int>(b.size()) != c.manifold.dim + 1)
                throw ConfigError("homology.expected_betti",
                                  "expected " + std::to_string(c.manifold.dim + 1) + " ranks");
            std::vector<int> betti;
            for (std::size_t i = 0; i < b.size(); ++i)
                betti.push_back(integer(b[i], "homology.expected_betti." + std::to_string(i), 0));
            c.expected_betti = betti;
        }
    }

    if (doc.contains("expect")) {
        const auto& x = require_object(doc["expect"], "expect");
        reject_unknown(x, "expect", {"solutions", "transversal"});
        if (x.contains("solutions"))
            c.expected_solutions = integer(x["solutions"], "expect.solutions", 0);
        if (x.contains("transversal")) {
            if (!x["transversal"].is_boolean())
                throw ConfigError("expect.transversal", "expected true or false");
            c.expected_transversal = x["transversal"].get<bool>();
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("(file)", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("(file)", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

} // namespace morsedisk

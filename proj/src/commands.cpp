#include "morsedisk/commands.hpp"

#include "morsedisk/homology.hpp"
#include "morsedisk/linearized.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace morsedisk {

namespace {

Report vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Report header(const char* command, const RunConfig* config)
{
    Report r;
    r["schema_version"] = kReportSchema;
    r["command"] = command;
    if (config) {
        r["config"] = config->name;
        r["seed"] = config->seed;
    }
    return r;
}

Report critical_json(const CriticalPoint& c, const ScalarFunction& f)
{
    Report j;
    j["location"] = vec(c.location);
    j["index"] = c.morse_index;
    j["value"] = f.eval(c.location);
    j["eigenvalues"] = vec(c.eigenvalues);
    return j;
}

Report external_points(const TreeProblem& p)
{
    Report pts = Report::array();
    for (int k = 0; k < p.tree.leaves(); ++k) {
        const auto& c = p.external_points[static_cast<std::size_t>(k)];
        Report j;
        j["leaf"] = k;
        j["location"] = vec(c.location);
        j["index"] = c.morse_index;
        j["t_back"] = p.t_back(k);
        pts.push_back(j);
    }
    return pts;
}

bool has_zero_length(const GradientTree& g)
{
    for (double l : g.lengths)
        if (l == 0.0)
            return true;
    return false;
}

int vertex_moduli_dim(const RibbonTree& tree)
{
    int k = 0;
    for (int v = 0; v < tree.vertex_count(); ++v)
        k += std::max(tree.valence(v) - 3, 0);
    return k;
}

std::vector<double> orders(const std::vector<double>& v)
{
    std::vector<double> o;
    for (std::size_t i = 1; i < v.size(); ++i)
        o.push_back(std::log2(v[i - 1] / v[i]));
    return o;
}

/// Final value within tol and every doubling at least min_order, except
/// where the coarser value is already at the roundoff floor.
bool ladder_ok(const std::vector<double>& v, double tol, double min_order, double floor = 1e-11)
{
    if (!(v.back() <= tol))
        return false;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i - 1] > floor && !(std::log2(v[i - 1] / v[i]) >= min_order))
            return false;
    return true;
}

Report ladder_json(const std::vector<int>& grid, const std::vector<double>& v)
{
    Report j;
    j["grid"] = grid;
    j["values"] = v;
    j["orders"] = orders(v);
    return j;
}

double max_strip_residual(const DiskMap& u)
{
    double r = 0.0;
    for (std::size_t e = 0; e < u.strips.size(); ++e)
        r = std::max(r, strip_residual(u, static_cast<int>(e)).max_norm);
    return r;
}

Section random_section(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.3, 1.0), phase(0.0, 6.283185307179586);
    Vector a0(n), a1(n), k(n), ph(n);
    for (int i = 0; i < n; ++i) {
        a0(i) = amp(rng);
        a1(i) = amp(rng);
        k(i) = freq(rng);
        ph(i) = phase(rng);
    }
    return [=](double t) {
        Vector x(n);
        for (int i = 0; i < n; ++i)
            x(i) = a0(i) + a1(i) * std::sin(k(i) * t + ph(i));
        return x;
    };
}

class Checks
{
public:
    void add(const std::string& name, bool pass, Report value)
    {
        Report c;
        c["name"] = name;
        c["pass"] = pass;
        c["value"] = std::move(value);
        list_.push_back(std::move(c));
        all_ &= pass;
    }
    Report list() const { return list_; }
    bool all() const { return all_; }

private:
    Report list_ = Report::array();
    bool all_ = true;
};

} // namespace

std::vector<int> sample_indices(int count, int k)
{
    std::vector<int> idx;
    if (count <= 0)
        return idx;
    if (count <= k || k <= 1) {
        for (int i = 0; i < std::min(count, std::max(k, 1)); ++i)
            idx.push_back(i);
        return idx;
    }
    for (int i = 0; i < k; ++i) {
        const int j = static_cast<int>(std::lround(static_cast<double>(i) * (count - 1) / (k - 1)));
        if (idx.empty() || idx.back() != j)
            idx.push_back(j);
    }
    return idx;
}

Report cmd_trees(int d, bool trivalent_only, bool floer_mode)
{
    auto trees = enumerate_ribbon_trees(d, trivalent_only, floer_mode);
    Report r = header("trees", nullptr);
    r["d"] = d;
    int trivalent = 0;
    Report list = Report::array();
    for (const auto& t : trees) {
        bool tri = true;
        for (int v = 0; v < t.vertex_count(); ++v)
            tri &= t.valence(v) == 3;
        trivalent += tri;
        Report j;
        j["encoding"] = t.encoding();
        j["vertices"] = t.vertex_count();
        j["internal_edges"] = t.internal_edge_count();
        j["trivalent"] = tri;
        list.push_back(j);
    }
    r["trivalent"] = trivalent;
    r["total"] = static_cast<int>(trees.size());
    r["trees"] = list;
    return r;
}

Report cmd_critical(const ScalarFunction& f, const ModelManifold& m, int resolution, double half_width)
{
    Report r = header("critical", nullptr);
    r["function"] = f.source();
    Report pts = Report::array();
    for (const auto& c : find_critical_points(f, m, resolution, half_width))
        pts.push_back(critical_json(c, f));
    r["points"] = pts;
    return r;
}

Report cmd_critical(const RunConfig& config)
{
    Report r = header("critical", &config);
    Report fns = Report::array();
    for (const auto& [name, src] : config.functions) {
        const auto f = config.function(name);
        Report j;
        j["name"] = name;
        j["expression"] = src;
        Report pts = Report::array();
        for (const auto& c : find_critical_points(f, config.manifold, config.grids.critical_resolution,
                                                  config.search_box))
            pts.push_back(critical_json(c, f));
        j["points"] = pts;
        fns.push_back(j);
    }
    r["functions"] = fns;
    return r;
}

Report cmd_solve(const RunConfig& config, const std::filesystem::path& out)
{
    const auto problem = config.problem();
    const auto sols = solve(problem, config.solve_options());
    Report r = header("solve", &config);
    r["tree"] = problem.tree.encoding();
    r["external_points"] = external_points(problem);
    r["count"] = static_cast<int>(sols.size());
    Report list = Report::array();
    if (!out.empty())
        std::filesystem::create_directories(out);
    for (std::size_t k = 0; k < sols.size(); ++k) {
        const auto& g = sols[k];
        Report j;
        Report vs = Report::array();
        for (const auto& v : g.vertex_positions)
            vs.push_back(vec(v));
        j["vertices"] = vs;
        j["lengths"] = g.lengths;
        j["residual_norm"] = g.residual_norm;
        list.push_back(j);
        if (out.empty())
            continue;
        for (int e = 0; e < static_cast<int>(problem.tree.edges().size()); ++e) {
            const bool ext = problem.tree.edge(e).external();
            const double a = ext ? -problem.t_back(problem.tree.edge(e).label) : 0.0;
            const double b = ext ? 0.0 : g.lengths[static_cast<std::size_t>(e - problem.tree.leaves())];
            std::vector<double> times;
            for (int i = 0; i <= 200; ++i)
                times.push_back(a + (b - a) * i / 200.0);
            std::ofstream os(out / ("solution_" + std::to_string(k) + "_edge_" + std::to_string(e) + ".csv"));
            write_trajectory_csv(os, times, edge_trajectory(problem, g, e, times));
        }
    }
    r["solutions"] = list;
    return r;
}

Report cmd_transversality(const RunConfig& config)
{
    const auto problem = config.problem();
    const auto sols = solve(problem, config.solve_options());
    Report r = header("transversality", &config);
    r["count"] = static_cast<int>(sols.size());
    Report list = Report::array();
    for (const auto& g : sols) {
        auto t = tangent_report(problem, g, config.tolerances.svd);
        Report j;
        j["dim_ambient"] = t.dim_ambient;
        j["dim_TV"] = t.dim_TV;
        j["dim_TE"] = t.dim_TE;
        j["rank_sum"] = t.rank_sum;
        j["complement_dim"] = t.complement_dim();
        j["transversal"] = t.transversal;
        j["dim_moduli"] = t.dim_moduli;
        j["marginal"] = t.marginal;
        j["smallest_accepted_singular_value"] = t.smallest_accepted_singular_value;
        j["largest_rejected_singular_value"] = t.largest_rejected_singular_value;
        list.push_back(j);
    }
    r["solutions"] = list;
    return r;
}

Report cmd_linearize(const RunConfig& config, const std::filesystem::path& out)
{
    const auto problem = config.problem();
    const auto sols = solve(problem, config.solve_options());
    Report r = header("linearize", &config);
    r["m"] = config.grids.m;
    r["expected_index"] = expected_index(problem);
    if (!out.empty())
        std::filesystem::create_directories(out);
    Report list = Report::array();
    for (int k : sample_indices(static_cast<int>(sols.size()), config.sample_solutions)) {
        const auto& g = sols[static_cast<std::size_t>(k)];
        Report j;
        j["solution"] = k;
        if (has_zero_length(g)) {
            j["skipped"] = "zero-length internal edge";
            list.push_back(j);
            continue;
        }
        auto op = assemble_D0(problem, g, config.grids.m);
        auto s = analyze(op, config.tolerances.svd);
        j["rows"] = op.rows();
        j["cols"] = op.cols();
        j["kernel"] = s.kernel;
        j["cokernel"] = s.cokernel;
        j["index"] = s.index;
        j["marginal"] = s.marginal;
        const Vector sv = operator_singular_values(op);
        j["smallest_singular_values"] = vec(sv.tail(std::min<Eigen::Index>(3, sv.size())));
        Report strips = Report::array();
        for (int i = 0; i < problem.tree.internal_edge_count(); ++i) {
            auto red = assemble_strip_reduced(problem, g, problem.tree.internal_edge_id(i), config.epsilon,
                                              config.grids.m);
            Report e;
            e["edge"] = red.edge;
            e["strip_length"] = red.strip_length;
            e["chi_tilde_integral"] = red.chi_tilde_integral;
            e["morse_candidate_residual"] =
                (red.matrix * reduced_morse_candidate(red, problem, Vector::Ones(red.n))).cwiseAbs().maxCoeff();
            e["length_candidate_residual"] =
                (red.matrix * reduced_length_candidate(red, problem)).cwiseAbs().maxCoeff();
            strips.push_back(e);
        }
        j["reduced_strips"] = strips;
        list.push_back(j);
        if (!out.empty()) {
            std::ofstream os(out / ("operator_" + std::to_string(k) + ".txt"));
            write_operator(os, op.matrix);
        }
    }
    r["solutions"] = list;
    return r;
}

Report cmd_build_disk(const RunConfig& config, int solution, const std::filesystem::path& out)
{
    const auto problem = config.problem();
    const auto sols = solve(problem, config.solve_options());
    if (solution < 0 || solution >= static_cast<int>(sols.size()))
        throw Error("disk", "solution " + std::to_string(solution) + " requested, " + std::to_string(sols.size()) +
                                " found");
    const auto u = build_solution(problem, sols[static_cast<std::size_t>(solution)], config.epsilon,
                                  Vector::Zero(vertex_moduli_dim(problem.tree)), config.grids.disk);
    export_disk(u, out);
    Report r = header("build-disk", &config);
    r["solution"] = solution;
    r["epsilon"] = config.epsilon;
    r["output"] = out.string();
    static const char* kinds[] = {"internal", "external", "neck"};
    Report strips = Report::array();
    for (const auto& st : u.strips) {
        Report j;
        j["edge"] = st.edge;
        j["kind"] = kinds[static_cast<int>(st.kind)];
        j["s0"] = st.s0;
        j["s1"] = st.s1;
        j["morse_length"] = st.morse_length;
        j["length_gap"] = st.length_gap;
        j["end_gap"] = st.end_gap;
        j["max_residual"] = strip_residual(u, st.edge).max_norm;
        double b = 0.0;
        for (double x : beta(st).beta)
            b = std::max(b, std::abs(x));
        j["max_beta"] = b;
        strips.push_back(j);
    }
    r["strips"] = strips;
    Report verts = Report::array();
    for (std::size_t v = 0; v < u.vertices.size(); ++v)
        verts.push_back(vertex_residual(u, static_cast<int>(v)));
    r["vertex_residuals"] = verts;
    r["energy_defect"] = energy_identity_check(u).defect;
    return r;
}

Report cmd_verify(const RunConfig& config)
{
    const auto& tol = config.tolerances;
    const auto problem = config.problem();
    const auto sols = solve(problem, config.solve_options());
    const int count = static_cast<int>(sols.size());
    const auto sample = sample_indices(count, config.sample_solutions);
    const int moduli = vertex_moduli_dim(problem.tree);
    const int m = config.grids.m;
    Checks checks;

    {
        Report v;
        v["count"] = count;
        if (config.expected_solutions)
            v["expected"] = *config.expected_solutions;
        checks.add("solutions", config.expected_solutions ? count == *config.expected_solutions : count > 0, v);
    }

    try {
        const int brute = brute_force_count(problem, config.grids.critical_resolution);
        Report v;
        v["solve"] = count;
        v["brute_force"] = brute;
        checks.add("brute_force_count", brute == count, v);
    } catch (const Error&) {
        // tree not eligible for the grid oracle
    }

    std::vector<TransversalityReport> reports;
    for (const auto& g : sols)
        reports.push_back(tangent_report(problem, g, tol.svd));
    {
        int transversal = 0, marginal = 0;
        for (const auto& t : reports) {
            transversal += t.transversal;
            marginal += t.marginal;
        }
        Report v;
        v["transversal"] = transversal;
        v["marginal"] = marginal;
        bool ok = marginal == 0;
        if (config.expected_transversal) {
            v["expected_transversal"] = *config.expected_transversal;
            ok &= transversal == (*config.expected_transversal ? count : 0);
        }
        checks.add("tangent_report", ok, v);
    }

    // Kernel and cokernel of D0 against the tangent report, at m and 2m.
    {
        Report v = Report::array();
        bool ok = true;
        for (int k : sample) {
            const auto& g = sols[static_cast<std::size_t>(k)];
            if (has_zero_length(g))
                continue;
            const auto& t = reports[static_cast<std::size_t>(k)];
            for (int mm : {m, 2 * m}) {
                auto s = analyze(assemble_D0(problem, g, mm), tol.svd);
                Report e;
                e["solution"] = k;
                e["m"] = mm;
                e["kernel"] = s.kernel;
                e["cokernel"] = s.cokernel;
                if (t.transversal) {
                    e["expected_kernel"] = t.dim_moduli;
                    e["expected_cokernel"] = 0;
                    ok &= s.kernel == t.dim_moduli && s.cokernel == 0;
                } else {
                    e["expected_cokernel"] = t.complement_dim();
                    ok &= s.cokernel == t.complement_dim() && s.cokernel > 0;
                }
                ok &= !s.marginal;
                v.push_back(e);
            }
        }
        if (!v.empty())
            checks.add("linearization", ok, v);
    }

    // psi gamma_dot with lambda = 1 on each internal edge.
    if (problem.tree.internal_edge_count() > 0) {
        Report v = Report::array();
        bool ok = true;
        const std::vector<int> grid{2 * m, 4 * m, 8 * m};
        for (int k : sample) {
            const auto& g = sols[static_cast<std::size_t>(k)];
            if (has_zero_length(g))
                continue;
            for (int i = 0; i < problem.tree.internal_edge_count(); ++i) {
                const int e = problem.tree.internal_edge_id(i);
                std::vector<double> res;
                for (int mm : grid) {
                    auto op = assemble_D0(problem, g, mm);
                    res.push_back(op.edge_residual(e, lambda_kernel_candidate(op, e)).cwiseAbs().maxCoeff());
                }
                ok &= ladder_ok(res, tol.residual, tol.min_order);
                Report x = ladder_json(grid, res);
                x["solution"] = k;
                x["edge"] = e;
                v.push_back(x);
            }
        }
        if (!v.empty())
            checks.add("length_kernel_candidate", ok, v);

        Report w = Report::array();
        bool ok2 = true;
        const std::vector<int> rgrid{m, 2 * m, 4 * m};
        for (int k : sample) {
            const auto& g = sols[static_cast<std::size_t>(k)];
            if (has_zero_length(g))
                continue;
            for (int i = 0; i < problem.tree.internal_edge_count(); ++i) {
                const int e = problem.tree.internal_edge_id(i);
                for (double eps : config.epsilons) {
                    std::vector<double> r0, r1;
                    double integral = 0.0;
                    for (int mm : rgrid) {
                        auto op = assemble_strip_reduced(problem, g, e, eps, mm);
                        integral = op.chi_tilde_integral;
                        r0.push_back((op.matrix * reduced_morse_candidate(op, problem, Vector::Ones(op.n)))
                                         .cwiseAbs()
                                         .maxCoeff());
                        r1.push_back((op.matrix * reduced_length_candidate(op, problem)).cwiseAbs().maxCoeff());
                    }
                    ok2 &= integral != 0.0 && ladder_ok(r0, tol.residual, tol.min_order) &&
                           ladder_ok(r1, tol.residual, tol.min_order);
                    Report x;
                    x["solution"] = k;
                    x["edge"] = e;
                    x["epsilon"] = eps;
                    x["chi_tilde_integral"] = integral;
                    x["morse"] = ladder_json(rgrid, r0);
                    x["length"] = ladder_json(rgrid, r1);
                    w.push_back(x);
                }
            }
        }
        if (!w.empty())
            checks.add("reduced_kernel_candidates", ok2, w);
    }

    // Explicit disks: residual ladder, vertex residual, beta, bookkeeping.
    if (count > 0) {
        Report res_v = Report::array();
        bool res_ok = true;
        double vres = 0.0, beta_max = 0.0, gap = 0.0, end_gap = 0.0, continuity = 0.0, energy = 0.0;
        const int s0 = config.grids.disk.s_per_unit;
        const std::vector<int> grid{s0, 2 * s0, 4 * s0};
        for (int k : sample) {
            const auto& g = sols[static_cast<std::size_t>(k)];
            for (double eps : config.epsilons) {
                std::vector<double> res;
                for (int spu : grid) {
                    DiskGrid dg = config.grids.disk;
                    dg.s_per_unit = spu;
                    dg.t_nodes = 5;  // the constructed map does not depend on t
                    const auto u = build_solution(problem, g, eps, Vector::Zero(moduli), dg);
                    res.push_back(max_strip_residual(u));
                    if (spu != grid.front())
                        continue;
                    for (std::size_t v = 0; v < u.vertices.size(); ++v)
                        vres = std::max(vres, vertex_residual(u, static_cast<int>(v)));
                    for (const auto& st : u.strips) {
                        for (double b : beta(st).beta)
                            beta_max = std::max(beta_max, std::abs(b));
                        gap = std::max(gap, st.length_gap);
                        end_gap = std::max(end_gap, st.end_gap);
                        auto vertex_at = [&](int h) {
                            return u.vertices[static_cast<std::size_t>(problem.tree.half_edge(h).source)].position;
                        };
                        for (int i = 0; i < st.nt(); ++i) {
                            if (st.end_half_edge >= 0)
                                continuity = std::max(continuity,
                                                      problem.manifold.distance(
                                                          st.q.col(st.column(i, st.ns() - 1)),
                                                          vertex_at(st.end_half_edge)));
                            if (st.start_half_edge >= 0)
                                continuity = std::max(continuity,
                                                      problem.manifold.distance(st.q.col(st.column(i, 0)),
                                                                                vertex_at(st.start_half_edge)));
                        }
                    }
                    energy = std::max(energy, energy_identity_check(u).defect);
                }
                res_ok &= ladder_ok(res, tol.residual, tol.min_order);
                Report x = ladder_json(grid, res);
                x["solution"] = k;
                x["epsilon"] = eps;
                res_v.push_back(x);
            }
        }
        checks.add("disk_strip_residual", res_ok, res_v);
        checks.add("disk_vertex_residual", vres == 0.0, vres);
        checks.add("disk_beta_zero", beta_max <= 1e-12, beta_max);
        checks.add("disk_continuity", continuity <= 1e-9, continuity);
        Report bk;
        bk["length_gap"] = gap;
        bk["end_gap"] = end_gap;
        checks.add("length_bookkeeping", gap <= 1e-9 && end_gap <= 1e-7, bk);
        checks.add("energy_constructed", energy <= tol.energy, energy);
    }

    {
        double worst = 0.0;
        std::mt19937_64 rng(config.seed);
        std::uniform_real_distribution<double> pick(1.0, 20.0);
        std::vector<double> ls{2.0, 5.0, 10.0};
        for (int i = 0; i < 5; ++i)
            ls.push_back(pick(rng));
        for (double eps : config.epsilons)
            for (double l0 : ls)
                worst = std::max(worst, std::abs(strip_length_from_edge(eps * strip_integral(l0), eps) - l0));
        checks.add("strip_length_roundtrip", worst <= 1e-10, worst);
    }

    // Energy identity under random perturbations with Lagrangian boundary.
    if (count > 0) {
        const auto& g = sols.front();
        DiskGrid coarse = config.grids.disk;
        coarse.s_per_unit = std::max(10, coarse.s_per_unit / 4);
        coarse.radial_nodes = (coarse.radial_nodes - 1) / 2 + 1;
        DiskGrid fine = coarse;
        fine.s_per_unit *= 2;
        fine.t_nodes = 2 * (coarse.t_nodes - 1) + 1;
        fine.radial_nodes = 2 * (coarse.radial_nodes - 1) + 1;
        fine.angular_per_arc *= 2;
        const auto u1 = build_solution(problem, g, config.epsilon, Vector::Zero(moduli), coarse);
        const auto u2 = build_solution(problem, g, config.epsilon, Vector::Zero(moduli), fine);
        Report v = Report::array();
        bool ok = true;
        for (int i = 0; i < config.perturbations; ++i) {
            const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
            auto a = u1, b = u2;
            perturb_lagrangian(a, seed, 0.3);
            perturb_lagrangian(b, seed, 0.3);
            std::vector<double> d{energy_identity_check(a).defect, energy_identity_check(b).defect};
            ok &= ladder_ok(d, 1.0, tol.min_order);
            Report x = ladder_json({1, 2}, d);
            x["seed"] = seed;
            v.push_back(x);
        }
        checks.add("energy_perturbed", ok, v);
    }

    // Integration by parts for D_e and D_e* with random sections.
    if (!sample.empty() && !has_zero_length(sols[static_cast<std::size_t>(sample.front())])) {
        const auto& g = sols[static_cast<std::size_t>(sample.front())];
        std::mt19937_64 rng(config.seed ^ 0x5deece66dULL);
        std::uniform_real_distribution<double> lam(-1.0, 1.0);
        Report v = Report::array();
        bool ok = true;
        const int ma = config.grids.adjoint_m;
        const std::vector<int> grid{ma / 2, ma};
        for (int e = 0; e < static_cast<int>(problem.tree.edges().size()); ++e) {
            const bool ext = problem.tree.edge(e).external();
            const Section xi = random_section(rng, problem.manifold.dim);
            const Section eta = random_section(rng, problem.manifold.dim);
            const double lambda = ext ? 0.0 : lam(rng);
            std::vector<double> d;
            for (int mm : grid)
                d.push_back(adjoint_identity_check(sample_edge(problem, g, e, mm), xi, lambda, eta).defect);
            ok &= ladder_ok(d, tol.adjoint, tol.min_order);
            Report x = ladder_json(grid, d);
            x["edge"] = e;
            v.push_back(x);
        }
        checks.add("adjoint_identity", ok, v);
    }

    if (!problem.tree.floer_mode()) {
        Report v = Report::array();
        bool ok = true;
        for (int k : sample) {
            const auto& g = sols[static_cast<std::size_t>(k)];
            if (has_zero_length(g) || !reports[static_cast<std::size_t>(k)].transversal)
                continue;
            auto a = index_additivity_check(problem, g, m);
            Report x;
            x["solution"] = k;
            x["index_D0"] = a.index_D0;
            x["vertex_moduli"] = a.vertex_moduli;
            x["total"] = a.total;
            x["expected"] = a.expected;
            ok &= a.ok;
            v.push_back(x);
        }
        if (!v.empty())
            checks.add("index_additivity", ok, v);
    }

    if (config.homology_function) {
        auto mc = morse_complex(config.function(*config.homology_function), config.manifold,
                                config.grids.critical_resolution, config.solve_options());
        Report v;
        v["chain_ranks"] = mc.chain_ranks;
        Report counts = Report::array();
        for (const auto& c : mc.counts) {
            Report rows = Report::array();
            for (int i = 0; i < c.rows(); ++i) {
                std::vector<int> row;
                for (int j = 0; j < c.cols(); ++j)
                    row.push_back(c(i, j));
                rows.push_back(row);
            }
            counts.push_back(rows);
        }
        v["counts"] = counts;
        v["betti"] = mc.betti;
        bool ok = true;
        if (config.expected_betti) {
            v["expected_betti"] = *config.expected_betti;
            ok = mc.betti == *config.expected_betti;
        }
        checks.add("morse_homology", ok, v);
    }

    Report r = header("verify", &config);
    r["tree"] = problem.tree.encoding();
    r["grids"] = {{"m", m},
                  {"adjoint_m", config.grids.adjoint_m},
                  {"s_per_unit", config.grids.disk.s_per_unit},
                  {"t_nodes", config.grids.disk.t_nodes},
                  {"radial_nodes", config.grids.disk.radial_nodes},
                  {"angular_per_arc", config.grids.disk.angular_per_arc}};
    r["solutions"] = count;
    r["sampled"] = sample;
    r["checks"] = checks.list();
    r["passed"] = checks.all();
    return r;
}

} // namespace morsedisk

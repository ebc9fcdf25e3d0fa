#include "morsedisk/commands.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace morsedisk;

namespace {

struct Flags
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int grid_scale = 1;
    bool json = false;
};

void add_common(CLI::App* cmd, Flags& f, bool needs_config)
{
    auto* c = cmd->add_option("--config", f.config, "run configuration (JSON)");
    if (needs_config)
        c->required();
    c->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "seed for randomized checks (overrides the config)");
    cmd->add_option("--grid-scale", f.grid_scale, "multiply every resolution by K")->check(CLI::PositiveNumber);
    cmd->add_flag("--json", f.json, "print the machine report on stdout");
}

RunConfig load(const Flags& f)
{
    RunConfig c = load_config(f.config);
    if (f.seed)
        c.seed = *f.seed;
    c.scale_grids(f.grid_scale);
    return c;
}

std::string num(const Report& j)
{
    std::ostringstream os;
    os.precision(6);
    os << j.get<double>();
    return os.str();
}

void print_human(std::ostream& os, const Report& r)
{
    const std::string cmd = r["command"];
    if (cmd == "trees") {
        for (const auto& t : r["trees"])
            os << t["encoding"].get<std::string>() << (t["trivalent"].get<bool>() ? "  trivalent" : "") << "\n";
        os << r["trivalent"].get<int>() << " trivalent, " << r["total"].get<int>() << " total\n";
    } else if (cmd == "critical") {
        auto table = [&](const Report& pts) {
            for (const auto& p : pts) {
                os << "  index " << p["index"].get<int>() << "  at";
                for (const auto& x : p["location"])
                    os << " " << num(x);
                os << "  value " << num(p["value"]) << "\n";
            }
        };
        if (r.contains("functions"))
            for (const auto& f : r["functions"]) {
                os << f["name"].get<std::string>() << " = " << f["expression"].get<std::string>() << "\n";
                table(f["points"]);
            }
        else {
            os << r["function"].get<std::string>() << "\n";
            table(r["points"]);
        }
    } else if (cmd == "solve") {
        os << r["count"].get<int>() << " gradient trees of shape " << r["tree"].get<std::string>() << "\n";
        int k = 0;
        for (const auto& s : r["solutions"]) {
            os << "  [" << k++ << "] vertices";
            for (const auto& v : s["vertices"])
                for (const auto& x : v)
                    os << " " << num(x);
            if (!s["lengths"].empty()) {
                os << "  lengths";
                for (const auto& l : s["lengths"])
                    os << " " << num(l);
            }
            os << "\n";
        }
    } else if (cmd == "transversality") {
        int k = 0;
        for (const auto& s : r["solutions"])
            os << "  [" << k++ << "] " << (s["transversal"].get<bool>() ? "transversal" : "NOT transversal")
               << ", dim moduli " << s["dim_moduli"].get<int>() << ", complement " << s["complement_dim"].get<int>()
               << (s["marginal"].get<bool>() ? ", marginal" : "") << "\n";
    } else if (cmd == "linearize") {
        os << "expected index " << r["expected_index"].get<int>() << " at m = " << r["m"].get<int>() << "\n";
        for (const auto& s : r["solutions"]) {
            os << "  [" << s["solution"].get<int>() << "] ";
            if (s.contains("skipped")) {
                os << "skipped: " << s["skipped"].get<std::string>() << "\n";
                continue;
            }
            os << "kernel " << s["kernel"].get<int>() << ", cokernel " << s["cokernel"].get<int>() << ", index "
               << s["index"].get<int>() << "\n";
        }
    } else if (cmd == "build-disk") {
        os << "disk for solution " << r["solution"].get<int>() << " at eps " << num(r["epsilon"]) << " written to "
           << r["output"].get<std::string>() << "\n";
        for (const auto& s : r["strips"])
            os << "  edge " << s["edge"].get<int>() << " (" << s["kind"].get<std::string>() << ") residual "
               << num(s["max_residual"]) << "\n";
        os << "  energy defect " << num(r["energy_defect"]) << "\n";
    } else if (cmd == "verify") {
        int pass = 0, total = 0;
        for (const auto& c : r["checks"]) {
            ++total;
            pass += c["pass"].get<bool>();
            os << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "\n";
        }
        os << pass << "/" << total << " checks passed\n";
    }
}

void emit(const Flags& f, const Report& r)
{
    if (!f.out.empty()) {
        std::filesystem::create_directories(f.out);
        std::ofstream os(std::filesystem::path(f.out) / (r["command"].get<std::string>() + ".json"));
        os << r.dump(2) << "\n";
    }
    if (f.json)
        std::cout << r.dump(2) << "\n";
    else
        print_human(std::cout, r);
}

int fail(const Report& error)
{
    Report r;
    r["schema_version"] = kReportSchema;
    r["error"] = error;
    std::cerr << r.dump() << "\n";
    return 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Morse gradient trees and explicit disk solutions"};
    app.require_subcommand(1);
    Flags f;

    int d = 3;
    bool trivalent = false, floer = false;
    auto* trees = app.add_subcommand("trees", "enumerate ribbon trees with d leaves");
    trees->add_option("--d", d, "number of leaves")->required();
    trees->add_flag("--trivalent", trivalent, "only trivalent trees");
    trees->add_flag("--floer", floer, "allow the two-leaf Floer tree");
    trees->add_flag("--json", f.json, "print the machine report on stdout");
    trees->add_option("--out", f.out, "output directory");

    std::string expr;
    int dim = 1, resolution = 16;
    bool euclidean = false;
    auto* critical = app.add_subcommand("critical", "critical points of a function");
    add_common(critical, f, false);
    critical->add_option("--expr", expr, "expression instead of a config");
    critical->add_option("--dim", dim, "dimension for --expr")->check(CLI::PositiveNumber);
    critical->add_flag("--euclidean", euclidean, "R^n instead of the torus for --expr");
    critical->add_option("--resolution", resolution, "seed grid per axis for --expr")->check(CLI::PositiveNumber);

    auto* solve_cmd = app.add_subcommand("solve", "solve for gradient trees");
    add_common(solve_cmd, f, true);
    auto* transv = app.add_subcommand("transversality", "tangent-space transversality report");
    add_common(transv, f, true);
    auto* lin = app.add_subcommand("linearize", "linearized operator spectra");
    add_common(lin, f, true);
    int solution = 0;
    auto* disk = app.add_subcommand("build-disk", "construct and export the explicit disk");
    add_common(disk, f, true);
    disk->add_option("--solution", solution, "index of the gradient tree");
    auto* verify = app.add_subcommand("verify", "run every applicable check");
    add_common(verify, f, true);

    CLI11_PARSE(app, argc, argv);

    try {
        Report r;
        if (*trees)
            r = cmd_trees(d, trivalent, floer);
        else if (*critical) {
            if (!expr.empty()) {
                ModelManifold m{dim, euclidean ? ManifoldKind::Euclidean : ManifoldKind::FlatTorus};
                r = cmd_critical(ScalarFunction::parse(expr, dim, m.periodic_flags()), m, resolution);
            } else if (!f.config.empty())
                r = cmd_critical(load(f));
            else
                throw ConfigError("--config", "critical needs --config or --expr");
        } else {
            const RunConfig c = load(f);
            if (*solve_cmd)
                r = cmd_solve(c, f.out);
            else if (*transv)
                r = cmd_transversality(c);
            else if (*lin)
                r = cmd_linearize(c, f.out);
            else if (*disk)
                r = cmd_build_disk(c, solution, f.out.empty() ? c.output : f.out);
            else
                r = cmd_verify(c);
        }
        emit(f, r);
        if (r.contains("passed") && !r["passed"].get<bool>())
            return 1;
        return 0;
    } catch (const ConfigError& e) {
        return fail({{"module", "config"}, {"field", e.field()}, {"message", e.what()}});
    } catch (const ParseError& e) {
        return fail({{"module", e.module()}, {"offset", e.offset()}, {"message", e.what()}});
    } catch (const NonMorseError& e) {
        const Vector& p = e.point();
        return fail({{"module", e.module()},
                     {"point", std::vector<double>(p.data(), p.data() + p.size())},
                     {"message", e.what()}});
    } catch (const Error& e) {
        return fail({{"module", e.module()}, {"message", e.what()}});
    } catch (const std::exception& e) {
        return fail({{"module", "internal"}, {"message", e.what()}});
    }
}

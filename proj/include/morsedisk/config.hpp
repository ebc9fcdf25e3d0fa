#pragma once

#include "morsedisk/disk.hpp"
#include "morsedisk/moduli.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace morsedisk {

/// Invalid configuration. field() is a dotted path into the document, e.g.
/// "pairs.0,2" or "tolerances.svd".
class ConfigError : public Error
{
public:
    ConfigError(std::string field, const std::string& what)
        : Error("config", field + ": " + what), field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct Tolerances
{
    double newton = 1e-10;
    double svd = 1e-7;
    double residual = 1e-5;   // strip residual at the finest grid, kernel candidates
    double adjoint = 1e-5;
    double energy = 1e-10;    // constructed solutions
    double min_order = 1.8;   // observed convergence order under grid doubling
};

struct Grids
{
    int m = 100;  // linearization cells per unit time
    int adjoint_m = 400;  // finest grid of the adjoint check; the coarser one is half
    DiskGrid disk;
    int seed_resolution = 8;
    int critical_resolution = 16;
};

/// Run configuration, read from JSON. Functions are declared by name and
/// boundary pairs refer to them; "-name" means the negated function.
struct RunConfig
{
    std::string name;
    ModelManifold manifold;
    std::string tree_encoding;
    std::map<std::string, std::string> functions;          // name -> expression
    std::map<std::pair<int, int>, std::string> pairs;       // (i, j), i < j -> reference
    std::vector<PointSelector> external;                    // by leaf label
    std::vector<double> metric_guess;
    double epsilon = 0.1;
    std::vector<double> epsilons{0.2, 0.1, 0.05};
    double epsilon_max = kEpsilonMax;
    Tolerances tolerances;
    Grids grids;
    double search_box = 2.0;
    std::uint64_t seed = 20240917;
    std::string output = "out";
    int sample_solutions = 3;  // solutions taken through the expensive checks
    int perturbations = 10;
    std::optional<std::string> homology_function;
    std::optional<std::vector<int>> expected_betti;
    std::optional<int> expected_solutions;
    std::optional<bool> expected_transversal;

    /// Multiplies every discretization resolution by k (not the seed grids).
    void scale_grids(int k);

    RibbonTree tree() const;
    ScalarFunction function(const std::string& reference) const;
    TreeProblem problem() const;
    SolveOptions solve_options() const;
};

/// Throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

} // namespace morsedisk

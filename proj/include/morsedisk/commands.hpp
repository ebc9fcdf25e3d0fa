#pragma once

#include "morsedisk/config.hpp"

#include "json.hpp"

#include <filesystem>

namespace morsedisk {

/// Machine-readable command output. Keys keep insertion order so that equal
/// runs serialize to identical bytes.
using Report = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

/// Ribbon trees with d leaves; d = 2 requires floer_mode.
Report cmd_trees(int d, bool trivalent_only, bool floer_mode);

/// Critical points of f with index, Hessian eigenvalues and value.
Report cmd_critical(const ScalarFunction& f, const ModelManifold& m, int resolution, double half_width = 2.0);

/// Critical points of every named function of a config.
Report cmd_critical(const RunConfig& config);

/// Solves the tree problem. With a nonempty `out`, writes one trajectory
/// CSV per solution and edge.
Report cmd_solve(const RunConfig& config, const std::filesystem::path& out = {});

Report cmd_transversality(const RunConfig& config);

/// D0 spectrum for the sampled solutions and the reduced strip operators of
/// their internal edges at config.epsilon. With a nonempty `out`, writes
/// each D0 as operator_<k>.txt.
Report cmd_linearize(const RunConfig& config, const std::filesystem::path& out = {});

/// Builds the explicit disk for solution `solution` at config.epsilon and
/// exports it to `out`.
Report cmd_build_disk(const RunConfig& config, int solution, const std::filesystem::path& out);

/// Runs every check that applies to the config. report["passed"] is true
/// iff all checks pass.
Report cmd_verify(const RunConfig& config);

/// Indices of at most k solutions out of `count`, evenly spaced, first and
/// last included.
std::vector<int> sample_indices(int count, int k);

} // namespace morsedisk

#pragma once

#include "morsedisk/moduli.hpp"

#include <vector>

namespace morsedisk {

/// Morse complex of f over Z/2, with differentials counted by solving the
/// Floer tree "(1)" for every pair of critical points whose indices differ
/// by one.
struct MorseComplex
{
    std::vector<CriticalPoint> points;  // sorted by index, then location
    /// counts[k](a, b): flow lines from the a-th point of index k up to the
    /// b-th point of index k + 1 (raw, not reduced mod 2).
    std::vector<Eigen::MatrixXi> counts;
    std::vector<int> chain_ranks;  // number of critical points per index
    std::vector<int> betti;        // Z/2 homology ranks
};

MorseComplex morse_complex(const ScalarFunction& f, const ModelManifold& m, int critical_resolution = 16,
                           const SolveOptions& options = {});

/// Rank over Z/2 of an integer matrix reduced mod 2.
int rank_mod2(const Eigen::MatrixXi& a);

} // namespace morsedisk

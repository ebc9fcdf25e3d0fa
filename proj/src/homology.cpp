#include "morsedisk/homology.hpp"

#include <algorithm>

namespace morsedisk {

int rank_mod2(const Eigen::MatrixXi& a)
{
    Eigen::MatrixXi b = a.unaryExpr([](int x) { return ((x % 2) + 2) % 2; });
    int rank = 0;
    for (int c = 0; c < b.cols() && rank < b.rows(); ++c) {
        int pivot = -1;
        for (int r = rank; r < b.rows(); ++r)
            if (b(r, c)) {
                pivot = r;
                break;
            }
        if (pivot < 0)
            continue;
        b.row(pivot).swap(b.row(rank));
        for (int r = 0; r < b.rows(); ++r)
            if (r != rank && b(r, c))
                b.row(r) = (b.row(r) + b.row(rank)).unaryExpr([](int x) { return x % 2; });
        ++rank;
    }
    return rank;
}

MorseComplex morse_complex(const ScalarFunction& f, const ModelManifold& m, int critical_resolution,
                           const SolveOptions& options)
{
    const int n = m.dim;
    MorseComplex mc;
    mc.points = find_critical_points(f, m, critical_resolution);
    std::stable_sort(mc.points.begin(), mc.points.end(),
                     [](const CriticalPoint& a, const CriticalPoint& b) { return a.morse_index < b.morse_index; });
    std::vector<std::vector<const CriticalPoint*>> by_index(static_cast<std::size_t>(n + 1));
    for (const auto& p : mc.points)
        by_index[static_cast<std::size_t>(p.morse_index)].push_back(&p);
    for (const auto& v : by_index)
        mc.chain_ranks.push_back(static_cast<int>(v.size()));

    const RibbonTree tree = enumerate_ribbon_trees(2, false, true).front();
    for (int k = 0; k < n; ++k) {
        const auto& lo = by_index[static_cast<std::size_t>(k)];
        const auto& hi = by_index[static_cast<std::size_t>(k + 1)];
        Eigen::MatrixXi c = Eigen::MatrixXi::Zero(static_cast<int>(lo.size()), static_cast<int>(hi.size()));
        for (std::size_t a = 0; a < lo.size(); ++a)
            for (std::size_t b = 0; b < hi.size(); ++b) {
                // Leg 1 carries f and starts at a; leg 0 carries -f, for which
                // b has index n - (k + 1).
                auto problem = make_problem(tree, m, {{{0, 1}, f}},
                                            {{hi[b]->location, n - k - 1}, {lo[a]->location, k}},
                                            critical_resolution);
                c(static_cast<int>(a), static_cast<int>(b)) = static_cast<int>(solve(problem, options).size());
            }
        mc.counts.push_back(c);
    }
    for (int k = 0; k <= n; ++k) {
        // d lowers the index; d_k maps index k to k - 1 and is counts[k - 1]^T.
        const int out = k > 0 ? rank_mod2(mc.counts[static_cast<std::size_t>(k - 1)]) : 0;
        const int in = k < n ? rank_mod2(mc.counts[static_cast<std::size_t>(k)]) : 0;
        mc.betti.push_back(mc.chain_ranks[static_cast<std::size_t>(k)] - out - in);
    }
    return mc;
}

} // namespace morsedisk

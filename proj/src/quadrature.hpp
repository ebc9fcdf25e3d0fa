#pragma once

#include <array>

namespace morsedisk::detail {

// 8-point Gauss-Legendre on [-1, 1], symmetric half.
inline constexpr std::array<double, 4> kGaussNodes{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                   0.9602898564975363};
inline constexpr std::array<double, 4> kGaussWeights{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                     0.1012285362903763};

/// Composite 8-point Gauss-Legendre of f over [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b, int panels)
{
    double total = 0.0;
    const double w = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double c = a + (k + 0.5) * w, r = 0.5 * w;
        for (std::size_t i = 0; i < kGaussNodes.size(); ++i)
            total += r * kGaussWeights[i] * (f(c - r * kGaussNodes[i]) + f(c + r * kGaussNodes[i]));
    }
    return total;
}

} // namespace morsedisk::detail

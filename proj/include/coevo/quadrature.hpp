#pragma once

#include <cstddef>
#include <vector>

namespace coevo {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rule of order n (n >= 1), computed by Newton iteration on P_n.
/// Results are cached; the returned reference stays valid for the program lifetime.
const GaussLegendreRule& gauss_legendre(std::size_t n);

/// Composite rule on (a, b]: `panels` equal panels with an n-point rule each.
/// Nodes never coincide with a panel endpoint.
struct CompositeRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

CompositeRule composite_gauss_legendre(double a, double b, std::size_t n, std::size_t panels);

}  // namespace coevo

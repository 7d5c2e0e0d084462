#include "coevo/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace coevo {

namespace {

GaussLegendreRule compute_rule(std::size_t n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th root.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendreRule>(compute_rule(n));
    return *slot;
}

CompositeRule composite_gauss_legendre(double a, double b, std::size_t n, std::size_t panels) {
    if (panels == 0) throw std::invalid_argument("panel count must be >= 1");
    const auto& base = gauss_legendre(n);
    CompositeRule out;
    out.nodes.reserve(n * panels);
    out.weights.reserve(n * panels);
    const double width = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + width * static_cast<double>(p);
        const double mid = lo + 0.5 * width;
        for (std::size_t i = 0; i < n; ++i) {
            out.nodes.push_back(mid + 0.5 * width * base.nodes[i]);
            out.weights.push_back(0.5 * width * base.weights[i]);
        }
    }
    return out;
}

}  // namespace coevo

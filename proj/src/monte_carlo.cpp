#include "coevo/monte_carlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace coevo {

namespace {

// Calls visit(ln S_tau) once per path.
template <typename Visitor>
void simulate_log_spot(const HestonParams& p, double spot, double rate, double tau, std::size_t n_paths,
                       std::size_t n_steps, Rng& rng, Visitor&& visit) {
    if (n_paths < 10'000) throw std::invalid_argument("Monte Carlo oracle needs at least 1e4 paths");
    if (n_steps < 100) throw std::invalid_argument("Monte Carlo oracle needs at least 100 steps");
    const double dt = tau / static_cast<double>(n_steps);
    const double sqrt_dt = std::sqrt(dt);
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    const double log_spot = std::log(spot);
    // Paths advance in blocks so independent updates overlap in the pipeline.
    constexpr std::size_t kBlock = 32;
    std::array<double, kBlock> x{};
    std::array<double, kBlock> v{};
    std::array<double, 2 * kBlock> z{};
    for (std::size_t first = 0; first < n_paths; first += kBlock) {
        const std::size_t count = std::min(kBlock, n_paths - first);
        x.fill(log_spot);
        v.fill(p.v0);
        for (std::size_t step = 0; step < n_steps; ++step) {
            for (std::size_t k = 0; k < 2 * count; ++k) z[k] = rng.normal();
            for (std::size_t k = 0; k < count; ++k) {
                const double z1 = z[2 * k];
                const double z2 = p.rho * z1 + rho_perp * z[2 * k + 1];
                const double vp = v[k] > 0.0 ? v[k] : 0.0;
                const double sv = std::sqrt(vp) * sqrt_dt;
                x[k] += (rate - 0.5 * vp) * dt + sv * z1;
                v[k] += p.kappa * (p.lambda - vp) * dt + p.sigma * sv * z2;
            }
        }
        for (std::size_t k = 0; k < count; ++k) visit(x[k]);
    }
}

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    void add(double y) {
        sum += y;
        sum_sq += y * y;
    }
    McEstimate finish(std::size_t n, double scale) const {
        const double nd = static_cast<double>(n);
        const double mean = sum / nd;
        const double var = std::max(0.0, (sum_sq - nd * mean * mean) / (nd - 1.0));
        return {scale * mean, scale * std::sqrt(var / nd)};
    }
};

}  // namespace

std::size_t default_mc_steps(double tau) {
    return std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(252.0 * tau)));
}

std::vector<McEstimate> mc_option_prices(const HestonParams& p, const MarketContext& ctx, double tau,
                                         std::span<const double> strikes, OptionType type, std::size_t n_paths,
                                         std::size_t n_steps, Rng& rng) {
    const double rate = ctx.rate(tau);
    std::vector<Moments> acc(strikes.size());
    simulate_log_spot(p, ctx.spot, rate, tau, n_paths, n_steps, rng, [&](double x) {
        const double s = std::exp(x);
        for (std::size_t k = 0; k < strikes.size(); ++k) {
            acc[k].add(type == OptionType::Call ? std::max(s - strikes[k], 0.0) : std::max(strikes[k] - s, 0.0));
        }
    });
    std::vector<McEstimate> out;
    out.reserve(strikes.size());
    const double df = std::exp(-rate * tau);
    for (const auto& m : acc) out.push_back(m.finish(n_paths, df));
    return out;
}

McEstimate mc_price_oracle(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                           std::size_t n_paths, std::size_t n_steps, Rng& rng) {
    return mc_option_prices(p, ctx, tau, std::span(&strike, 1), OptionType::Call, n_paths, n_steps, rng).front();
}

std::vector<McComplexEstimate> mc_characteristic_fn(const HestonParams& p, const MarketContext& ctx, double tau,
                                                    std::span<const double> us, std::size_t n_paths,
                                                    std::size_t n_steps, Rng& rng) {
    std::vector<Moments> re(us.size());
    std::vector<Moments> im(us.size());
    simulate_log_spot(p, ctx.spot, ctx.rate(tau), tau, n_paths, n_steps, rng, [&](double x) {
        for (std::size_t k = 0; k < us.size(); ++k) {
            re[k].add(std::cos(us[k] * x));
            im[k].add(std::sin(us[k] * x));
        }
    });
    std::vector<McComplexEstimate> out;
    for (std::size_t k = 0; k < us.size(); ++k) {
        const auto r = re[k].finish(n_paths, 1.0);
        const auto i = im[k].finish(n_paths, 1.0);
        out.push_back({{r.value, i.value}, r.std_error, i.std_error});
    }
    return out;
}

}  // namespace coevo

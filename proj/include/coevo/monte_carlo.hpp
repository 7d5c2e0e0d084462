#pragma once

#include "coevo/pricing.hpp"

#include <complex>
#include <span>
#include <vector>

namespace coevo {

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Default step count: 252 per year, at least 100.
std::size_t default_mc_steps(double tau);

/// Euler full-truncation simulation of the Heston dynamics (log-Euler for the spot,
/// max(v, 0) in the variance drift and diffusion). Returns discounted mean payoff
/// and its standard error for every strike, all strikes sharing one path set.
///
/// Test oracle only; requires n_paths >= 1e4 and n_steps >= 100.
std::vector<McEstimate> mc_option_prices(const HestonParams& p, const MarketContext& ctx, double tau,
                                         std::span<const double> strikes, OptionType type, std::size_t n_paths,
                                         std::size_t n_steps, Rng& rng);

McEstimate mc_price_oracle(const HestonParams& p, const MarketContext& ctx, double tau, double strike,
                           std::size_t n_paths, std::size_t n_steps, Rng& rng);

struct McComplexEstimate {
    std::complex<double> value;
    double std_error_real = 0.0;
    double std_error_imag = 0.0;
};

/// Empirical E[exp(i u ln S_tau)] for each real u, same simulation scheme.
std::vector<McComplexEstimate> mc_characteristic_fn(const HestonParams& p, const MarketContext& ctx, double tau,
                                                    std::span<const double> us, std::size_t n_paths,
                                                    std::size_t n_steps, Rng& rng);

}  // namespace coevo

#include "coevo/ga.hpp"
#include "coevo/monte_carlo.hpp"
#include "coevo/pricing.hpp"
#include "coevo/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace coevo;

namespace {

// Closed-form Black-Scholes written out independently of the library.
double bs_oracle(double s, double k, double r, double tau, double vol) {
    const double sd = vol * std::sqrt(tau);
    const double d1 = (std::log(s / k) + (r + 0.5 * vol * vol) * tau) / sd;
    const double d2 = d1 - sd;
    auto ncdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
    return s * ncdf(d1) - k * std::exp(-r * tau) * ncdf(d2);
}

const HestonParams kMcCase{1.5, 0.08, 0.5, -0.6, 0.06};

}  // namespace

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
    for (std::size_t n : {1, 2, 5, 16, 64}) {
        const auto& rule = gauss_legendre(n);
        double sum_w = 0.0;
        for (double w : rule.weights) sum_w += w;
        EXPECT_NEAR(sum_w, 2.0, 1e-13);
        // x^(2n-2) integrates to 2/(2n-1) on [-1, 1]
        const auto deg = static_cast<double>(2 * n - 2);
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) q += rule.weights[i] * std::pow(rule.nodes[i], deg);
        EXPECT_NEAR(q, 2.0 / (deg + 1.0), 1e-12) << n;
    }
}

TEST(GaussLegendre, CompositeAvoidsEndpoints) {
    const auto c = composite_gauss_legendre(0.0, 200.0, 64, 4);
    ASSERT_EQ(c.nodes.size(), 256u);
    for (double x : c.nodes) {
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, 200.0);
    }
    double integral = 0.0;
    for (std::size_t i = 0; i < c.nodes.size(); ++i) integral += c.weights[i] * std::exp(-c.nodes[i] / 50.0);
    EXPECT_NEAR(integral, 50.0 * (1.0 - std::exp(-4.0)), 1e-10);
}

TEST(CharacteristicFn, UnitAtZero) {
    const MarketContext ctx{100.0, RateCurve::flat(0.03)};
    const auto v = characteristic_fn(kMcCase, ctx, 0.7, {0.0, 0.0});
    EXPECT_NEAR(v.real(), 1.0, 1e-14);
    EXPECT_NEAR(v.imag(), 0.0, 1e-14);
}

TEST(CharacteristicFn, MartingaleAtMinusI) {
    const MarketContext ctx{100.0, RateCurve::flat(0.03)};
    const double tau = 0.7;
    const auto v = characteristic_fn(kMcCase, ctx, tau, {0.0, -1.0});
    EXPECT_NEAR(v.real(), 100.0 * std::exp(0.03 * tau), 1e-10);
    EXPECT_NEAR(v.imag(), 0.0, 1e-10);
}

TEST(CharacteristicFn, MatchesMonteCarlo) {
    const MarketContext ctx{100.0, RateCurve::flat(0.02)};
    const double tau = 1.0;
    const std::vector<double> us{0.5, 1.0, 5.0};
    Rng rng(11);
    const auto mc = mc_characteristic_fn(kMcCase, ctx, tau, us, 200000, 252, rng);
    for (std::size_t i = 0; i < us.size(); ++i) {
        const auto exact = characteristic_fn(kMcCase, ctx, tau, {us[i], 0.0});
        EXPECT_LE(std::abs(exact.real() - mc[i].value.real()), 3.0 * mc[i].std_error_real + 1e-3) << us[i];
        EXPECT_LE(std::abs(exact.imag() - mc[i].value.imag()), 3.0 * mc[i].std_error_imag + 1e-3) << us[i];
    }
}

TEST(CallPrice, BlackScholesLimit) {
    const HestonParams p{2.0, 0.04, 1e-4, 0.0, 0.04};
    const MarketContext ctx{100.0, RateCurve::flat(0.03)};
    const double c = call_price(p, ctx, 0.5, 100.0);
    EXPECT_NEAR(c, bs_oracle(100.0, 100.0, 0.03, 0.5, 0.2), 1e-4);
    EXPECT_NEAR(black_scholes_call(100.0, 100.0, 0.03, 0.5, 0.2), bs_oracle(100.0, 100.0, 0.03, 0.5, 0.2), 1e-12);
}

TEST(CallPrice, DeepInTheMoney) {
    const MarketContext ctx{100.0, RateCurve::flat(0.03)};
    const double tau = 0.5, k = 1e-6;
    EXPECT_NEAR(call_price(kMcCase, ctx, tau, k), 100.0 - k * std::exp(-0.03 * tau), 1e-8);
    EXPECT_NEAR(put_price(kMcCase, ctx, tau, k), 0.0, 1e-8);
}

TEST(CallPrice, MatchesMonteCarlo) {
    const MarketContext ctx{100.0, RateCurve::flat(0.02)};
    Rng rng(2024);
    const auto mc = mc_price_oracle(kMcCase, ctx, 1.0, 110.0, 1000000, 252, rng);
    EXPECT_LE(std::abs(call_price(kMcCase, ctx, 1.0, 110.0) - mc.value), 3.0 * mc.std_error);
}

TEST(PutPrice, MatchesMonteCarlo) {
    const MarketContext ctx{100.0, RateCurve::flat(0.02)};
    Rng rng(2025);
    const std::vector<double> strikes{90.0};
    const auto mc = mc_option_prices(kMcCase, ctx, 1.0, strikes, OptionType::Put, 1000000, 252, rng);
    EXPECT_LE(std::abs(put_price(kMcCase, ctx, 1.0, 90.0) - mc[0].value), 3.0 * mc[0].std_error);
}

TEST(PutPrice, ParityAndDirectRoute) {
    const MarketContext ctx{100.0, RateCurve::flat(0.05)};
    for (double k : {60.0, 95.0, 100.0, 130.0}) {
        const double c = call_price(kMcCase, ctx, 0.8, k);
        const double p = put_price(kMcCase, ctx, 0.8, k);
        EXPECT_NEAR(c - p, 100.0 - k * std::exp(-0.05 * 0.8), 1e-10) << k;
        EXPECT_NEAR(put_price_direct(kMcCase, ctx, 0.8, k), p, 1e-8) << k;
    }
}

TEST(MonteCarlo, StandardErrorScaling) {
    const MarketContext ctx{100.0, RateCurve::flat(0.0)};
    Rng a(1), b(2);
    const auto small = mc_price_oracle(kMcCase, ctx, 0.5, 100.0, 20000, 126, a);
    const auto large = mc_price_oracle(kMcCase, ctx, 0.5, 100.0, 40000, 126, b);
    EXPECT_NEAR(large.std_error / small.std_error, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(MonteCarlo, DeepItmForward) {
    const MarketContext ctx{100.0, RateCurve::flat(0.0)};
    Rng rng(3);
    const auto mc = mc_price_oracle(kMcCase, ctx, 0.5, 1e-6, 20000, 126, rng);
    EXPECT_NEAR(mc.value, 100.0, 4.0 * mc.std_error + 1e-6);
}

TEST(PriceSurface, SingleCellEqualsCallPrice) {
    const SurfaceGrid grid{{95.0}, {0.4}};
    const MarketContext ctx{100.0, RateCurve::flat(0.01)};
    const auto s = price_surface(kMcCase, ctx, grid);
    ASSERT_EQ(s.prices.size(), 1u);
    EXPECT_DOUBLE_EQ(s.prices[0], call_price(kMcCase, ctx, 0.4, 95.0));
}

TEST(PriceSurface, MonotoneAndConvexInStrike) {
    const MarketContext ctx{100.0, RateCurve::flat(0.02)};
    Rng rng(5);
    for (const auto& p : sample_uniform(ParamBox::table_default(), 5, rng)) {
        const auto grid = SurfaceGrid::synthetic(100.0, 60, 3, -0.5, 0.4, 0.1, 1.0);
        const auto s = price_surface(p, ctx, grid);
        for (std::size_t j = 0; j < grid.n_maturities(); ++j) {
            for (std::size_t i = 1; i < grid.n_strikes(); ++i) EXPECT_LE(s.at(i, j), s.at(i - 1, j) + 1e-6 * 100.0);
            for (std::size_t i = 1; i + 1 < grid.n_strikes(); ++i) {
                const double k0 = grid.strikes[i - 1], k1 = grid.strikes[i], k2 = grid.strikes[i + 1];
                const double slope_l = (s.at(i, j) - s.at(i - 1, j)) / (k1 - k0);
                const double slope_r = (s.at(i + 1, j) - s.at(i, j)) / (k2 - k1);
                EXPECT_GE(slope_r - slope_l, -1e-6 * 100.0 / (k2 - k0));
            }
        }
    }
}

TEST(PriceSurface, JsonRoundTrip) {
    const auto grid = SurfaceGrid::synthetic(100.0, 3, 2);
    const auto s = price_surface(kMcCase, {100.0, RateCurve::flat(0.0)}, grid);
    const auto back = surface_from_json(surface_to_json(s));
    EXPECT_EQ(back.grid, s.grid);
    EXPECT_EQ(back.prices, s.prices);
}

TEST(SurfaceGrid, Validation) {
    EXPECT_THROW((SurfaceGrid{{}, {1.0}}).validate(), std::invalid_argument);
    EXPECT_THROW((SurfaceGrid{{100.0, 90.0}, {1.0}}).validate(), std::invalid_argument);
    EXPECT_NO_THROW(SurfaceGrid::synthetic(100.0).validate());
    EXPECT_EQ(SurfaceGrid::synthetic(100.0).size(), 40u);
}

TEST(StrictQuadrature, AcceptsWellResolvedPrices) {
    QuadratureSpec q;
    q.strict = true;
    EXPECT_NO_THROW(call_price(kMcCase, {100.0, RateCurve::flat(0.0)}, 0.5, 100.0, q));
}

TEST(CalibrationLoss, SelfInversionIsZero) {
    const MarketContext ctx{100.0, RateCurve::flat(0.01)};
    const auto grid = SurfaceGrid::synthetic(100.0);
    const auto target = price_surface(kMcCase, ctx, grid);
    EXPECT_LT(calibration_loss(kMcCase, target, ctx), 1e-12);
}

TEST(CalibrationLoss, ConstantOffset) {
    const MarketContext ctx{100.0, RateCurve::flat(0.01)};
    auto target = price_surface(kMcCase, ctx, SurfaceGrid::synthetic(100.0));
    for (double& v : target.prices) v += 0.25;
    EXPECT_NEAR(calibration_loss(kMcCase, target, ctx), 0.0625, 1e-12);
}

TEST(CalibrationLoss, SingleCellSquaredDifference) {
    const MarketContext ctx{100.0, RateCurve::flat(0.0)};
    const SurfaceGrid grid{{105.0}, {0.5}};
    Rng rng(8);
    const auto ps = sample_uniform(ParamBox::table_default(), 2, rng);
    const auto target = price_surface(ps[0], ctx, grid);
    const double diff = call_price(ps[1], ctx, 0.5, 105.0) - call_price(ps[0], ctx, 0.5, 105.0);
    EXPECT_NEAR(calibration_loss(ps[1], target, ctx), diff * diff, 1e-12);
}

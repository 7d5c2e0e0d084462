#include "coevo/market_io.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace coevo;

TEST(ParseChain, EmptyInputGivesNoQuotes) {
    EXPECT_TRUE(parse_chain("").empty());
    EXPECT_TRUE(parse_chain("type,strike,expiry_days,bid,ask\n").empty());
}

TEST(ParseChain, MidFromBidAsk) {
    const auto q = parse_chain("type,strike,expiry_days,bid,ask\ncall,100,30,10,12\n");
    ASSERT_EQ(q.size(), 1u);
    EXPECT_EQ(q[0].type, OptionType::Call);
    EXPECT_DOUBLE_EQ(q[0].mid, 11.0);
    EXPECT_EQ(q[0].expiry_days, 30);
}

TEST(ParseChain, ColumnsInAnyOrderAndMidColumn) {
    const auto q = parse_chain("mid,expiry_days,strike,type\n4.5,10,95,P\n");
    ASSERT_EQ(q.size(), 1u);
    EXPECT_EQ(q[0].type, OptionType::Put);
    EXPECT_DOUBLE_EQ(q[0].strike, 95.0);
    EXPECT_DOUBLE_EQ(q[0].mid, 4.5);
}

TEST(ParseChain, CountsSkippedRows) {
    ChainLoadReport rep;
    const auto q = parse_chain(
        "type,strike,expiry_days,bid,ask\n"
        "call,100,30,10,12\n"
        "call,abc,30,10,12\n"
        "put,100,30,5,4\n"
        "put,100,30,0,0\n",
        &rep);
    EXPECT_EQ(q.size(), 1u);
    EXPECT_EQ(rep.rows, 4u);
    EXPECT_EQ(rep.kept, 1u);
    EXPECT_EQ(rep.malformed, 1u);
    EXPECT_EQ(rep.crossed, 1u);
    EXPECT_EQ(rep.non_positive, 1u);
}

TEST(ParseChain, MissingColumnThrows) {
    EXPECT_THROW(parse_chain("type,strike,bid,ask\ncall,100,1,2\n"), std::invalid_argument);
}

TEST(LoadChain, MissingFileThrows) {
    EXPECT_THROW(load_chain("/nonexistent/chain.csv"), std::runtime_error);
}

TEST(ChainCsv, RoundTripPreservesMid) {
    const std::vector<OptionQuote> q{{OptionType::Call, 100.0, 30, 11.0}, {OptionType::Put, 90.0, 7, 0.3}};
    const auto back = parse_chain(chain_to_csv(q, 0.5));
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_EQ(back[i].type, q[i].type);
        EXPECT_DOUBLE_EQ(back[i].strike, q[i].strike);
        EXPECT_EQ(back[i].expiry_days, q[i].expiry_days);
        EXPECT_NEAR(back[i].mid, q[i].mid, 1e-12);
    }
}

TEST(Rates, TreasuryCurveKnotsAndInterpolation) {
    const auto c = default_treasury_curve();
    auto at_weeks = [&](double w) { return c.rate(w * kDaysPerWeek / kDaysPerYear); };
    EXPECT_NEAR(at_weeks(4), 0.0424, 1e-12);
    EXPECT_NEAR(at_weeks(5), 0.04235, 1e-12);
    EXPECT_NEAR(at_weeks(1), 0.0424, 1e-12);
    EXPECT_NEAR(c.rate(2.0), 0.0377, 1e-12);
}

TEST(Rates, CsvRoundTrip) {
    const auto c = default_treasury_curve();
    const auto back = parse_rates_csv(rates_to_csv(c));
    ASSERT_EQ(back.knots().size(), c.knots().size());
    for (std::size_t i = 0; i < c.knots().size(); ++i) {
        EXPECT_NEAR(back.knots()[i].first, c.knots()[i].first, 1e-12);
        EXPECT_NEAR(back.knots()[i].second, c.knots()[i].second, 1e-12);
    }
    EXPECT_THROW(parse_rates_csv("weeks,rate\n4,4.2\n"), std::invalid_argument);
}

TEST(Parity, PutCallInverse) {
    const double s = 4500, k = 4400, r = 0.042, tau = 0.25;
    const double put = 80.0;
    const double call = put_to_call(put, s, k, r, tau);
    EXPECT_NEAR(call, put + s - k * std::exp(-r * tau), 1e-9);
    EXPECT_NEAR(call_to_put(call, s, k, r, tau), put, 1e-9);
}

TEST(AssembleTarget, SingleQuote) {
    const auto t = assemble_target({{OptionType::Put, 4400.0, 73, 50.0}}, 4500.0, default_treasury_curve());
    ASSERT_EQ(t.target.size(), 1u);
    const double tau = 73 / 365.0;
    EXPECT_DOUBLE_EQ(t.target.cells[0].tau, tau);
    EXPECT_NEAR(t.target.prices[0], 50.0 + 4500.0 - 4400.0 * std::exp(-t.ctx.rate(tau) * tau), 1e-9);
}

TEST(AssembleTarget, EmptyThrows) {
    EXPECT_THROW(assemble_target({}, 4500.0, default_treasury_curve()), std::invalid_argument);
}

TEST(FilterQuotes, WindowBounds) {
    const std::vector<OptionQuote> q{{OptionType::Call, 100.0, 2, 1.0},
                                     {OptionType::Call, 100.0, 3, 1.0},
                                     {OptionType::Call, 100.0, 255, 1.0},
                                     {OptionType::Call, 100.0, 256, 1.0},
                                     {OptionType::Call, 100.0 * std::exp(0.8), 30, 1.0},
                                     {OptionType::Put, 100.0 * std::exp(-3.4), 30, 1.0}};
    const auto kept = filter_quotes(q, 100.0);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].expiry_days, 3);
    EXPECT_EQ(kept[1].expiry_days, 255);
}

TEST(InterpolateToGrid, ExactOnKnotsAndLinearBetween) {
    CalibrationTarget t;
    // price = 2 ln K + 10 tau on two slices: bilinear in (ln K, tau) reproduces it exactly.
    for (double tau : {0.1, 0.5}) {
        for (double k : {80.0, 100.0, 120.0}) {
            t.cells.push_back({k, tau});
            t.prices.push_back(2.0 * std::log(k) + 10.0 * tau);
        }
    }
    SurfaceGrid g{{80.0, 90.0, 110.0, 120.0}, {0.1, 0.3, 0.5}};
    const auto out = interpolate_to_grid(t, g);
    for (std::size_t i = 0; i < g.n_strikes(); ++i) {
        for (std::size_t j = 0; j < g.n_maturities(); ++j) {
            EXPECT_NEAR(out[i * 3 + j], 2.0 * std::log(g.strikes[i]) + 10.0 * g.maturities[j], 1e-12);
        }
    }
    const SurfaceGrid outside{{50.0, 200.0}, {0.01, 2.0}};
    const auto flat = interpolate_to_grid(t, outside);
    EXPECT_NEAR(flat[0], 2.0 * std::log(80.0) + 1.0, 1e-12);
    EXPECT_NEAR(flat[3], 2.0 * std::log(120.0) + 5.0, 1e-12);
}

TEST(SynthesizeChain, OutOfTheMoneyAndRepricesThroughParity) {
    const HestonParams p{2.0, 0.05, 0.6, -0.7, 0.03};
    const MarketContext ctx{4500.0, default_treasury_curve()};
    const auto chain = synthesize_chain(p, ctx);
    ASSERT_FALSE(chain.empty());
    for (const auto& q : chain) {
        EXPECT_EQ(q.type == OptionType::Put, q.strike < ctx.spot);
        EXPECT_GE(q.mid, 0.05);
        EXPECT_NEAR(std::fmod(q.strike, 5.0), 0.0, 1e-9);
    }
    const auto t = assemble_target(chain, ctx.spot, ctx.rate_curve);
    // Tick rounding bounds the loss at the true parameters.
    EXPECT_LT(calibration_loss(p, t.target, t.ctx), 0.005 * 0.005 + 1e-12);
}

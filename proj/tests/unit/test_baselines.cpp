#include "coevo/baselines.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace coevo;

namespace {

const HestonParams kTruth{1.5, 0.06, 0.5, -0.5, 0.05};

CoevoProblem problem() {
    const MarketContext ctx{100.0, RateCurve::flat(0.02)};
    const auto grid = SurfaceGrid::synthetic(100.0, 5, 3);
    return CoevoProblem::from_surface(price_surface(kTruth, ctx, grid), ctx, ParamBox::table_default());
}

}  // namespace

TEST(FdGradient, QuadraticInteriorAndNearBounds) {
    const auto box = ParamBox::table_default();
    const HestonParams c{2.0, 0.3, 0.5, -0.4, 0.2};
    const std::array<double, kNumParams> w{1.0, 10.0, 3.0, 2.0, 5.0};
    const Objective f = [&](const HestonParams& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < kNumParams; ++i) s += w[i] * (p[i] - c[i]) * (p[i] - c[i]);
        return s;
    };
    for (const HestonParams& p : {HestonParams{1.0, 0.5, 0.7, -0.1, 0.6}, HestonParams{5.0, 0.0, 0.1, 0.0, 1.0}}) {
        for (int order : {2, 4}) {
            const auto g = fd_gradient(f, p, box, 1e-5, order);
            for (std::size_t i = 0; i < kNumParams; ++i) {
                EXPECT_NEAR(g[i], 2.0 * w[i] * (p[i] - c[i]), 1e-4 * (1.0 + std::abs(g[i]))) << i << " order " << order;
            }
        }
    }
}

TEST(Lbfgs, QuadraticBowl) {
    const auto box = ParamBox::table_default();
    const HestonParams c{2.0, 0.3, 0.5, -0.4, 0.2};
    const Objective f = [&](const HestonParams& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < kNumParams; ++i) s += (p[i] - c[i]) * (p[i] - c[i]) / (box.range(i) * box.range(i));
        return s;
    };
    const auto r = run_lbfgs(f, box_midpoint(box), box);
    for (std::size_t i = 0; i < kNumParams; ++i) EXPECT_NEAR(r.params[i], c[i], 1e-4 * box.range(i));
    EXPECT_LT(r.final_mse, 1e-10);
}

TEST(Lbfgs, ActiveBound) {
    const auto box = ParamBox::table_default();
    const Objective f = [](const HestonParams& p) { return (p.rho - 0.5) * (p.rho - 0.5); };
    const auto r = run_lbfgs(f, box_midpoint(box), box);
    EXPECT_DOUBLE_EQ(r.params.rho, 0.0);
}

TEST(Lbfgs, StationaryStart) {
    const auto pr = problem();
    const LossEvaluator eval(pr.target, pr.ctx);
    const auto r = run_lbfgs(eval, kTruth, pr.box);
    EXPECT_LT(r.final_mse, 1e-12);
    EXPECT_LE(r.final_mse, r.start_mse);
}

TEST(Lbfgs, RecoversFreeParameterAgainstGridSearch) {
    const auto pr = problem();
    const LossEvaluator eval(pr.target, pr.ctx);
    LbfgsConfig cfg;
    cfg.free = {false, false, false, false, true};
    HestonParams start = kTruth;
    start.v0 = 0.2;
    const auto r = run_lbfgs(eval, start, pr.box, cfg);
    // Dense grid search oracle on v0 alone.
    double best_v = 0.0, best = INFINITY;
    for (int i = 0; i <= 4000; ++i) {
        HestonParams p = kTruth;
        p.v0 = 0.01 + 0.1 * i / 4000.0;
        const double l = eval(p);
        if (l < best) {
            best = l;
            best_v = p.v0;
        }
    }
    EXPECT_NEAR(r.params.v0, best_v, 1e-4);
    EXPECT_NEAR(r.params.kappa, kTruth.kappa, 1e-12);
    EXPECT_NEAR(r.params.rho, kTruth.rho, 1e-12);
}

TEST(Lbfgs, NeverWorseThanStart) {
    const auto pr = problem();
    const LossEvaluator eval(pr.target, pr.ctx);
    Rng rng(3);
    LbfgsConfig cfg;
    cfg.max_iters = 15;
    for (const auto& p : sample_uniform(pr.box, 4, rng)) {
        const auto r = run_lbfgs(eval, p, pr.box, cfg);
        EXPECT_LE(r.final_mse, r.start_mse);
        EXPECT_TRUE(pr.box.contains(r.params));
    }
}

TEST(FirstGenerationAt, Threshold) {
    std::vector<GenerationRecord> rows(3);
    for (std::size_t i = 0; i < 3; ++i) {
        rows[i].generation = i + 1;
        rows[i].best_mse = 3.0 - static_cast<double>(i);
    }
    EXPECT_EQ(first_generation_at(rows, 2.0), 2u);
    EXPECT_EQ(first_generation_at(rows, INFINITY), 1u);
    EXPECT_FALSE(first_generation_at(rows, 0.5).has_value());
}

TEST(TimeToThreshold, TrivialAndUnreachable) {
    const auto pr = problem();
    CoevoConfig cfg;
    cfg.ga.population_size = 10;
    cfg.nn.population_size = 3;
    cfg.nn.initial_widths = {8};
    EXPECT_EQ(time_to_threshold(pr, cfg, 1, INFINITY, 5), 1u);
    EXPECT_FALSE(time_to_threshold(pr, cfg, 1, 0.0, 3).has_value());
}

TEST(TttCsv, CensoredRows) {
    std::vector<TttRecord> rows(2);
    rows[0] = {0, 4.0, 1e-6, 12, 37};
    rows[1] = {1, 5.0, 2e-6, 20, std::nullopt};
    const auto csv = ttt_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial_id,lbfgs_mse,lbfgs_iters,ttt_generation,lbfgs_start_mse,censored");
    EXPECT_NE(csv.find(",37,"), std::string::npos);
    EXPECT_NE(csv.find(",NA,"), std::string::npos);
}

TEST(PlainGa, TelemetryRowsAndElitism) {
    const auto pr = problem();
    GaConfig cfg;
    const auto run = run_plain_ga(pr, cfg, 10, 9, true);
    ASSERT_EQ(run.telemetry.size(), 10u);
    for (std::size_t g = 1; g < run.telemetry.size(); ++g) {
        EXPECT_LE(run.telemetry[g].best_mse, run.telemetry[g - 1].best_mse);
    }
    EXPECT_LE(run.history.size(), 100u);
    EXPECT_FALSE(run.history.empty());
    for (const auto& s : run.history) EXPECT_TRUE(pr.box.contains(s.params));
}

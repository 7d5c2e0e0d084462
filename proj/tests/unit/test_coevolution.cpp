#include "coevo/baselines.hpp"
#include "coevo/coevolution.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace coevo;

namespace {

const HestonParams kTruth{2.0, 0.05, 0.4, -0.6, 0.04};

CoevoProblem small_problem() {
    const MarketContext ctx{100.0, RateCurve::flat(0.01)};
    const auto grid = SurfaceGrid::synthetic(100.0, 4, 3);
    return CoevoProblem::from_surface(price_surface(kTruth, ctx, grid), ctx, ParamBox::table_default());
}

CoevoConfig small_config(std::size_t generations) {
    CoevoConfig cfg;
    cfg.generations = generations;
    cfg.ga.population_size = 20;
    cfg.nn.population_size = 6;
    cfg.nn.initial_widths = {16, 8};
    cfg.nn.train.batch_size = 16;
    return cfg;
}

}  // namespace

TEST(EliteDataset, SizeAndSelfConsistency) {
    const auto problem = small_problem();
    const LossEvaluator eval(problem.target, problem.ctx);
    GaConfig cfg;
    Rng rng(1);
    auto state = init_population(cfg, problem.box, eval, rng);
    state.population[0] = make_individual(kTruth, eval);
    const auto d = build_elite_dataset(state.population, 0.2, problem.ctx, problem.grid, problem.quad);
    EXPECT_LE(d.size(), 10u);
    ASSERT_FALSE(d.empty());
    const auto it = std::ranges::find_if(d, [](const SurfaceSample& s) { return s.params == kTruth; });
    ASSERT_NE(it, d.end());
    for (std::size_t i = 0; i < it->surface.size(); ++i) EXPECT_NEAR(it->surface[i], problem.target.prices[i], 1e-12);
}

TEST(ScoreNetwork, DirectScoreIsCalibrationLoss) {
    const auto problem = small_problem();
    const LossEvaluator eval(problem.target, problem.ctx);
    Rng rng(2);
    NetMember m;
    m.net = MlpGenome::create(problem.grid.size(), {8}, Activation::ReLU, rng);
    const auto norm = NormalizationSpec::identity(problem.grid.size(), problem.ctx.spot);
    score_network(m, problem, norm, Dataset{}, eval);
    EXPECT_EQ(m.direct_score, calibration_loss(m.prediction, problem.target, problem.ctx));
    EXPECT_TRUE(std::isnan(m.surrogate_mse));

    const Dataset inc{{problem.net_input, kTruth}};
    score_network(m, problem, norm, inc, eval);
    EXPECT_TRUE(std::isfinite(m.surrogate_mse));
    const double carried = m.surrogate_mse;
    score_network(m, problem, norm, Dataset{}, eval);
    EXPECT_EQ(m.surrogate_mse, carried);
}

TEST(ScoreNetwork, PerfectInverseScoresZero) {
    const auto problem = small_problem();
    const LossEvaluator eval(problem.target, problem.ctx);
    Rng rng(3);
    NetMember m;
    m.net = MlpGenome::create(problem.grid.size(), {4}, Activation::ReLU, rng);
    // Zero weights plus output biases at logit(u*) make the net emit kTruth for any input.
    for (auto& l : m.net.layers) {
        l.weights.setZero();
        l.bias.setZero();
    }
    const auto u = problem.box.to_unit(kTruth);
    for (std::size_t k = 0; k < kNumParams; ++k) m.net.layers.back().bias(static_cast<Eigen::Index>(k)) = std::log(u[k] / (1.0 - u[k]));
    score_network(m, problem, NormalizationSpec::identity(problem.grid.size(), 100.0), Dataset{}, eval);
    EXPECT_LT(m.direct_score, 1e-12);
}

TEST(EvolveNetworks, SurvivorsAndOffspring) {
    NeuroConfig cfg;
    Rng rng(4);
    std::vector<NetMember> nets(20);
    for (std::size_t i = 0; i < nets.size(); ++i) {
        nets[i].id = i;
        nets[i].net = MlpGenome::create(5, {8}, Activation::ReLU, rng);
        nets[i].direct_score = static_cast<double>(20 - i);
    }
    std::size_t next = 20;
    const auto out = evolve_networks(nets, cfg, next, rng);
    ASSERT_EQ(out.size(), 20u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out[i].id, 19 - i);
    for (std::size_t i = 4; i < 20; ++i) EXPECT_GE(out[i].id, 20u);
    EXPECT_EQ(next, 36u);
}

TEST(EvolveNetworks, ClonesWhenMutationsDisabled) {
    NeuroConfig cfg;
    cfg.weight_mut_prob = 0.0;
    cfg.arch_mut_prob = 0.0;
    Rng rng(5);
    const auto base = MlpGenome::create(5, {8}, Activation::ReLU, rng);
    std::vector<NetMember> nets(20);
    for (std::size_t i = 0; i < nets.size(); ++i) {
        nets[i].id = i;
        nets[i].net = base;
        nets[i].direct_score = 1.0;
    }
    std::size_t next = 20;
    for (const auto& m : evolve_networks(nets, cfg, next, rng)) {
        for (std::size_t l = 0; l < base.layers.size(); ++l) EXPECT_EQ(m.net.layers[l].weights, base.layers[l].weights);
    }
}

TEST(InjectSeeds, ReplacesWorstAndSparesElites) {
    const auto problem = small_problem();
    const LossEvaluator eval(problem.target, problem.ctx);
    GaConfig ga;
    Rng rng(6);
    auto state = init_population(ga, problem.box, eval, rng);
    const auto before = state.population;
    std::vector<NetMember> nets(3);
    for (auto& m : nets) {
        m.prediction = kTruth;
        m.direct_score = 0.0;
    }
    InjectionConfig inj;
    inj.noise_std = 0.0;
    const auto rec = inject_seeds(state, nets, ga, inj, problem.box, eval, rng);
    EXPECT_EQ(rec.replaced_indices.size(), 10u);
    EXPECT_EQ(state.population.size(), 50u);
    for (auto e : rec.elite_indices) {
        EXPECT_TRUE(std::ranges::find(rec.replaced_indices, e) == rec.replaced_indices.end());
        EXPECT_EQ(state.population[e].params, before[e].params);
    }
    for (auto r : rec.replaced_indices) EXPECT_EQ(state.population[r].params, clamp(kTruth, problem.box));
    for (const auto& ind : state.population) EXPECT_TRUE(problem.box.contains(ind.params));
}

TEST(InjectSeeds, SkipsNetworksWithoutScore) {
    const auto problem = small_problem();
    const LossEvaluator eval(problem.target, problem.ctx);
    GaConfig ga;
    Rng rng(7);
    auto state = init_population(ga, problem.box, eval, rng);
    std::vector<NetMember> nets(2);
    const auto rec = inject_seeds(state, nets, ga, {}, problem.box, eval, rng);
    EXPECT_TRUE(rec.replaced_indices.empty());
}

TEST(Coevolution, ZeroGenerations) {
    const auto state = run_coevolution(small_problem(), small_config(0), 1);
    EXPECT_TRUE(state.telemetry.convergence.empty());
    EXPECT_EQ(state.ga.population.size(), 20u);
    EXPECT_EQ(state.nets.size(), 6u);
}

TEST(Coevolution, TelemetryInvariants) {
    const auto cfg = small_config(10);
    const auto state = run_coevolution(small_problem(), cfg, 2);
    const auto& t = state.telemetry;
    ASSERT_EQ(t.convergence.size(), 10u);
    for (std::size_t g = 0; g < 10; ++g) EXPECT_EQ(t.convergence[g].generation, g + 1);
    for (std::size_t g = 1; g < 10; ++g) EXPECT_LE(t.convergence[g].best_mse, t.convergence[g - 1].best_mse);
    EXPECT_TRUE(validate_telemetry(t, 20, 6).empty());
    std::size_t total = 0;
    for (const auto& row : t.dataset_log) {
        EXPECT_LE(row.increment, 4u);
        total += row.increment;
        EXPECT_EQ(row.cumulative, total);
    }
    EXPECT_EQ(state.cumulative.size(), total);
    EXPECT_EQ(t.learning_curves.size() % 7, 0u);
}

TEST(Coevolution, Deterministic) {
    const auto cfg = small_config(4);
    const auto a = run_coevolution(small_problem(), cfg, 3);
    const auto b = run_coevolution(small_problem(), cfg, 3);
    ASSERT_EQ(a.telemetry.convergence.size(), b.telemetry.convergence.size());
    for (std::size_t g = 0; g < a.telemetry.convergence.size(); ++g) {
        EXPECT_EQ(a.telemetry.convergence[g].best_mse, b.telemetry.convergence[g].best_mse);
        EXPECT_EQ(a.telemetry.convergence[g].best_params, b.telemetry.convergence[g].best_params);
    }
    EXPECT_EQ(nn_fitness_csv(a.telemetry.nn_fitness), nn_fitness_csv(b.telemetry.nn_fitness));
    EXPECT_EQ(learning_curves_csv(a.telemetry.learning_curves), learning_curves_csv(b.telemetry.learning_curves));
}

TEST(Coevolution, NetworksOffEqualsPlainGa) {
    auto cfg = small_config(8);
    cfg.networks = false;
    const auto problem = small_problem();
    const auto co = run_coevolution(problem, cfg, 4);
    const auto ga = run_plain_ga(problem, cfg.ga, 8, 4);
    ASSERT_EQ(co.telemetry.convergence.size(), ga.telemetry.size());
    for (std::size_t g = 0; g < ga.telemetry.size(); ++g) {
        EXPECT_EQ(co.telemetry.convergence[g].best_mse, ga.telemetry[g].best_mse);
        EXPECT_EQ(co.telemetry.convergence[g].best_params, ga.telemetry[g].best_params);
    }
}

TEST(ValidateTelemetry, FlagsViolations) {
    CoevoTelemetry t;
    GenerationRecord a, b;
    a.generation = 1;
    a.best_mse = 1.0;
    b.generation = 2;
    b.best_mse = 2.0;
    t.convergence = {a, b};
    t.population_sizes = {10, 9};
    t.network_counts = {3, 3};
    InjectionRecord inj;
    inj.elite_indices = {0, 1};
    inj.replaced_indices = {1, 5};
    t.injections = {inj};
    EXPECT_GE(validate_telemetry(t, 10, 3).size(), 3u);
}

TEST(CsvHeaders, TelemetryFiles) {
    auto header = [](const std::string& csv) { return csv.substr(0, csv.find('\n')); };
    EXPECT_EQ(header(nn_fitness_csv({})),
              "generation,net_id,architecture,activation,direct_mse,direct_rmse,surrogate_mse,kappa,lambda,sigma,rho,v0");
    EXPECT_EQ(header(learning_curves_csv({})), "generation,epoch,train_mse,val_mse,net_id");
    EXPECT_EQ(header(dataset_log_csv({})), "generation,increment,cumulative,skipped");
}

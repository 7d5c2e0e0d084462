#include "coevo/coevolution.hpp"

#include "coevo/log.hpp"
#include "coevo/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coevo {

namespace {

double tie_key(double x) { return std::isnan(x) ? kSentinelLoss : x; }

void reinitialize(NetMember& m, Rng& rng) {
    m.net = MlpGenome::create(m.net.input_dim, m.net.widths, m.net.activation, rng);
    m.adam.reset();
}

NetMember new_member(MlpGenome net, std::size_t& next_id) {
    NetMember m;
    m.id = next_id++;
    m.net = std::move(net);
    return m;
}

}  // namespace

void InjectionConfig::validate() const {
    if (!(inject_fraction >= 0.0 && inject_fraction <= 1.0)) {
        throw std::invalid_argument("inject fraction must be in [0, 1]");
    }
    if (!(noise_std >= 0.0)) throw std::invalid_argument("inject noise must be >= 0");
}

CoevoProblem CoevoProblem::from_surface(const PriceSurface& target, const MarketContext& ctx, const ParamBox& box,
                                        const QuadratureSpec& quad) {
    return {CalibrationTarget::from_surface(target), target.prices, target.grid, ctx, box, quad};
}

void CoevoProblem::validate() const {
    if (target.cells.empty()) throw std::invalid_argument("calibration target is empty");
    if (target.cells.size() != target.prices.size()) throw std::invalid_argument("target cell/price size mismatch");
    grid.validate();
    if (net_input.size() != grid.size()) throw std::invalid_argument("network input does not match grid size");
    ctx.validate();
    box.validate();
    quad.validate();
}

void CoevoConfig::validate() const {
    ga.validate();
    nn.validate();
    inj.validate();
}

bool better_network(const NetMember& a, const NetMember& b) {
    if (a.direct_score != b.direct_score) return a.direct_score < b.direct_score;
    return tie_key(a.surrogate_mse) < tie_key(b.surrogate_mse);
}

Dataset build_elite_dataset(std::span<const GaIndividual> pop, double elite_fraction, const MarketContext& ctx,
                            const SurfaceGrid& grid, const QuadratureSpec& quad, std::size_t threads,
                            std::size_t* skipped) {
    const auto elites = select_elites(pop, elite_fraction);
    std::vector<std::optional<SurfaceSample>> priced(elites.size());
    parallel_for(elites.size(), threads, [&](std::size_t i) {
        try {
            priced[i] = SurfaceSample{price_surface(elites[i].params, ctx, grid, quad).prices, elites[i].params};
        } catch (const PricingError& e) {
            log::info(fmt::format("elite {} skipped: {}", to_string(elites[i].params), e.what()));
        }
    });
    Dataset out;
    std::size_t n_skipped = 0;
    for (auto& s : priced) {
        if (s) out.push_back(std::move(*s));
        else ++n_skipped;
    }
    if (skipped) *skipped = n_skipped;
    return out;
}

void score_network(NetMember& member, const CoevoProblem& problem, const NormalizationSpec& norm,
                   const Dataset& increment, const LossEvaluator& eval) {
    if (member.aborted) {
        member.direct_score = kSentinelLoss;
        return;
    }
    member.prediction = forward(member.net, problem.net_input, norm, problem.box);
    member.direct_score = eval(member.prediction);
    if (!increment.empty()) member.surrogate_mse = unit_mse(member.net, increment, norm, problem.box);
}

std::vector<NetMember> evolve_networks(std::vector<NetMember> nets, const NeuroConfig& cfg, std::size_t& next_id,
                                       Rng& rng) {
    if (nets.empty()) throw std::invalid_argument("network population is empty");
    std::ranges::stable_sort(nets, better_network);
    const std::size_t n_survive = elite_count(cfg.population_size, cfg.survive_fraction);
    const std::size_t n_keep = std::min(n_survive, nets.size());
    nets.resize(n_keep);
    while (nets.size() < cfg.population_size) {
        const auto& a = nets[rng.below(n_keep)].net;
        const auto& b = nets[rng.below(n_keep)].net;
        MlpGenome child = a.same_architecture(b) ? weight_crossover(a, b) : hybrid_crossover(a, b, rng);
        child = mutate_weights(child, cfg.weight_mut_prob, cfg.weight_mut_std, rng);
        mutate_architecture(child, cfg, rng);
        nets.push_back(new_member(std::move(child), next_id));
    }
    return nets;
}

InjectionRecord inject_seeds(GaState& ga, std::span<const NetMember> ranked_nets, const GaConfig& ga_cfg,
                             const InjectionConfig& inj, const ParamBox& box, const LossEvaluator& eval, Rng& rng) {
    InjectionRecord rec;
    rec.generation = ga.generation;
    auto& pop = ga.population;
    const std::size_t n = pop.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t i, std::size_t j) { return pop[i].fitness < pop[j].fitness; });
    const std::size_t n_elite = elite_count(n, ga_cfg.elite_fraction);
    rec.elite_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_elite));

    std::vector<const NetMember*> usable;
    for (const auto& m : ranked_nets) {
        if (std::isfinite(m.direct_score)) usable.push_back(&m);
    }
    const auto wanted = static_cast<std::size_t>(std::ceil(inj.inject_fraction * static_cast<double>(n) - 1e-9));
    const std::size_t k = usable.empty() ? 0 : std::min(wanted, n - n_elite);
    if (k == 0) return rec;

    const auto ranges = box.ranges();
    for (std::size_t j = 0; j < k; ++j) {
        auto a = usable[j % usable.size()]->prediction.to_array();
        for (std::size_t i = 0; i < kNumParams; ++i) a[i] += rng.normal(0.0, inj.noise_std * ranges[i]);
        rec.seeds.push_back(clamp(HestonParams::from_array(a), box));
        rec.replaced_indices.push_back(order[n - 1 - j]);
    }
    const auto seeded = evaluate_all(rec.seeds, eval);
    for (std::size_t j = 0; j < k; ++j) pop[rec.replaced_indices[j]] = seeded[j];
    return rec;
}

CoevoState init_coevolution(const CoevoProblem& problem, const CoevoConfig& cfg, std::uint64_t seed) {
    problem.validate();
    cfg.validate();
    const Rng root(seed);
    CoevoState state;
    state.ga_rng = root.split(kGaStream);
    state.nn_rng = root.split(kNetStream);
    state.inject_rng = root.split(kInjectStream);
    const LossEvaluator eval(problem.target, problem.ctx, problem.quad, cfg.threads);
    state.ga = init_population(cfg.ga, problem.box, eval, state.ga_rng);
    if (cfg.networks) {
        for (std::size_t i = 0; i < cfg.nn.population_size; ++i) {
            auto net = MlpGenome::create(problem.grid.size(), cfg.nn.initial_widths, cfg.nn.initial_activation,
                                         state.nn_rng);
            state.nets.push_back(new_member(std::move(net), state.next_net_id));
        }
    }
    return state;
}

void coevolution_generation(CoevoState& state, const CoevoProblem& problem, const CoevoConfig& cfg) {
    const std::size_t g = state.generation + 1;
    const LossEvaluator eval(problem.target, problem.ctx, problem.quad, cfg.threads);
    auto& tel = state.telemetry;

    if (cfg.networks) {
        std::size_t skipped = 0;
        const Dataset increment = build_elite_dataset(state.ga.population, cfg.ga.elite_fraction, problem.ctx,
                                                      problem.grid, problem.quad, cfg.threads, &skipped);
        state.increment_offsets.push_back(state.cumulative.size());
        state.cumulative.insert(state.cumulative.end(), increment.begin(), increment.end());
        tel.dataset_log.push_back({g, increment.size(), state.cumulative.size(), skipped});
        if (skipped > 0) log::warn(fmt::format("generation {}: {} elite surfaces failed to price", g, skipped));

        if (!state.norm && !increment.empty()) {
            const auto n_fit = std::min(increment.size(), cfg.nn.train.batch_size);
            const Dataset first(increment.begin(), increment.begin() + static_cast<std::ptrdiff_t>(n_fit));
            state.norm = NormalizationSpec::fit(first, problem.ctx.spot);
        }

        auto& nets = state.nets;
        std::vector<std::vector<LearningCurveRow>> curves(nets.size());
        if (state.norm) {
            const auto& norm = *state.norm;
            parallel_for(nets.size(), cfg.threads, [&](std::size_t i) {
                auto& m = nets[i];
                Rng rng = state.nn_rng.split((static_cast<std::uint64_t>(g) << 32) ^ m.id);
                TrainOptions opts = cfg.nn.train;
                auto first = train_epochs(m.net, m.adam, state.cumulative, norm, problem.box, opts, rng);
                TrainingCurve second;
                if (!first.aborted && cfg.nn.feedback_epochs > 0 && !increment.empty()) {
                    opts.learning_rate *= std::pow(opts.decay, static_cast<double>(opts.epochs));
                    opts.epochs = cfg.nn.feedback_epochs;
                    second = train_epochs(m.net, m.adam, increment, norm, problem.box, opts, rng);
                }
                m.aborted = first.aborted || second.aborted;
                std::size_t epoch = 0;
                for (const auto* c : {&first, &second}) {
                    for (std::size_t e = 0; e < c->train_mse.size(); ++e) {
                        curves[i].push_back({g, ++epoch, c->train_mse[e], c->val_mse[e], m.id});
                    }
                }
            });
        }
        for (auto& c : curves) tel.learning_curves.insert(tel.learning_curves.end(), c.begin(), c.end());

        const NormalizationSpec norm =
            state.norm.value_or(NormalizationSpec::identity(problem.grid.size(), problem.ctx.spot));
        parallel_for(nets.size(), cfg.threads,
                     [&](std::size_t i) { score_network(nets[i], problem, norm, increment, eval); });
        for (auto& m : nets) {
            if (!m.aborted) continue;
            log::warn(fmt::format("generation {}: network {} diverged and was reinitialized", g, m.id));
            reinitialize(m, state.nn_rng);
            m.aborted = false;
        }
        for (const auto& m : nets) {
            tel.nn_fitness.push_back({g, m.id, architecture_label(m.net), m.net.activation, m.direct_score,
                                      m.surrogate_mse, m.prediction});
        }

        std::vector<NetMember> ranked = nets;
        std::ranges::stable_sort(ranked, better_network);
        nets = evolve_networks(ranked, cfg.nn, state.next_net_id, state.nn_rng);
        if (cfg.inject) {
            tel.injections.push_back(
                inject_seeds(state.ga, ranked, cfg.ga, cfg.inj, problem.box, eval, state.inject_rng));
            tel.injections.back().generation = g;
        }
    }

    step_generation(state.ga, cfg.ga, problem.box, eval, state.ga_rng);
    state.generation = g;
    tel.convergence.push_back(summarize(state.ga));
    tel.convergence.back().generation = g;
    tel.population_sizes.push_back(state.ga.population.size());
    if (cfg.networks) {
        std::vector<MlpGenome> genomes;
        for (const auto& m : state.nets) genomes.push_back(m.net);
        tel.arch_stats.push_back(architecture_stats(genomes, g));
        tel.network_counts.push_back(state.nets.size());
        if (std::ranges::find(cfg.snapshot_generations, g) != cfg.snapshot_generations.end()) {
            tel.snapshots[g] = std::move(genomes);
        }
    }
}

CoevoState run_coevolution(const CoevoProblem& problem, const CoevoConfig& cfg, std::uint64_t seed) {
    CoevoState state = init_coevolution(problem, cfg, seed);
    for (std::size_t g = 0; g < cfg.generations; ++g) coevolution_generation(state, problem, cfg);
    return state;
}

std::vector<std::string> validate_telemetry(const CoevoTelemetry& t, std::size_t ga_size, std::size_t net_count) {
    std::vector<std::string> issues;
    for (std::size_t i = 1; i < t.convergence.size(); ++i) {
        if (t.convergence[i].best_mse > t.convergence[i - 1].best_mse) {
            issues.push_back(fmt::format("best MSE increased at generation {}", t.convergence[i].generation));
        }
    }
    for (const auto& inj : t.injections) {
        for (auto r : inj.replaced_indices) {
            if (std::ranges::find(inj.elite_indices, r) != inj.elite_indices.end()) {
                issues.push_back(fmt::format("injection displaced elite {} at generation {}", r, inj.generation));
            }
        }
    }
    for (std::size_t i = 0; i < t.population_sizes.size(); ++i) {
        if (t.population_sizes[i] != ga_size) issues.push_back(fmt::format("GA size changed at row {}", i + 1));
    }
    for (std::size_t i = 0; i < t.network_counts.size(); ++i) {
        if (t.network_counts[i] != net_count) issues.push_back(fmt::format("network count changed at row {}", i + 1));
    }
    return issues;
}

std::string nn_fitness_csv(std::span<const NetFitnessRow> rows) {
    std::string out =
        "generation,net_id,architecture,activation,direct_mse,direct_rmse,surrogate_mse,kappa,lambda,sigma,rho,v0\n";
    for (const auto& r : rows) {
        const auto p = r.prediction.to_array();
        out += fmt::format("{},{},\"{}\",{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                           r.generation, r.net_id, r.architecture, activation_name(r.activation), r.direct_score,
                           rmse(r.direct_score), r.surrogate_mse, p[0], p[1], p[2], p[3], p[4]);
    }
    return out;
}

std::string learning_curves_csv(std::span<const LearningCurveRow> rows) {
    std::string out = "generation,epoch,train_mse,val_mse,net_id\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{:.17g},{:.17g},{}\n", r.generation, r.epoch, r.train_mse, r.val_mse, r.net_id);
    }
    return out;
}

std::string dataset_log_csv(std::span<const DatasetLogRow> rows) {
    std::string out = "generation,increment,cumulative,skipped\n";
    for (const auto& r : rows) out += fmt::format("{},{},{},{}\n", r.generation, r.increment, r.cumulative, r.skipped);
    return out;
}

}  // namespace coevo

#include "coevo/ga.hpp"

#include "coevo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coevo {

CalibrationTarget CalibrationTarget::from_surface(const PriceSurface& surface) {
    return {grid_cells(surface.grid), surface.prices};
}

double calibration_loss(const HestonParams& p, const CalibrationTarget& target, const MarketContext& ctx,
                        const QuadratureSpec& quad) {
    if (target.cells.empty()) throw std::invalid_argument("calibration target is empty");
    std::vector<double> model;
    try {
        model = price_cells(p, ctx, target.cells, quad);
    } catch (const PricingError&) {
        return kSentinelLoss;
    }
    double sum = 0.0;
    for (std::size_t m = 0; m < model.size(); ++m) {
        const double diff = model[m] - target.prices[m];
        sum += diff * diff;
    }
    const double loss = sum / static_cast<double>(model.size());
    return std::isfinite(loss) ? loss : kSentinelLoss;
}

double calibration_loss(const HestonParams& p, const PriceSurface& target, const MarketContext& ctx,
                        const QuadratureSpec& quad) {
    return calibration_loss(p, CalibrationTarget::from_surface(target), ctx, quad);
}

LossEvaluator::LossEvaluator(CalibrationTarget target, MarketContext ctx, QuadratureSpec quad, std::size_t threads)
    : target_(std::move(target)), ctx_(std::move(ctx)), quad_(quad), threads_(std::max<std::size_t>(1, threads)) {
    if (target_.cells.empty()) throw std::invalid_argument("calibration target is empty");
    if (target_.cells.size() != target_.prices.size()) throw std::invalid_argument("target cell/price size mismatch");
    ctx_.validate();
    quad_.validate();
}

std::vector<double> LossEvaluator::evaluate_many(std::span<const HestonParams> ps) const {
    std::vector<double> out(ps.size());
    parallel_for(ps.size(), threads_, [&](std::size_t i) { out[i] = (*this)(ps[i]); });
    return out;
}

void GaConfig::validate() const {
    if (population_size < 2) throw std::invalid_argument("population size must be >= 2");
    if (!(elite_fraction > 0.0 && elite_fraction < 1.0)) throw std::invalid_argument("elite fraction must be in (0, 1)");
    for (double prob : {mutation_prob_per_param, crossover_prob, mutation_prob}) {
        if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
    if (!(mutation_scale >= 0.0)) throw std::invalid_argument("mutation scale must be non-negative");
}

std::size_t elite_count(std::size_t n, double fraction) {
    // The small slack keeps e.g. 0.2 * 50 from rounding up to 11.
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

std::vector<GaIndividual> select_elites(std::span<const GaIndividual> pop, double fraction) {
    if (pop.empty()) throw std::invalid_argument("cannot select elites from an empty population");
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    const std::size_t k = elite_count(pop.size(), fraction);
    std::vector<GaIndividual> elites;
    elites.reserve(k);
    for (std::size_t i = 0; i < k; ++i) elites.push_back(pop[order[i]]);
    return elites;
}

HestonParams crossover(const HestonParams& a, const HestonParams& b, const ParamBox& box) {
    const auto x = a.to_array();
    const auto y = b.to_array();
    std::array<double, kNumParams> child{};
    for (std::size_t i = 0; i < kNumParams; ++i) child[i] = 0.5 * (x[i] + y[i]);
    return clamp(HestonParams::from_array(child), box);
}

HestonParams mutate(const HestonParams& p, const ParamBox& box, double per_param_prob, double scale, Rng& rng) {
    auto a = p.to_array();
    for (std::size_t i = 0; i < kNumParams; ++i) {
        if (rng.bernoulli(per_param_prob)) a[i] += rng.normal(0.0, scale * box.range(i));
    }
    return clamp(HestonParams::from_array(a), box);
}

GaIndividual make_individual(const HestonParams& p, const LossEvaluator& eval) {
    return {p, eval(p), feller_satisfied(p)};
}

std::vector<GaIndividual> evaluate_all(std::span<const HestonParams> ps, const LossEvaluator& eval) {
    const auto losses = eval.evaluate_many(ps);
    std::vector<GaIndividual> out;
    out.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) out.push_back({ps[i], losses[i], feller_satisfied(ps[i])});
    return out;
}

GaState init_population(const GaConfig& cfg, const ParamBox& box, const LossEvaluator& eval, Rng& rng) {
    cfg.validate();
    box.validate();
    const auto params =
        cfg.lhs_init ? sample_lhs(box, cfg.population_size, rng) : sample_uniform(box, cfg.population_size, rng);
    return GaState{evaluate_all(params, eval), 0};
}

void step_generation(GaState& state, const GaConfig& cfg, const ParamBox& box, const LossEvaluator& eval, Rng& rng) {
    const std::size_t n = cfg.population_size;
    auto elites = select_elites(state.population, cfg.elite_fraction);
    std::vector<HestonParams> offspring;
    offspring.reserve(n - elites.size());
    while (elites.size() + offspring.size() < n) {
        const auto& first = elites[rng.below(elites.size())].params;
        const auto& second = elites[rng.below(elites.size())].params;
        HestonParams child = rng.bernoulli(cfg.crossover_prob) ? crossover(first, second, box) : first;
        if (rng.bernoulli(cfg.mutation_prob)) {
            child = mutate(child, box, cfg.mutation_prob_per_param, cfg.mutation_scale, rng);
        }
        offspring.push_back(child);
    }
    auto evaluated = evaluate_all(offspring, eval);
    state.population = std::move(elites);
    state.population.insert(state.population.end(), evaluated.begin(), evaluated.end());
    ++state.generation;
}

const GaIndividual& best_individual(const GaState& state) {
    if (state.population.empty()) throw std::logic_error("empty GA population");
    return *std::min_element(state.population.begin(), state.population.end(),
                             [](const auto& a, const auto& b) { return a.fitness < b.fitness; });
}

GenerationRecord summarize(const GaState& state) {
    const auto& best = best_individual(state);
    GenerationRecord rec;
    rec.generation = state.generation;
    rec.best_mse = best.fitness;
    rec.best_rmse = rmse(best.fitness);
    rec.best_params = best.params;
    rec.feller_flag = best.feller_flag;
    double sum = 0.0;
    std::size_t finite = 0;
    for (const auto& ind : state.population) {
        if (std::isfinite(ind.fitness)) {
            sum += rmse(ind.fitness);
            ++finite;
        }
    }
    rec.mean_rmse = finite > 0 ? sum / static_cast<double>(finite) : kSentinelLoss;
    return rec;
}

std::string telemetry_csv(std::span<const GenerationRecord> rows) {
    std::ostringstream out;
    out.precision(12);
    out << "generation,best_mse,best_rmse,mean_rmse,kappa,lambda,sigma,rho,v0,feller_flag\n";
    for (const auto& r : rows) {
        out << r.generation << ',' << r.best_mse << ',' << r.best_rmse << ',' << r.mean_rmse;
        for (double x : r.best_params.to_array()) out << ',' << x;
        out << ',' << (r.feller_flag ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace coevo

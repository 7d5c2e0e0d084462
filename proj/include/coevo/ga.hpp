#pragma once

#include "coevo/params.hpp"
#include "coevo/pricing.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace coevo {

/// Loss assigned to candidates whose pricing fails.
inline constexpr double kSentinelLoss = std::numeric_limits<double>::infinity();

/// Observed call prices on arbitrary (K, tau) cells. A rectangular surface is the
/// special case built by from_surface (cells in row-major order).
struct CalibrationTarget {
    std::vector<PricingCell> cells;
    std::vector<double> prices;

    static CalibrationTarget from_surface(const PriceSurface& surface);
    std::size_t size() const { return cells.size(); }
};

/// Mean squared pricing error over all target cells; PricingError maps to kSentinelLoss.
double calibration_loss(const HestonParams& p, const CalibrationTarget& target, const MarketContext& ctx,
                        const QuadratureSpec& quad = {});
double calibration_loss(const HestonParams& p, const PriceSurface& target, const MarketContext& ctx,
                        const QuadratureSpec& quad = {});

inline double rmse(double mse) { return std::sqrt(mse); }

/// calibration_loss bound to a fixed target. Shared by the GA, the network
/// scorer and L-BFGS so that every method is judged by the same code path.
class LossEvaluator {
public:
    LossEvaluator(CalibrationTarget target, MarketContext ctx, QuadratureSpec quad = {}, std::size_t threads = 1);

    double operator()(const HestonParams& p) const { return calibration_loss(p, target_, ctx_, quad_); }
    std::vector<double> evaluate_many(std::span<const HestonParams> ps) const;

    const CalibrationTarget& target() const { return target_; }
    const MarketContext& context() const { return ctx_; }
    const QuadratureSpec& quadrature() const { return quad_; }
    std::size_t threads() const { return threads_; }

private:
    CalibrationTarget target_;
    MarketContext ctx_;
    QuadratureSpec quad_;
    std::size_t threads_;
};

struct GaIndividual {
    HestonParams params;
    double fitness = kSentinelLoss;
    bool feller_flag = false;
};

struct GaConfig {
    std::size_t population_size = 50;
    std::size_t generations = 10;
    double elite_fraction = 0.2;
    double mutation_prob_per_param = 0.1;
    double crossover_prob = 0.3;
    double mutation_prob = 0.2;
    /// Gaussian mutation std as a fraction of each parameter's box range.
    double mutation_scale = 0.05;
    /// Initialize with Latin hypercube instead of uniform draws.
    bool lhs_init = false;

    void validate() const;
};

/// ceil(fraction * n), at least 1 and at most n.
std::size_t elite_count(std::size_t n, double fraction);

/// The elite_count(|pop|, fraction) lowest-fitness individuals, ascending; ties keep population order.
std::vector<GaIndividual> select_elites(std::span<const GaIndividual> pop, double fraction);

/// Component-wise midpoint of two parents, clamped to the box.
HestonParams crossover(const HestonParams& a, const HestonParams& b, const ParamBox& box);

/// Each component perturbed with probability `per_param_prob` by N(0, (scale * range)^2), then clamped.
HestonParams mutate(const HestonParams& p, const ParamBox& box, double per_param_prob, double scale, Rng& rng);

struct GaState {
    std::vector<GaIndividual> population;
    std::size_t generation = 0;
};

GaIndividual make_individual(const HestonParams& p, const LossEvaluator& eval);
std::vector<GaIndividual> evaluate_all(std::span<const HestonParams> ps, const LossEvaluator& eval);

/// Samples and evaluates the initial population (generation 0).
GaState init_population(const GaConfig& cfg, const ParamBox& box, const LossEvaluator& eval, Rng& rng);

/// One elitist generation: elites copied, remaining slots filled with
/// (optionally crossed, optionally mutated) offspring of uniformly drawn elite parents.
void step_generation(GaState& state, const GaConfig& cfg, const ParamBox& box, const LossEvaluator& eval, Rng& rng);

const GaIndividual& best_individual(const GaState& state);

/// Per-generation telemetry row.
struct GenerationRecord {
    std::size_t generation = 0;
    double best_mse = kSentinelLoss;
    double best_rmse = kSentinelLoss;
    double mean_rmse = kSentinelLoss;
    HestonParams best_params;
    bool feller_flag = false;
};

GenerationRecord summarize(const GaState& state);

/// generation,best_mse,best_rmse,mean_rmse,kappa,lambda,sigma,rho,v0,feller_flag
std::string telemetry_csv(std::span<const GenerationRecord> rows);

}  // namespace coevo

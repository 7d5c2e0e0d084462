#pragma once

#include "coevo/dataset.hpp"
#include "coevo/ga.hpp"
#include "coevo/neuro.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coevo {

/// Child-stream ids shared by every driver so that runs with the same root seed
/// see the same GA trajectory whether or not the network phases are active.
inline constexpr std::uint64_t kGaStream = 1;
inline constexpr std::uint64_t kNetStream = 2;
inline constexpr std::uint64_t kInjectStream = 3;

struct InjectionConfig {
    double inject_fraction = 0.2;
    /// Seed noise std as a fraction of each parameter's box range.
    double noise_std = 0.01;

    void validate() const;
};

/// What the networks see and what they are judged against.
struct CoevoProblem {
    CalibrationTarget target;       ///< loss cells (rectangular or scattered)
    std::vector<double> net_input;  ///< flattened surface on `grid` fed to the networks
    SurfaceGrid grid;               ///< grid used to price elite surfaces
    MarketContext ctx;
    ParamBox box;
    QuadratureSpec quad;

    /// Synthetic case: the target is a rectangular surface on its own grid.
    static CoevoProblem from_surface(const PriceSurface& target, const MarketContext& ctx, const ParamBox& box,
                                     const QuadratureSpec& quad = {});
    void validate() const;
};

struct CoevoConfig {
    GaConfig ga;
    NeuroConfig nn;
    InjectionConfig inj;
    std::size_t generations = 10;
    /// Skip the network phases entirely (plain GA through the same driver).
    bool networks = true;
    bool inject = true;
    std::size_t threads = 1;
    /// Generations at which full network genomes are kept in the telemetry.
    std::vector<std::size_t> snapshot_generations;

    void validate() const;
};

struct NetMember {
    std::size_t id = 0;
    MlpGenome net;
    AdamState adam;
    HestonParams prediction;
    double direct_score = kSentinelLoss;
    double surrogate_mse = std::numeric_limits<double>::quiet_NaN();
    bool aborted = false;
};

/// Orders networks by direct score, then surrogate error, then population index.
bool better_network(const NetMember& a, const NetMember& b);

struct NetFitnessRow {
    std::size_t generation = 0;
    std::size_t net_id = 0;
    std::string architecture;
    Activation activation = Activation::ReLU;
    double direct_score = kSentinelLoss;
    double surrogate_mse = 0.0;
    HestonParams prediction;
};

struct LearningCurveRow {
    std::size_t generation = 0;
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    std::size_t net_id = 0;
};

struct DatasetLogRow {
    std::size_t generation = 0;
    std::size_t increment = 0;
    std::size_t cumulative = 0;
    std::size_t skipped = 0;
};

struct InjectionRecord {
    std::size_t generation = 0;
    std::vector<std::size_t> elite_indices;
    std::vector<std::size_t> replaced_indices;
    std::vector<HestonParams> seeds;
};

struct CoevoTelemetry {
    std::vector<GenerationRecord> convergence;
    std::vector<NetFitnessRow> nn_fitness;
    std::vector<ArchStats> arch_stats;
    std::vector<LearningCurveRow> learning_curves;
    std::vector<DatasetLogRow> dataset_log;
    std::vector<InjectionRecord> injections;
    std::vector<std::size_t> population_sizes;
    std::vector<std::size_t> network_counts;
    std::map<std::size_t, std::vector<MlpGenome>> snapshots;
};

struct CoevoState {
    GaState ga;
    std::vector<NetMember> nets;
    Dataset cumulative;
    /// Index into `cumulative` where each generation's increment starts.
    std::vector<std::size_t> increment_offsets;
    std::optional<NormalizationSpec> norm;
    std::size_t generation = 0;
    std::size_t next_net_id = 0;
    Rng ga_rng{0};
    Rng nn_rng{0};
    Rng inject_rng{0};
    CoevoTelemetry telemetry;
};

/// Prices the elite surfaces. Elites whose pricing fails are skipped and counted in `skipped`.
Dataset build_elite_dataset(std::span<const GaIndividual> pop, double elite_fraction, const MarketContext& ctx,
                            const SurfaceGrid& grid, const QuadratureSpec& quad, std::size_t threads = 1,
                            std::size_t* skipped = nullptr);

/// Fills member.prediction, member.direct_score, and (for a non-empty increment) member.surrogate_mse.
void score_network(NetMember& member, const CoevoProblem& problem, const NormalizationSpec& norm,
                   const Dataset& increment, const LossEvaluator& eval);

/// Survivors by fitness, then offspring from uniformly drawn survivor pairs with
/// crossover, weight mutation and architecture mutation.
std::vector<NetMember> evolve_networks(std::vector<NetMember> nets, const NeuroConfig& cfg, std::size_t& next_id,
                                       Rng& rng);

/// Replaces the worst GA individuals with noisy predictions of the best networks
/// (`ranked_nets` is best first). Never touches the current GA elites.
InjectionRecord inject_seeds(GaState& ga, std::span<const NetMember> ranked_nets, const GaConfig& ga_cfg,
                             const InjectionConfig& inj, const ParamBox& box, const LossEvaluator& eval, Rng& rng);

/// Initial GA population and network population (generation 0).
CoevoState init_coevolution(const CoevoProblem& problem, const CoevoConfig& cfg, std::uint64_t seed);

/// Runs one full generation on an initialized state.
void coevolution_generation(CoevoState& state, const CoevoProblem& problem, const CoevoConfig& cfg);

CoevoState run_coevolution(const CoevoProblem& problem, const CoevoConfig& cfg, std::uint64_t seed);

/// Checks elitism, elite protection and population sizes. Returns one message per violation.
std::vector<std::string> validate_telemetry(const CoevoTelemetry& t, std::size_t ga_size, std::size_t net_count);

std::string nn_fitness_csv(std::span<const NetFitnessRow> rows);
std::string learning_curves_csv(std::span<const LearningCurveRow> rows);
std::string dataset_log_csv(std::span<const DatasetLogRow> rows);

}  // namespace coevo

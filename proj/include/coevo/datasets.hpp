#pragma once

#include "coevo/baselines.hpp"
#include "coevo/coevolution.hpp"

#include <string>
#include <vector>

namespace coevo {

/// Latin hypercube parameters priced on `grid`. A sample that fails to price is redrawn
/// inside the same hypercube cell, so stratification is preserved.
Dataset build_lhs_dataset(const ParamBox& box, std::size_t n, const MarketContext& ctx, const SurfaceGrid& grid,
                          const QuadratureSpec& quad, Rng& rng, std::size_t threads = 1,
                          std::size_t* resampled = nullptr);

/// Uniform draw from the box, redrawn until it prices on `grid` without error.
HestonParams draw_synthetic_target(const ParamBox& box, const MarketContext& ctx, const SurfaceGrid& grid,
                                   const QuadratureSpec& quad, Rng& rng);

/// All elite increments of a finished coevolution run, duplicates included.
Dataset build_ga_history_dataset(const CoevoState& state);

enum class SeedMode { Seeded, Unseeded };
enum class DataSource { Lhs, GaHistory };

std::string seed_mode_name(SeedMode m);
std::string data_source_name(DataSource s);

struct OverfitConfig {
    std::size_t n_lhs = 2000;
    std::size_t n_test = 500;
    /// Generations of the run that produces the GA history.
    std::size_t generations = 50;
    /// Training budget shared by every network.
    std::size_t epochs = 50;
    TrainOptions train;
    std::vector<std::size_t> widths{128, 64};
    Activation activation = Activation::ReLU;
    CoevoConfig coevo;
    std::size_t threads = 1;
};

struct OverfitResult {
    SeedMode mode = SeedMode::Seeded;
    DataSource source = DataSource::Lhs;
    std::size_t dataset_size = 0;
    TrainingCurve curve;
    double final_train = 0.0;
    double final_val = 0.0;
    double gap = 0.0;          ///< final_val - final_train
    double heldout_mse = 0.0;  ///< unit-cube MSE on the fresh LHS test set
};

/// Trains a fixed-architecture network on `data` (7:3 split, duplicates kept on one side) and scores it on `test`.
OverfitResult train_and_evaluate(const Dataset& data, const Dataset& test, const ParamBox& box, double spot,
                                 const OverfitConfig& cfg, Rng& rng);

/// The 2x2 experiment: {seeded, unseeded} GA history versus LHS data on one synthetic target.
std::vector<OverfitResult> overfitting_experiment(const CoevoProblem& problem, const OverfitConfig& cfg,
                                                  const std::vector<SeedMode>& modes, std::uint64_t seed);

std::string overfit_curves_csv(std::span<const OverfitResult> results);
std::string overfit_summary_csv(std::span<const OverfitResult> results);

/// {grid, box, seed, mode, size}
std::string dataset_manifest_json(const SurfaceGrid& grid, const ParamBox& box, std::uint64_t seed,
                                  const std::string& mode, std::size_t size);

}  // namespace coevo

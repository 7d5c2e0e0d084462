#pragma once

#include "coevo/config.hpp"
#include "coevo/datasets.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace coevo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the executable and the tests. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-trial seed derived from the root seed, the command and the trial index.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t command, std::size_t trial);

PriceSurface cmd_price(const ExperimentConfig& cfg);

struct ConvergenceTrial {
    std::size_t target_id = 0;
    HestonParams truth;
    std::vector<GenerationRecord> ga;
    std::vector<GenerationRecord> coevo;
};

/// Plain GA and coevolution on `targets` synthetic surfaces. Writes convergence.csv,
/// convergence_summary.csv and target_<i>/ telemetry.
std::vector<ConvergenceTrial> cmd_convergence(const ExperimentConfig& cfg);

/// Per trial: L-BFGS from the box centre sets the reference, then coevolution runs until it matches it.
std::vector<TttRecord> cmd_ttt(const ExperimentConfig& cfg);

std::vector<OverfitResult> cmd_overfit(const ExperimentConfig& cfg);

std::vector<ArchStats> cmd_archstats(const ExperimentConfig& cfg);

struct ProgressRow {
    std::size_t generation = 0;
    double mse = 0.0;
    HestonParams best;
    /// Relative errors (fractions) when a truth file was given.
    std::optional<std::array<double, kNumParams>> rel_error;
};

struct SliceRow {
    int expiry_days = 0;
    double strike = 0.0;
    double market = 0.0;
    double ga_history_model = 0.0;
    double lhs_model = 0.0;
    double ga_best = 0.0;
};

struct CalibrateRealResult {
    std::vector<ProgressRow> progress;
    std::optional<HestonParams> truth;
    HestonParams ga_history_prediction;
    HestonParams lhs_prediction;
    std::vector<SliceRow> slice;
    std::size_t quotes = 0;
};

CalibrateRealResult cmd_calibrate_real(const ExperimentConfig& cfg);

/// Synthetic chain priced from cfg.params: chain.csv, truth.json and rates.csv.
std::vector<OptionQuote> cmd_make_chain(const ExperimentConfig& cfg);

/// Relative error |estimate - truth| / |truth| per component.
std::array<double, kNumParams> relative_errors(const HestonParams& estimate, const HestonParams& truth);

}  // namespace coevo::cli

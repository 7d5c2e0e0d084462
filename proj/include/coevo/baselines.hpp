#pragma once

#include "coevo/coevolution.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace coevo {

struct PlainGaRun {
    GaState state;
    std::vector<GenerationRecord> telemetry;
    /// Elite surfaces of every generation, in order (filled only when requested).
    Dataset history;
};

/// Elitist GA without networks. Uses the same random stream as run_coevolution
/// for the same seed, so disabling the network phases reproduces it exactly.
PlainGaRun run_plain_ga(const CoevoProblem& problem, const GaConfig& cfg, std::size_t generations, std::uint64_t seed,
                        bool record_history = false, std::size_t threads = 1);

struct LbfgsConfig {
    std::size_t max_iters = 200;
    std::size_t memory = 10;
    /// Finite-difference step as a fraction of each parameter's box range.
    double fd_step = 1e-5;
    double c1 = 1e-4;
    double c2 = 0.9;
    double grad_tol = 1e-8;
    double step_tol = 1e-10;
    std::size_t max_backtracks = 40;
    /// Components with false stay at their starting value.
    std::array<bool, kNumParams> free{true, true, true, true, true};

    void validate() const;
};

struct LbfgsResult {
    HestonParams params;
    double start_mse = kSentinelLoss;
    double final_mse = kSentinelLoss;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
};

using Objective = std::function<double(const HestonParams&)>;

/// Central (order 2) or five-point (order 4) differences of `f` in unit-box coordinates,
/// scaled back to parameter units. Stencils that would leave the box fall back to one-sided differences.
std::array<double, kNumParams> fd_gradient(const Objective& f, const HestonParams& p, const ParamBox& box, double step,
                                           int order = 2);

/// Projected L-BFGS on the box (clamp after every step) with finite-difference gradients.
LbfgsResult run_lbfgs(const Objective& f, const HestonParams& start, const ParamBox& box, const LbfgsConfig& cfg = {});
LbfgsResult run_lbfgs(const LossEvaluator& eval, const HestonParams& start, const ParamBox& box,
                      const LbfgsConfig& cfg = {});

/// Box centre.
HestonParams box_midpoint(const ParamBox& box);

/// First generation whose best MSE is at or below `reference`.
std::optional<std::size_t> first_generation_at(std::span<const GenerationRecord> rows, double reference);

/// Runs coevolution generation by generation until the best MSE reaches `reference`
/// or `max_generations` is exhausted.
std::optional<std::size_t> time_to_threshold(const CoevoProblem& problem, const CoevoConfig& cfg, std::uint64_t seed,
                                             double reference, std::size_t max_generations);

struct TttRecord {
    std::size_t trial_id = 0;
    double lbfgs_start_mse = kSentinelLoss;
    double lbfgs_mse = kSentinelLoss;
    std::size_t lbfgs_iters = 0;
    std::optional<std::size_t> ttt_generation;  ///< empty when censored at the generation budget
};

std::string ttt_csv(std::span<const TttRecord> rows);

}  // namespace coevo

#pragma once

#include "coevo/mlp.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coevo {

struct NeuroConfig {
    std::size_t population_size = 20;
    double survive_fraction = 0.2;
    double weight_mut_prob = 0.1;
    double weight_mut_std = 0.02;
    double arch_mut_prob = 0.05;
    // Relative weights of the four structural mutation kinds.
    double p_add = 0.3;
    double p_remove = 0.3;
    double p_modify = 0.5;
    double p_activation = 0.2;
    TrainOptions train;
    /// Extra epochs per generation on the newest elite increment only.
    std::size_t feedback_epochs = 2;
    std::vector<std::size_t> initial_widths{128, 64};
    Activation initial_activation = Activation::ReLU;

    void validate() const;
};

inline constexpr std::array<std::size_t, 4> kAddWidths = {32, 64, 128, 256};
inline constexpr std::array<std::size_t, 6> kModifyWidths = {16, 32, 64, 128, 256, 512};

enum class ArchMutation { None, AddLayer, RemoveLayer, ModifyWidth, ChangeActivation };

/// Element-wise mean of all weights and biases. Throws std::invalid_argument unless architectures match.
MlpGenome weight_crossover(const MlpGenome& a, const MlpGenome& b);

/// Depth = max, overlapping widths = floor mean, tail widths copied from the deeper parent,
/// activation drawn from the parents. Fresh weights, then parent means on the shared top-left block
/// of every layer both parents have in the same role.
MlpGenome hybrid_crossover(const MlpGenome& a, const MlpGenome& b, Rng& rng);

/// Every scalar weight and bias perturbed with probability `prob` by N(0, std^2).
MlpGenome mutate_weights(const MlpGenome& net, double prob, double std, Rng& rng);

/// With probability cfg.arch_mut_prob applies one structural mutation in place and returns its kind.
ArchMutation mutate_architecture(MlpGenome& net, const NeuroConfig& cfg, Rng& rng);

/// Applies the given structural mutation unconditionally. RemoveLayer requires depth > 1.
void apply_arch_mutation(MlpGenome& net, ArchMutation kind, Rng& rng);

/// "[128,64]"
std::string architecture_label(const MlpGenome& net);

struct ArchStats {
    std::size_t generation = 0;
    double avg_layers = 0.0;
    double avg_nodes = 0.0;
    double std_nodes = 0.0;  ///< population standard deviation
    std::size_t min_nodes = 0;
    std::size_t max_nodes = 0;
    std::string most_common;
    std::size_t frequency = 0;
    std::size_t population = 0;
    Activation primary_activation = Activation::ReLU;
    std::size_t activation_diversity = 0;
};

/// Population summary. Ties in the modal architecture or activation go to the first occurrence.
ArchStats architecture_stats(std::span<const MlpGenome> pop, std::size_t generation = 0);

inline constexpr const char* kArchStatsHeader =
    "Generation,Avg layers,Avg nodes,Std nodes,Min nodes,Max nodes,Most common arch.,Frequency,Primary act.,Act. div.";
inline constexpr const char* kArchSamplesHeader = "NN ID,Architecture,Num layers,Total nodes,Activation";

std::string arch_stats_csv(std::span<const ArchStats> rows);
std::string arch_stats_row(const ArchStats& s);

/// Rows NN-1..NN-n of the given networks; prefixed with a Generation column when `generation` is set.
std::string arch_samples_csv(std::span<const MlpGenome> nets, std::optional<std::size_t> generation = std::nullopt);

/// {input_dim, widths, activation, layers: [{rows, cols, weights (row-major), bias}]}
std::string genome_to_json(const MlpGenome& net);
MlpGenome genome_from_json(const std::string& text);

}  // namespace coevo

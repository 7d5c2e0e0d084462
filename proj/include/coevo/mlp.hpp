#pragma once

#include "coevo/dataset.hpp"
#include "coevo/params.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coevo {

enum class Activation { ReLU, Tanh, LeakyReLU, ELU };

inline constexpr std::array<Activation, 4> kActivations = {Activation::ReLU, Activation::Tanh, Activation::LeakyReLU,
                                                          Activation::ELU};

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
};

/// Evolvable MLP: architecture (depth, widths, activation) plus weights.
/// layers[l] maps d_l -> d_{l+1} with d_0 = input_dim and d_{L+1} = 5.
struct MlpGenome {
    std::size_t input_dim = 0;
    std::vector<std::size_t> widths;
    Activation activation = Activation::ReLU;
    std::vector<DenseLayer> layers;

    /// Fresh network: He-uniform weights for the ReLU family, Xavier-uniform for Tanh, zero biases.
    static MlpGenome create(std::size_t input_dim, std::vector<std::size_t> widths, Activation activation, Rng& rng);

    std::size_t depth() const { return widths.size(); }
    std::size_t total_nodes() const;
    std::size_t parameter_count() const;
    /// Width of the layer feeding layer l (input_dim for l == 0).
    std::size_t fan_in(std::size_t l) const { return l == 0 ? input_dim : widths[l - 1]; }
    /// Output width of layer l (5 for the last).
    std::size_t fan_out(std::size_t l) const { return l < widths.size() ? widths[l] : kNumParams; }

    bool same_architecture(const MlpGenome& other) const {
        return input_dim == other.input_dim && widths == other.widths && activation == other.activation;
    }

    /// Throws std::logic_error if depth is zero, a width is zero, shapes do not chain, or a weight is non-finite.
    void validate() const;
};

/// Re-initializes one layer for the given activation family.
void init_layer(DenseLayer& layer, std::size_t out, std::size_t in, Activation activation, Rng& rng);

/// Input standardization and output box mapping.
/// Inputs: x = (price / spot - shift) / scale per feature. Outputs: logistic into (0, 1), then affine into the box.
struct NormalizationSpec {
    double spot = 100.0;
    std::vector<double> shift;
    std::vector<double> scale;

    /// Per-feature mean/std of the given surfaces (divided by spot); std floored at kMinScale.
    static NormalizationSpec fit(const Dataset& batch, double spot);
    static NormalizationSpec identity(std::size_t dim, double spot = 1.0);
    static constexpr double kMinScale = 1e-2;

    std::size_t dim() const { return shift.size(); }
    Eigen::VectorXd apply(std::span<const double> surface) const;
    Eigen::MatrixXd apply(const Dataset& data) const;
};

/// Unit-cube targets (5 x n) of a dataset under a box.
Eigen::MatrixXd unit_targets(const Dataset& data, const ParamBox& box);

/// Unit-cube outputs (5 x n) for normalized inputs (d0 x n).
Eigen::MatrixXd forward_unit(const MlpGenome& net, const Eigen::MatrixXd& inputs);

/// Predicted parameters for one flattened surface. Always inside the box.
HestonParams forward(const MlpGenome& net, std::span<const double> surface_flat, const NormalizationSpec& norm,
                     const ParamBox& box);

/// Mean squared error in unit-cube coordinates over all samples and the 5 outputs.
double unit_mse(const MlpGenome& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);
double unit_mse(const MlpGenome& net, const Dataset& data, const NormalizationSpec& norm, const ParamBox& box);

struct Gradient {
    double loss = 0.0;
    std::vector<DenseLayer> layers;
};

/// Batch MSE (unit cube) and its analytic gradient by backpropagation.
Gradient loss_and_gradient(const MlpGenome& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct AdamState {
    std::vector<DenseLayer> m;
    std::vector<DenseLayer> v;
    std::size_t steps = 0;

    void reset() { *this = AdamState{}; }
    bool matches(const MlpGenome& net) const;
};

struct TrainOptions {
    std::size_t epochs = 5;
    double learning_rate = 1e-3;
    /// Learning rate multiplier applied after every epoch.
    double decay = 0.9;
    std::size_t batch_size = 64;
    double train_ratio = 0.7;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainingCurve {
    std::vector<double> train_mse;
    std::vector<double> val_mse;  ///< NaN when the validation split is empty
    bool aborted = false;         ///< set when a loss became non-finite
};

/// Adam on unit-cube MSE over a fresh train/validation split of `data`.
/// The moment estimates in `adam` persist across calls while the architecture is unchanged.
TrainingCurve train_epochs(MlpGenome& net, AdamState& adam, const Dataset& data, const NormalizationSpec& norm,
                           const ParamBox& box, const TrainOptions& opts, Rng& rng);

/// Same as above with an explicit, pre-split training and validation set.
TrainingCurve train_epochs(MlpGenome& net, AdamState& adam, const Dataset& train, const Dataset& validation,
                           const NormalizationSpec& norm, const ParamBox& box, const TrainOptions& opts, Rng& rng);

}  // namespace coevo

#include "coevo/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coevo {

namespace {

constexpr double kLeakySlope = 0.01;

void activate(Eigen::MatrixXd& a, Activation act) {
    switch (act) {
        case Activation::ReLU: a = a.cwiseMax(0.0); break;
        case Activation::Tanh: a = a.array().tanh().matrix(); break;
        case Activation::LeakyReLU: a = a.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; }); break;
        case Activation::ELU: a = a.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); }); break;
    }
}

// Derivative expressed through the pre-activation `a` and the output `h`.
Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& h, Activation act) {
    switch (act) {
        case Activation::ReLU: return a.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
        case Activation::Tanh: return (1.0 - h.array().square()).matrix();
        case Activation::LeakyReLU: return a.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; });
        case Activation::ELU: return a.unaryExpr([](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
    }
    return {};
}

Eigen::MatrixXd logistic(const Eigen::MatrixXd& a) {
    return a.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

// Pre-activations and outputs of every layer; outputs.back() holds the unit-cube predictions.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> out;
};

ForwardTrace trace_forward(const MlpGenome& net, const Eigen::MatrixXd& inputs) {
    ForwardTrace t;
    const std::size_t n_layers = net.layers.size();
    t.pre.reserve(n_layers);
    t.out.reserve(n_layers);
    const Eigen::MatrixXd* h = &inputs;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = net.layers[l];
        Eigen::MatrixXd a = layer.weights * (*h);
        a.colwise() += layer.bias;
        t.pre.push_back(a);
        if (l + 1 < n_layers) {
            activate(a, net.activation);
            t.out.push_back(std::move(a));
        } else {
            t.out.push_back(logistic(a));
        }
        h = &t.out.back();
    }
    return t;
}

std::vector<DenseLayer> zeros_like(const MlpGenome& net) {
    std::vector<DenseLayer> z;
    z.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        z.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    }
    return z;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(idx[c]));
    return out;
}

}  // namespace

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::ReLU: return "ReLU";
        case Activation::Tanh: return "Tanh";
        case Activation::LeakyReLU: return "LeakyReLU";
        case Activation::ELU: return "ELU";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    for (auto a : kActivations) {
        if (activation_name(a) == name) return a;
    }
    throw std::invalid_argument("unknown activation: " + std::string(name));
}

void init_layer(DenseLayer& layer, std::size_t out, std::size_t in, Activation activation, Rng& rng) {
    const double fan_in = static_cast<double>(in);
    const double fan_out = static_cast<double>(out);
    const double limit =
        activation == Activation::Tanh ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
    layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
}

MlpGenome MlpGenome::create(std::size_t input_dim, std::vector<std::size_t> widths, Activation activation, Rng& rng) {
    MlpGenome net;
    net.input_dim = input_dim;
    net.widths = std::move(widths);
    net.activation = activation;
    net.layers.resize(net.widths.size() + 1);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        init_layer(net.layers[l], net.fan_out(l), net.fan_in(l), activation, rng);
    }
    net.validate();
    return net;
}

std::size_t MlpGenome::total_nodes() const { return std::accumulate(widths.begin(), widths.end(), std::size_t{0}); }

std::size_t MlpGenome::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

void MlpGenome::validate() const {
    if (input_dim == 0) throw std::logic_error("network input dimension must be positive");
    if (widths.empty()) throw std::logic_error("network needs at least one hidden layer");
    if (layers.size() != widths.size() + 1) throw std::logic_error("layer count does not match depth");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (l < widths.size() && widths[l] == 0) throw std::logic_error("hidden widths must be >= 1");
        const auto& layer = layers[l];
        if (static_cast<std::size_t>(layer.weights.rows()) != fan_out(l) ||
            static_cast<std::size_t>(layer.weights.cols()) != fan_in(l) ||
            static_cast<std::size_t>(layer.bias.size()) != fan_out(l)) {
            throw std::logic_error("layer " + std::to_string(l) + " shape does not chain");
        }
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
            throw std::logic_error("layer " + std::to_string(l) + " has non-finite weights");
        }
    }
}

NormalizationSpec NormalizationSpec::fit(const Dataset& batch, double spot) {
    if (batch.empty()) throw std::invalid_argument("cannot fit normalization on an empty batch");
    if (!(spot > 0.0)) throw std::invalid_argument("spot must be positive");
    const std::size_t dim = batch.front().surface.size();
    NormalizationSpec norm;
    norm.spot = spot;
    norm.shift.assign(dim, 0.0);
    norm.scale.assign(dim, 0.0);
    const double n = static_cast<double>(batch.size());
    for (const auto& s : batch) {
        if (s.surface.size() != dim) throw std::invalid_argument("surfaces of different sizes in batch");
        for (std::size_t i = 0; i < dim; ++i) norm.shift[i] += s.surface[i] / spot / n;
    }
    for (const auto& s : batch) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = s.surface[i] / spot - norm.shift[i];
            norm.scale[i] += d * d / n;
        }
    }
    for (double& sc : norm.scale) sc = std::max(std::sqrt(sc), kMinScale);
    return norm;
}

NormalizationSpec NormalizationSpec::identity(std::size_t dim, double spot) {
    return {spot, std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Eigen::VectorXd NormalizationSpec::apply(std::span<const double> surface) const {
    if (surface.size() != dim()) {
        throw std::invalid_argument("surface has " + std::to_string(surface.size()) + " values, network expects " +
                                    std::to_string(dim()));
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < dim(); ++i) x(static_cast<Eigen::Index>(i)) = (surface[i] / spot - shift[i]) / scale[i];
    return x;
}

Eigen::MatrixXd NormalizationSpec::apply(const Dataset& data) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(data.size()));
    for (std::size_t c = 0; c < data.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = apply(data[c].surface);
    return x;
}

Eigen::MatrixXd unit_targets(const Dataset& data, const ParamBox& box) {
    Eigen::MatrixXd u(static_cast<Eigen::Index>(kNumParams), static_cast<Eigen::Index>(data.size()));
    for (std::size_t c = 0; c < data.size(); ++c) {
        const auto unit = box.to_unit(data[c].params);
        for (std::size_t i = 0; i < kNumParams; ++i) u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = unit[i];
    }
    return u;
}

Eigen::MatrixXd forward_unit(const MlpGenome& net, const Eigen::MatrixXd& inputs) {
    if (static_cast<std::size_t>(inputs.rows()) != net.input_dim) {
        throw std::invalid_argument("input width " + std::to_string(inputs.rows()) + " does not match network input " +
                                    std::to_string(net.input_dim));
    }
    return trace_forward(net, inputs).out.back();
}

HestonParams forward(const MlpGenome& net, std::span<const double> surface_flat, const NormalizationSpec& norm,
                     const ParamBox& box) {
    if (surface_flat.size() != net.input_dim) {
        throw std::invalid_argument("surface has " + std::to_string(surface_flat.size()) +
                                    " values, network expects " + std::to_string(net.input_dim));
    }
    const Eigen::MatrixXd z = forward_unit(net, norm.apply(surface_flat));
    std::array<double, kNumParams> u{};
    for (std::size_t i = 0; i < kNumParams; ++i) u[i] = z(static_cast<Eigen::Index>(i), 0);
    return clamp(box.from_unit(u), box);
}

double unit_mse(const MlpGenome& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    if (inputs.cols() == 0) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::MatrixXd z = forward_unit(net, inputs);
    return (z - targets).squaredNorm() / static_cast<double>(targets.size());
}

double unit_mse(const MlpGenome& net, const Dataset& data, const NormalizationSpec& norm, const ParamBox& box) {
    return unit_mse(net, norm.apply(data), unit_targets(data, box));
}

Gradient loss_and_gradient(const MlpGenome& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    const auto t = trace_forward(net, inputs);
    const Eigen::MatrixXd& z = t.out.back();
    const double count = static_cast<double>(targets.size());
    Gradient g;
    g.loss = (z - targets).squaredNorm() / count;
    g.layers = zeros_like(net);
    // dL/da at the logistic output.
    Eigen::MatrixXd delta = ((2.0 / count) * (z - targets).array() * z.array() * (1.0 - z.array())).matrix();
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const Eigen::MatrixXd& h_prev = l == 0 ? inputs : t.out[l - 1];
        g.layers[l].weights.noalias() = delta * h_prev.transpose();
        g.layers[l].bias = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = net.layers[l].weights.transpose() * delta;
            delta = back.cwiseProduct(activation_derivative(t.pre[l - 1], t.out[l - 1], net.activation));
        }
    }
    return g;
}

bool AdamState::matches(const MlpGenome& net) const {
    if (m.size() != net.layers.size() || v.size() != net.layers.size()) return false;
    for (std::size_t l = 0; l < m.size(); ++l) {
        if (m[l].weights.rows() != net.layers[l].weights.rows() || m[l].weights.cols() != net.layers[l].weights.cols()) {
            return false;
        }
    }
    return true;
}

TrainingCurve train_epochs(MlpGenome& net, AdamState& adam, const Dataset& data, const NormalizationSpec& norm,
                           const ParamBox& box, const TrainOptions& opts, Rng& rng) {
    if (opts.epochs == 0) return {};
    if (data.empty()) throw std::invalid_argument("training dataset is empty");
    const auto [train, validation] = split(data, opts.train_ratio, rng);
    return train_epochs(net, adam, train, validation, norm, box, opts, rng);
}

TrainingCurve train_epochs(MlpGenome& net, AdamState& adam, const Dataset& train, const Dataset& validation,
                           const NormalizationSpec& norm, const ParamBox& box, const TrainOptions& opts, Rng& rng) {
    TrainingCurve curve;
    if (opts.epochs == 0) return curve;
    if (train.empty()) throw std::invalid_argument("training split is empty");
    if (opts.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (!adam.matches(net)) {
        adam.reset();
        adam.m = zeros_like(net);
        adam.v = zeros_like(net);
    }
    const Eigen::MatrixXd x_train = norm.apply(train);
    const Eigen::MatrixXd u_train = unit_targets(train, box);
    const Eigen::MatrixXd x_val = norm.apply(validation);
    const Eigen::MatrixXd u_val = unit_targets(validation, box);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double lr = opts.learning_rate;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const auto batch = std::span(order).subspan(start, std::min(opts.batch_size, order.size() - start));
            const auto g = loss_and_gradient(net, gather_columns(x_train, batch), gather_columns(u_train, batch));
            if (!std::isfinite(g.loss)) {
                curve.aborted = true;
                return curve;
            }
            ++adam.steps;
            const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(adam.steps));
            const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(adam.steps));
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
                    m = opts.beta1 * m + (1.0 - opts.beta1) * grad;
                    v = opts.beta2 * v + (1.0 - opts.beta2) * grad.cwiseProduct(grad);
                    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opts.epsilon);
                };
                update(net.layers[l].weights, adam.m[l].weights, adam.v[l].weights, g.layers[l].weights);
                update(net.layers[l].bias, adam.m[l].bias, adam.v[l].bias, g.layers[l].bias);
            }
        }
        const double train_loss = unit_mse(net, x_train, u_train);
        curve.train_mse.push_back(train_loss);
        curve.val_mse.push_back(unit_mse(net, x_val, u_val));
        if (!std::isfinite(train_loss)) {
            curve.aborted = true;
            return curve;
        }
        lr *= opts.decay;
    }
    return curve;
}

}  // namespace coevo

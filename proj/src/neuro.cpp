#include "coevo/neuro.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coevo {

namespace {

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
}

// Fresh layer of the new shape with the overlapping block of `old` copied in.
DenseLayer resized_layer(const DenseLayer& old, std::size_t out, std::size_t in, Activation act, Rng& rng) {
    DenseLayer fresh;
    init_layer(fresh, out, in, act, rng);
    const auto rows = std::min(fresh.weights.rows(), old.weights.rows());
    const auto cols = std::min(fresh.weights.cols(), old.weights.cols());
    fresh.weights.topLeftCorner(rows, cols) = old.weights.topLeftCorner(rows, cols);
    fresh.bias.head(rows) = old.bias.head(rows);
    return fresh;
}

ArchMutation draw_kind(const NeuroConfig& cfg, std::size_t depth, Rng& rng) {
    const std::array<double, 4> w{cfg.p_add, cfg.p_remove, cfg.p_modify, cfg.p_activation};
    const double total = w[0] + w[1] + w[2] + w[3];
    for (;;) {
        double u = rng.uniform() * total;
        std::size_t k = 0;
        while (k < 3 && u >= w[k]) u -= w[k++];
        const auto kind = static_cast<ArchMutation>(k + 1);
        if (kind == ArchMutation::RemoveLayer && depth <= 1) continue;
        return kind;
    }
}

}  // namespace

void NeuroConfig::validate() const {
    if (population_size < 1) throw std::invalid_argument("network population must be >= 1");
    if (!(survive_fraction > 0.0 && survive_fraction < 1.0)) {
        throw std::invalid_argument("survive fraction must be in (0, 1)");
    }
    check_probability(weight_mut_prob, "weight mutation probability");
    check_probability(arch_mut_prob, "architecture mutation probability");
    if (!(weight_mut_std >= 0.0)) throw std::invalid_argument("weight mutation std must be >= 0");
    for (double w : {p_add, p_remove, p_modify, p_activation}) {
        if (!(w >= 0.0)) throw std::invalid_argument("architecture mutation weights must be >= 0");
    }
    if (p_add + p_modify + p_activation <= 0.0) {
        throw std::invalid_argument("architecture mutation weights cannot all be zero");
    }
    if (train.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (!(train.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(train.train_ratio > 0.0 && train.train_ratio <= 1.0)) {
        throw std::invalid_argument("train ratio must be in (0, 1]");
    }
    if (initial_widths.empty() || std::ranges::find(initial_widths, 0u) != initial_widths.end()) {
        throw std::invalid_argument("initial architecture needs positive widths");
    }
}

MlpGenome weight_crossover(const MlpGenome& a, const MlpGenome& b) {
    if (!a.same_architecture(b)) throw std::invalid_argument("weight crossover needs identical architectures");
    MlpGenome child = a;
    for (std::size_t l = 0; l < child.layers.size(); ++l) {
        child.layers[l].weights = 0.5 * (a.layers[l].weights + b.layers[l].weights);
        child.layers[l].bias = 0.5 * (a.layers[l].bias + b.layers[l].bias);
    }
    return child;
}

MlpGenome hybrid_crossover(const MlpGenome& a, const MlpGenome& b, Rng& rng) {
    if (a.input_dim != b.input_dim) throw std::invalid_argument("parents disagree on input width");
    const std::size_t la = a.depth();
    const std::size_t lb = b.depth();
    const std::size_t depth = std::max(la, lb);
    const MlpGenome& deeper = la >= lb ? a : b;
    std::vector<std::size_t> widths(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        widths[l] = l < std::min(la, lb) ? (a.widths[l] + b.widths[l]) / 2 : deeper.widths[l];
    }
    const Activation act = rng.bernoulli(0.5) ? a.activation : b.activation;
    MlpGenome child = MlpGenome::create(a.input_dim, std::move(widths), act, rng);

    auto blend = [](DenseLayer& c, const DenseLayer& p, const DenseLayer& q) {
        const auto rows = std::min({c.weights.rows(), p.weights.rows(), q.weights.rows()});
        const auto cols = std::min({c.weights.cols(), p.weights.cols(), q.weights.cols()});
        c.weights.topLeftCorner(rows, cols) =
            0.5 * (p.weights.topLeftCorner(rows, cols) + q.weights.topLeftCorner(rows, cols));
        c.bias.head(rows) = 0.5 * (p.bias.head(rows) + q.bias.head(rows));
    };
    for (std::size_t l = 0; l < std::min(la, lb); ++l) blend(child.layers[l], a.layers[l], b.layers[l]);
    blend(child.layers.back(), a.layers.back(), b.layers.back());
    return child;
}

MlpGenome mutate_weights(const MlpGenome& net, double prob, double std, Rng& rng) {
    MlpGenome out = net;
    if (prob <= 0.0) return out;
    auto perturb = [&](double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (rng.bernoulli(prob)) data[i] += rng.normal(0.0, std);
        }
    };
    for (auto& layer : out.layers) {
        perturb(layer.weights.data(), layer.weights.size());
        perturb(layer.bias.data(), layer.bias.size());
    }
    return out;
}

void apply_arch_mutation(MlpGenome& net, ArchMutation kind, Rng& rng) {
    switch (kind) {
        case ArchMutation::None: return;
        case ArchMutation::AddLayer: {
            const std::size_t pos = rng.index(0, net.depth());
            const std::size_t width = kAddWidths[rng.below(kAddWidths.size())];
            DenseLayer fresh;
            init_layer(fresh, width, net.fan_in(pos), net.activation, rng);
            net.widths.insert(net.widths.begin() + static_cast<std::ptrdiff_t>(pos), width);
            net.layers.insert(net.layers.begin() + static_cast<std::ptrdiff_t>(pos), std::move(fresh));
            init_layer(net.layers[pos + 1], net.fan_out(pos + 1), width, net.activation, rng);
            break;
        }
        case ArchMutation::RemoveLayer: {
            if (net.depth() <= 1) throw std::logic_error("cannot remove the only hidden layer");
            const std::size_t pos = rng.below(net.depth());
            net.widths.erase(net.widths.begin() + static_cast<std::ptrdiff_t>(pos));
            net.layers.erase(net.layers.begin() + static_cast<std::ptrdiff_t>(pos));
            init_layer(net.layers[pos], net.fan_out(pos), net.fan_in(pos), net.activation, rng);
            break;
        }
        case ArchMutation::ModifyWidth: {
            const std::size_t pos = rng.below(net.depth());
            const std::size_t width = kModifyWidths[rng.below(kModifyWidths.size())];
            net.widths[pos] = width;
            net.layers[pos] = resized_layer(net.layers[pos], width, net.fan_in(pos), net.activation, rng);
            net.layers[pos + 1] =
                resized_layer(net.layers[pos + 1], net.fan_out(pos + 1), width, net.activation, rng);
            break;
        }
        case ArchMutation::ChangeActivation: {
            std::vector<Activation> others;
            for (auto a : kActivations) {
                if (a != net.activation) others.push_back(a);
            }
            net.activation = others[rng.below(others.size())];
            break;
        }
    }
    net.validate();
}

ArchMutation mutate_architecture(MlpGenome& net, const NeuroConfig& cfg, Rng& rng) {
    if (!rng.bernoulli(cfg.arch_mut_prob)) return ArchMutation::None;
    const auto kind = draw_kind(cfg, net.depth(), rng);
    apply_arch_mutation(net, kind, rng);
    return kind;
}

std::string architecture_label(const MlpGenome& net) { return fmt::format("[{}]", fmt::join(net.widths, ",")); }

ArchStats architecture_stats(std::span<const MlpGenome> pop, std::size_t generation) {
    ArchStats s;
    s.generation = generation;
    s.population = pop.size();
    if (pop.empty()) return s;
    const double n = static_cast<double>(pop.size());
    double layers = 0.0;
    double nodes = 0.0;
    s.min_nodes = pop.front().total_nodes();
    s.max_nodes = s.min_nodes;
    for (const auto& net : pop) {
        layers += static_cast<double>(net.depth());
        nodes += static_cast<double>(net.total_nodes());
        s.min_nodes = std::min(s.min_nodes, net.total_nodes());
        s.max_nodes = std::max(s.max_nodes, net.total_nodes());
    }
    s.avg_layers = layers / n;
    s.avg_nodes = nodes / n;
    double var = 0.0;
    for (const auto& net : pop) var += std::pow(static_cast<double>(net.total_nodes()) - s.avg_nodes, 2);
    s.std_nodes = std::sqrt(var / n);

    // Counts keyed by first-occurrence order so ties resolve to the earliest network.
    std::vector<std::pair<std::string, std::size_t>> archs;
    std::vector<std::pair<Activation, std::size_t>> acts;
    for (const auto& net : pop) {
        const auto label = architecture_label(net);
        auto it = std::ranges::find(archs, label, &std::pair<std::string, std::size_t>::first);
        if (it == archs.end()) archs.emplace_back(label, 1);
        else ++it->second;
        auto jt = std::ranges::find(acts, net.activation, &std::pair<Activation, std::size_t>::first);
        if (jt == acts.end()) acts.emplace_back(net.activation, 1);
        else ++jt->second;
    }
    auto by_count = [](const auto& x, const auto& y) { return x.second < y.second; };
    const auto top_arch = std::ranges::max_element(archs, by_count);
    s.most_common = top_arch->first;
    s.frequency = top_arch->second;
    s.primary_activation = std::ranges::max_element(acts, by_count)->first;
    s.activation_diversity = acts.size();
    return s;
}

std::string arch_stats_row(const ArchStats& s) {
    return fmt::format("{},{:.2f},{:.1f},{:.1f},{},{},\"{}\",{}/{},{},{}", s.generation, s.avg_layers, s.avg_nodes,
                       s.std_nodes, s.min_nodes, s.max_nodes, s.most_common, s.frequency, s.population,
                       activation_name(s.primary_activation), s.activation_diversity);
}

std::string arch_stats_csv(std::span<const ArchStats> rows) {
    std::string out = std::string(kArchStatsHeader) + "\n";
    for (const auto& r : rows) out += arch_stats_row(r) + "\n";
    return out;
}

std::string arch_samples_csv(std::span<const MlpGenome> nets, std::optional<std::size_t> generation) {
    std::string out = generation ? std::string("Generation,") + kArchSamplesHeader : std::string(kArchSamplesHeader);
    out += "\n";
    for (std::size_t i = 0; i < nets.size(); ++i) {
        if (generation) out += fmt::format("{},", *generation);
        out += fmt::format("NN-{},\"{}\",{},{},{}\n", i + 1, architecture_label(nets[i]), nets[i].depth(),
                           nets[i].total_nodes(), activation_name(nets[i].activation));
    }
    return out;
}

std::string genome_to_json(const MlpGenome& net) {
    nlohmann::json j;
    j["input_dim"] = net.input_dim;
    j["widths"] = net.widths;
    j["activation"] = activation_name(net.activation);
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(layer.weights.size()));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
        }
        j["layers"].push_back({{"rows", layer.weights.rows()},
                               {"cols", layer.weights.cols()},
                               {"weights", w},
                               {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
    }
    return j.dump();
}

MlpGenome genome_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    MlpGenome net;
    net.input_dim = j.at("input_dim").get<std::size_t>();
    net.widths = j.at("widths").get<std::vector<std::size_t>>();
    net.activation = parse_activation(j.at("activation").get<std::string>());
    for (const auto& jl : j.at("layers")) {
        const auto rows = jl.at("rows").get<Eigen::Index>();
        const auto cols = jl.at("cols").get<Eigen::Index>();
        const auto w = jl.at("weights").get<std::vector<double>>();
        const auto b = jl.at("bias").get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(rows * cols) || b.size() != static_cast<std::size_t>(rows)) {
            throw std::invalid_argument("genome layer has inconsistent sizes");
        }
        DenseLayer layer;
        layer.weights.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        }
        layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

}  // namespace coevo

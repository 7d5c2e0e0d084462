#include "coevo/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace coevo;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Dataset toy_dataset(std::size_t n, std::size_t dim, Rng& rng) {
    const auto box = ParamBox::table_default();
    Dataset d;
    for (const auto& p : sample_uniform(box, n, rng)) {
        std::vector<double> s(dim);
        const auto u = box.to_unit(p);
        for (std::size_t i = 0; i < dim; ++i) s[i] = u[i % kNumParams] + 0.1 * static_cast<double>(i);
        d.push_back({s, p});
    }
    return d;
}

}  // namespace

class GradientCheck : public ::testing::TestWithParam<Activation> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
    Rng rng(42);
    auto net = MlpGenome::create(4, {6, 5}, GetParam(), rng);
    const auto x = random_matrix(4, 7, rng, -1.0, 1.0);
    const auto y = random_matrix(5, 7, rng, 0.05, 0.95);
    const auto g = loss_and_gradient(net, x, y);
    const double h = 1e-5;
    double diff = 0.0, norm_a = 0.0, norm_fd = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto probe = [&](double& slot, double analytic) {
            const double keep = slot;
            slot = keep + h;
            const double up = unit_mse(net, x, y);
            slot = keep - h;
            const double down = unit_mse(net, x, y);
            slot = keep;
            const double fd = (up - down) / (2.0 * h);
            diff += (fd - analytic) * (fd - analytic);
            norm_a += analytic * analytic;
            norm_fd += fd * fd;
        };
        auto& w = net.layers[l].weights;
        for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], g.layers[l].weights.data()[i]);
        auto& b = net.layers[l].bias;
        for (Eigen::Index i = 0; i < b.size(); ++i) probe(b.data()[i], g.layers[l].bias.data()[i]);
    }
    EXPECT_LT(std::sqrt(diff) / std::max(std::sqrt(norm_a), std::sqrt(norm_fd)), 1e-4);
    EXPECT_NEAR(g.loss, unit_mse(net, x, y), 1e-15);
}

INSTANTIATE_TEST_SUITE_P(AllActivations, GradientCheck, ::testing::ValuesIn(kActivations),
                         [](const auto& info) { return std::string(activation_name(info.param)); });

TEST(Forward, ZeroNetworkGivesBoxCentre) {
    Rng rng(1);
    auto net = MlpGenome::create(3, {4}, Activation::ReLU, rng);
    for (auto& l : net.layers) {
        l.weights.setZero();
        l.bias.setZero();
    }
    const auto box = ParamBox::table_default();
    const std::vector<double> input{1.0, 2.0, 3.0};
    const auto p = forward(net, input, NormalizationSpec::identity(3), box);
    for (std::size_t i = 0; i < kNumParams; ++i) EXPECT_NEAR(p[i], 0.5 * (box.lower[i] + box.upper[i]), 1e-15);
}

TEST(Forward, OutputAlwaysInsideBox) {
    Rng rng(2);
    auto net = MlpGenome::create(3, {8, 8}, Activation::ELU, rng);
    for (auto& l : net.layers) l.weights *= 50.0;
    const auto box = ParamBox::table_default();
    for (int t = 0; t < 50; ++t) {
        const std::vector<double> input{rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)};
        EXPECT_TRUE(box.contains(forward(net, input, NormalizationSpec::identity(3), box)));
    }
}

TEST(Forward, HandComputedSingleUnit) {
    Rng rng(3);
    auto net = MlpGenome::create(1, {1}, Activation::Tanh, rng);
    net.layers[0].weights(0, 0) = 0.7;
    net.layers[0].bias(0) = -0.2;
    const double w2[5] = {0.5, -1.0, 2.0, 0.3, -0.4};
    const double b2[5] = {0.1, 0.2, -0.3, 0.0, 0.05};
    for (int k = 0; k < 5; ++k) {
        net.layers[1].weights(k, 0) = w2[k];
        net.layers[1].bias(k) = b2[k];
    }
    const auto box = ParamBox::table_default();
    const double x = 0.9;
    const auto p = forward(net, std::vector<double>{x}, NormalizationSpec::identity(1), box);
    const double h = std::tanh(0.7 * x - 0.2);
    for (std::size_t k = 0; k < kNumParams; ++k) {
        const double expect = box.lower[k] + box.range(k) * logistic(w2[k] * h + b2[k]);
        EXPECT_NEAR(p[k], expect, 1e-12) << kParamNames[k];
    }
}

TEST(Training, MemorizesSinglePair) {
    Rng rng(4);
    const auto data = toy_dataset(1, 6, rng);
    auto net = MlpGenome::create(6, {32, 16}, Activation::ReLU, rng);
    AdamState adam;
    TrainOptions opts;
    opts.epochs = 200;
    opts.learning_rate = 0.01;
    opts.decay = 1.0;
    const auto norm = NormalizationSpec::identity(6);
    const auto curve = train_epochs(net, adam, data, Dataset{}, norm, ParamBox::table_default(), opts, rng);
    ASSERT_EQ(curve.train_mse.size(), 200u);
    EXPECT_LT(curve.train_mse.back(), 1e-4);
    EXPECT_TRUE(std::isnan(curve.val_mse.back()));
}

TEST(Training, ZeroEpochsLeavesNetUnchanged) {
    Rng rng(5);
    const auto data = toy_dataset(10, 6, rng);
    auto net = MlpGenome::create(6, {8}, Activation::Tanh, rng);
    const auto before = net;
    AdamState adam;
    TrainOptions opts;
    opts.epochs = 0;
    const auto curve =
        train_epochs(net, adam, data, NormalizationSpec::identity(6), ParamBox::table_default(), opts, rng);
    EXPECT_TRUE(curve.train_mse.empty());
    for (std::size_t l = 0; l < net.layers.size(); ++l) EXPECT_EQ(net.layers[l].weights, before.layers[l].weights);
}

TEST(Training, DeterministicUnderSeed) {
    auto run = [] {
        Rng rng(6);
        const auto data = toy_dataset(40, 6, rng);
        auto net = MlpGenome::create(6, {16, 8}, Activation::LeakyReLU, rng);
        AdamState adam;
        TrainOptions opts;
        opts.batch_size = 8;
        const auto norm = NormalizationSpec::fit(data, 1.0);
        return train_epochs(net, adam, data, norm, ParamBox::table_default(), opts, rng);
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a.train_mse, b.train_mse);
    ASSERT_EQ(a.val_mse.size(), b.val_mse.size());
    for (std::size_t i = 0; i < a.val_mse.size(); ++i) EXPECT_EQ(a.val_mse[i], b.val_mse[i]);
}

TEST(Training, LossDecreasesOnLearnableData) {
    Rng rng(7);
    const auto data = toy_dataset(200, 6, rng);
    auto net = MlpGenome::create(6, {32}, Activation::Tanh, rng);
    AdamState adam;
    TrainOptions opts;
    opts.epochs = 30;
    opts.learning_rate = 0.01;
    opts.batch_size = 16;
    const auto curve =
        train_epochs(net, adam, data, NormalizationSpec::fit(data, 1.0), ParamBox::table_default(), opts, rng);
    EXPECT_LT(curve.train_mse.back(), 0.5 * curve.train_mse.front());
    EXPECT_TRUE(adam.matches(net));
}

TEST(Normalization, FitUsesPopulationStdWithFloor) {
    Dataset d{{{2.0, 5.0}, {}}, {{4.0, 5.0}, {}}};
    const auto n = NormalizationSpec::fit(d, 2.0);
    EXPECT_DOUBLE_EQ(n.shift[0], 1.5);
    EXPECT_DOUBLE_EQ(n.scale[0], 0.5);
    EXPECT_DOUBLE_EQ(n.scale[1], NormalizationSpec::kMinScale);
    const auto x = n.apply(std::vector<double>{4.0, 5.0});
    EXPECT_DOUBLE_EQ(x(0), 1.0);
    EXPECT_DOUBLE_EQ(x(1), 0.0);
}

TEST(Genome, ValidateRejectsBrokenShapes) {
    Rng rng(8);
    auto net = MlpGenome::create(3, {4, 2}, Activation::ReLU, rng);
    EXPECT_NO_THROW(net.validate());
    EXPECT_EQ(net.total_nodes(), 6u);
    EXPECT_EQ(net.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2 + 2 * 5 + 5);
    net.layers[1].weights.resize(3, 3);
    EXPECT_THROW(net.validate(), std::logic_error);
}

TEST(Activation, NamesRoundTrip) {
    for (auto a : kActivations) EXPECT_EQ(parse_activation(activation_name(a)), a);
    EXPECT_THROW(parse_activation("sigmoid"), std::invalid_argument);
}

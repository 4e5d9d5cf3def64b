#include <gtest/gtest.h>

#include <cmath>

#include "clicknet/mlp.hpp"
#include "oracles.hpp"

using namespace clicknet;

namespace {

Examples random_examples(std::size_t n, std::size_t dim, Rng& rng) {
    Examples ex;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        ex.add(x, rng.uniform() < 0.5 ? 0.0 : 1.0);
    }
    return ex;
}

/// Smallest |pre-activation| of any hidden unit over the batch.
double closest_kink(const NetworkModel& net, const Examples& data) {
    detail::ForwardTrace trace(net);
    double best = INFINITY;
    for (std::size_t i = 0; i < data.size(); ++i) {
        detail::forward(net, data.row(i), trace);
        for (std::size_t l = 0; l + 1 < trace.pre.size(); ++l)
            for (double z : trace.pre[l]) best = std::min(best, std::abs(z));
    }
    return best;
}

/// Separable toy problem: label 1 when the first coordinate is positive.
Examples toy(std::size_t n, std::uint64_t seed) {
    Rng rng = derive_stream(seed, 0);
    Examples ex;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        ex.add(x, x[0] > 0 ? 1.0 : 0.0);
    }
    return ex;
}

TrainingConfig small_config() {
    TrainingConfig cfg;
    cfg.hidden_layers = {8, 8};
    cfg.max_epochs = 60;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST(Predict, ZeroNetworkGivesOneHalf) {
    const auto net = zero_network({17, 50, 50, 50, 1});
    std::vector<double> x(17, 0.3);
    EXPECT_EQ(predict(net, x), 0.5);
}

TEST(Predict, HandNetwork) {
    auto net = zero_network({1, 1, 1});
    net.layers[0].weights[0] = 1.0;
    net.layers[1].weights[0] = 1.0;
    const std::vector<double> x{2.0};
    EXPECT_NEAR(predict(net, x), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
    EXPECT_NEAR(predict(net, x), 0.8808, 1e-4);
}

TEST(Predict, RejectsWrongDimension) {
    const auto net = zero_network({3, 2, 1});
    const std::vector<double> x(4, 0.0);
    EXPECT_THROW(predict(net, x), ArgumentError);
}

TEST(Predict, OutputStrictlyInsideUnitInterval) {
    Rng rng = derive_stream(8, 8);
    for (int trial = 0; trial < 50; ++trial) {
        auto net = make_network({5, 6, 1}, trial);
        const double scale = trial % 2 ? 1e3 : -1e3;
        for (auto& l : net.layers)
            for (double& w : l.weights) w *= scale;
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform(-50, 50);
        const double y = predict(net, x);
        EXPECT_GT(y, 0.0);
        EXPECT_LT(y, 1.0);
    }
}

TEST(Loss, Examples) {
    EXPECT_EQ(loss(std::vector<double>{0.5}, std::vector<double>{0.5}), 0.0);
    EXPECT_EQ(loss(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
    EXPECT_NEAR(loss(std::vector<double>{0.9}, std::vector<double>{1.0}), 0.01, 1e-15);
    EXPECT_THROW(loss(std::vector<double>{}, std::vector<double>{}), ArgumentError);
    EXPECT_THROW(loss(std::vector<double>{1}, std::vector<double>{1, 2}), ArgumentError);
}

TEST(Gradients, ZeroAtPerfectFit) {
    const auto net = make_network({3, 4, 1}, 5);
    Rng rng = derive_stream(1, 1);
    Examples batch;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> x{rng.uniform(), rng.uniform(), rng.uniform()};
        batch.add(x, predict(net, x));
    }
    const auto g = gradients(net, batch);
    for (const auto& w : g.weights)
        for (double v : w) EXPECT_EQ(v, 0.0);
    for (const auto& b : g.biases)
        for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, MatchFiniteDifferences) {
    // Relative error with a floor so that exactly-zero gradients of dead
    // units compare cleanly.
    auto rel = [](double a, double f) { return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6}); };
    Rng shape_rng = derive_stream(2024, 0);
    int checked = 0;
    for (std::uint64_t trial = 0; checked < 20; ++trial) {
        std::vector<std::size_t> dims{2 + shape_rng.below(5)};
        const std::size_t hidden = 1 + shape_rng.below(3);
        for (std::size_t h = 0; h < hidden; ++h) dims.push_back(2 + shape_rng.below(7));
        dims.push_back(1);
        if (checked == 0) dims = {3, 4, 1};
        NetworkModel net = make_network(dims, 100 + trial);
        for (auto& l : net.layers)
            for (double& b : l.bias) b = shape_rng.uniform(-0.3, 0.3);
        Rng data_rng = derive_stream(200 + trial, 0);
        const Examples batch = random_examples(5, dims.front(), data_rng);
        if (closest_kink(net, batch) < 1e-7) continue;

        const auto g = gradients(net, batch);
        auto f = [&] { return mean_square_error(net, batch); };
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            for (std::size_t i = 0; i < net.layers[li].weights.size(); ++i) {
                const double fd = oracle::central_difference(f, net.layers[li].weights[i], 1e-5);
                EXPECT_LE(rel(g.weights[li][i], fd), 1e-5) << "trial " << trial << " layer " << li << " w" << i;
            }
            for (std::size_t i = 0; i < net.layers[li].bias.size(); ++i) {
                const double fd = oracle::central_difference(f, net.layers[li].bias[i], 1e-5);
                EXPECT_LE(rel(g.biases[li][i], fd), 1e-5) << "trial " << trial << " layer " << li << " b" << i;
            }
        }
        ++checked;
    }
}

TEST(Gradients, RectifierKinkPassesZero) {
    auto net = zero_network({1, 1, 1});
    net.layers[0].weights[0] = 1.0;   // hidden pre-activation = x = 0
    net.layers[1].weights[0] = 2.0;
    Examples batch;
    batch.add(std::vector<double>{0.0}, 1.0);
    const auto g = gradients(net, batch);
    EXPECT_EQ(g.weights[0][0], 0.0);
    EXPECT_EQ(g.biases[0][0], 0.0);
    EXPECT_NE(g.biases[1][0], 0.0);
}

TEST(Adam, FirstStepIsLearningRate) {
    TrainingConfig cfg;
    std::vector<double> p{0.0}, m{0.0}, v{0.0};
    adam_update(p, std::vector<double>{1.0}, m, v, 1, cfg);
    EXPECT_NEAR(p[0], -cfg.learning_rate / (1.0 + cfg.adam_epsilon), 1e-18);
}

TEST(Adam, ZeroGradientLeavesParameter) {
    TrainingConfig cfg;
    std::vector<double> p{0.25}, m{0.0}, v{0.0};
    for (std::uint64_t t = 1; t <= 10; ++t) adam_update(p, std::vector<double>{0.0}, m, v, t, cfg);
    EXPECT_EQ(p[0], 0.25);
}

TEST(Adam, ReversedGradientTakesSmallerStep) {
    TrainingConfig cfg;
    std::vector<double> p{0.0}, m{0.0}, v{0.0};
    adam_update(p, std::vector<double>{1.0}, m, v, 1, cfg);
    const double after_first = p[0];
    adam_update(p, std::vector<double>{-1.0}, m, v, 2, cfg);
    const double second = p[0] - after_first;
    // m_hat = -0.01 / 0.19, v_hat = 1.
    EXPECT_NEAR(second, cfg.learning_rate * (0.01 / 0.19) / (1.0 + cfg.adam_epsilon), 1e-15);
    EXPECT_LT(std::abs(second), cfg.learning_rate);
}

TEST(Train, PlateauStopsQuickly) {
    Examples same;
    for (int i = 0; i < 10; ++i) same.add(std::vector<double>{0.2, 0.4}, 0.5);
    TrainingConfig cfg;
    cfg.patience = 1;
    const auto r = train(zero_network({2, 4, 1}), same, same, cfg, DetectorConfig{});
    EXPECT_EQ(r.history.size(), 2u);
    EXPECT_EQ(r.best_val_mse, 0.0);

    const auto fresh = train(same, same, cfg, DetectorConfig{});
    EXPECT_LT(fresh.history.size(), 200u);
}

TEST(Train, BestSoFarIsMonotoneAndRestored) {
    const auto r = train(toy(200, 1), toy(60, 2), small_config(), DetectorConfig{});
    ASSERT_FALSE(r.history.empty());
    double min_val = INFINITY;
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        if (i > 0) {
            EXPECT_LE(r.history[i].best_val_mse, r.history[i - 1].best_val_mse);
        }
        min_val = std::min(min_val, r.history[i].val_mse);
    }
    EXPECT_EQ(r.best_val_mse, min_val);
    EXPECT_EQ(mean_square_error(r.model, toy(60, 2)), min_val);
    EXPECT_EQ(r.history[r.best_epoch - 1].val_mse, min_val);
    EXPECT_LT(r.best_val_mse, 0.1);
    EXPECT_EQ(r.model.metadata.at("best_epoch"), std::to_string(r.best_epoch));
}

TEST(Train, DeterministicBitForBit) {
    const auto a = train(toy(100, 4), toy(30, 5), small_config(), DetectorConfig{});
    const auto b = train(toy(100, 4), toy(30, 5), small_config(), DetectorConfig{});
    ASSERT_EQ(a.model.layers.size(), b.model.layers.size());
    for (std::size_t l = 0; l < a.model.layers.size(); ++l) {
        EXPECT_EQ(a.model.layers[l].weights, b.model.layers[l].weights);
        EXPECT_EQ(a.model.layers[l].bias, b.model.layers[l].bias);
    }
    EXPECT_EQ(history_csv(a.history), history_csv(b.history));
}

TEST(Train, DivergenceRaisesWithEpoch) {
    Examples bad = toy(20, 6);
    bad.labels[3] = std::nan("");
    try {
        train(bad, toy(10, 7), small_config(), DetectorConfig{});
        FAIL() << "expected a training error";
    } catch (const TrainingError& e) {
        EXPECT_EQ(e.epoch(), 1u);
    }
}

TEST(Train, ValidatesConfig) {
    TrainingConfig cfg;
    cfg.adam_beta1 = 1.0;
    EXPECT_THROW(train(toy(10, 1), toy(5, 2), cfg, DetectorConfig{}), ArgumentError);
    cfg = TrainingConfig{};
    cfg.learning_rate = 0.0;
    EXPECT_THROW(train(toy(10, 1), toy(5, 2), cfg, DetectorConfig{}), ArgumentError);
    cfg = TrainingConfig{};
    cfg.patience = 0;
    EXPECT_THROW(train(toy(10, 1), toy(5, 2), cfg, DetectorConfig{}), ArgumentError);
    EXPECT_THROW(train(Examples{}, toy(5, 2), TrainingConfig{}, DetectorConfig{}), ArgumentError);
}

TEST(Train, HistoryCsv) {
    const std::vector<EpochRecord> h{{1, 0.5, 0.25, 0.25}, {2, 0.125, 0.5, 0.25}};
    EXPECT_EQ(history_csv(h), "epoch,train_mse,val_mse\n1,0.5,0.25\n2,0.125,0.5\n");
}

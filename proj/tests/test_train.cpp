#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tailsitter/train.hpp"

namespace ts = tailsitter;
namespace mlp = ts::mlp;
namespace train = ts::train;
namespace data = ts::data;
using ts::aero::AeroParams;
using ts::aero::CoefficientTable;

namespace {

const CoefficientTable &table() {
    static const CoefficientTable t = CoefficientTable::flat_plate();
    return t;
}

mlp::Network linear_net(double a, double b) {
    mlp::Network net({{2, 1}, {mlp::Activation::linear}}, false);
    net.weights(0)[0] = a;
    net.weights(0)[1] = b;
    return net;
}

mlp::Network paper_net(std::uint64_t seed, bool biases = false) {
    return mlp::init_network(mlp::Topology::paper_default(), seed, mlp::InitScheme::uniform_xavier, biases);
}

double max_abs(const std::vector<double> &v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(LossMse, Examples) {
    const std::vector<double> y{1, 2, 3}, t{1, 2, 3}, u{2, 2, 5};
    EXPECT_EQ(train::loss_mse(y, t), 0.0);
    EXPECT_DOUBLE_EQ(train::loss_mse(u, t), (1.0 + 0.0 + 4.0) / 3.0);
    EXPECT_THROW(train::loss_mse(std::vector<double>{}, std::vector<double>{}), ts::Error);
    EXPECT_THROW(train::loss_mse(y, std::vector<double>{1.0}), ts::Error);
}

TEST(Backprop, ZeroNetworkHasZeroGradient) {
    const mlp::Network net(mlp::Topology::paper_default(), false);
    const auto g = train::backprop_gradients(net, 7.0, 2.0, -3.5);
    EXPECT_EQ(max_abs(g), 0.0);
}

TEST(Backprop, LinearLeastSquares) {
    const double a = 0.7, b = -1.3, x = 2.0, y = 0.5, t = 0.25;
    const auto g = train::backprop_gradients(linear_net(a, b), x, y, t);
    const double r = a * x + b * y - t;
    ASSERT_EQ(g.size(), 2u);
    EXPECT_DOUBLE_EQ(g[0], r * x);
    EXPECT_DOUBLE_EQ(g[1], r * y);
}

TEST(Backprop, OriginInputGivesNoFirstLayerGradient) {
    const auto net = paper_net(3);
    const auto g = train::backprop_gradients(net, 0.0, 0.0, 0.0);
    for (std::size_t i = 0; i < net.weights(0).size(); ++i) {
        EXPECT_EQ(g[net.weight_offset(0) + i], 0.0);
    }
}

TEST(Backprop, BiasGradientsMatchHandChain) {
    // 2 -> 1 (tanh) -> 1 (linear) with biases
    mlp::Network net({{2, 1, 1}, {mlp::Activation::tanh, mlp::Activation::linear}}, true);
    net.weights(0)[0] = 0.3;
    net.weights(0)[1] = -0.2;
    net.weights(1)[0] = 1.5;
    net.biases(0)[0] = 0.1;
    net.biases(1)[0] = -0.4;
    const double x = 1.2, y = 0.7, t = 0.9;
    const double z = 0.3 * x - 0.2 * y + 0.1;
    const double h = std::tanh(z);
    const double out = 1.5 * h - 0.4;
    const double e = out - t;
    const double dz = e * 1.5 * (1 - h * h);
    const auto g = train::backprop_gradients(net, x, y, t);
    EXPECT_NEAR(g[0], dz * x, 1e-15);
    EXPECT_NEAR(g[1], dz * y, 1e-15);
    EXPECT_NEAR(g[2], e * h, 1e-15);
    EXPECT_NEAR(g[3], dz, 1e-15);
    EXPECT_NEAR(g[4], e, 1e-15);
}

TEST(GradientCheck, RandomDefaultNetworks) {
    auto rng = ts::seeded_engine(8);
    for (std::uint64_t k = 0; k < 3; ++k) {
        const auto net = paper_net(100 + k, k == 2);
        for (int j = 0; j < 3; ++j) {
            const double u = ts::uniform_between(rng, 0.0, 18.0);
            const double w = ts::uniform_between(rng, -1.0, 4.0);
            const double target = data::label_sample(u, w, AeroParams{}, table()).f2;
            EXPECT_LT(train::gradient_check(net, u, w, target, 1e-6), 1e-6);
        }
    }
}

TEST(GradientCheck, HandBuiltLinearNetIsExact) {
    EXPECT_LT(train::gradient_check(linear_net(0.7, -1.3), 2.0, 0.5, 0.25, 1e-6), 1e-10);
}

TEST(GradientCheck, LargeStepIsMateriallyWorse) {
    const auto net = paper_net(5);
    const double fine = train::gradient_check(net, 9.0, 1.0, -2.0, 1e-6);
    const double coarse = train::gradient_check(net, 9.0, 1.0, -2.0, 1e-1);
    EXPECT_GT(coarse, 100.0 * fine);
    EXPECT_GT(coarse, 1e-6);
}

TEST(GradientCheck, RejectsNonPositiveStep) {
    EXPECT_THROW(train::gradient_check(linear_net(1, 1), 1.0, 1.0, 0.0, 0.0), ts::Error);
    EXPECT_THROW(train::gradient_check(linear_net(1, 1), 1.0, 1.0, 0.0, -1e-6), ts::Error);
}

TEST(GradientCheck, LongDoubleOracleAlsoWorksOnTameNetworks) {
    EXPECT_LT(train::gradient_check<long double>(linear_net(0.7, -1.3), 2.0, 0.5, 0.25, 1e-6), 1e-9);
}

TEST(SgdEpoch, ZeroLearningRateLeavesNetworkUnchanged) {
    const auto samples = data::generate_dataset(200, 4, {}, AeroParams{}, table()).samples;
    auto net = paper_net(9);
    const auto before = net;
    train::TrainConfig cfg;
    cfg.learning_rate = 0.0;
    const auto r = train::sgd_epoch(net, samples, train::Target::f1, cfg);
    EXPECT_EQ(net, before);
    EXPECT_EQ(r.max_weight_delta, 0.0);
    std::vector<double> y, t;
    for (const auto &s : samples) {
        y.push_back(mlp::forward(net, s.u, s.w));
        t.push_back(s.f1);
    }
    EXPECT_NEAR(r.mean_loss, train::loss_mse(y, t), 1e-12 * r.mean_loss);
}

TEST(SgdEpoch, SingleSampleStepIsClosedForm) {
    // second input held at zero makes this the 1 -> 1 case for the first weight
    const double w0 = 0.8, x = 1.5, t = 2.0, lr = 0.1;
    auto net = linear_net(w0, 0.3);
    train::TrainConfig cfg;
    cfg.learning_rate = lr;
    train::sgd_epoch(net, {data::Sample{x, 0.0, t, 0.0}}, train::Target::f1, cfg);
    EXPECT_DOUBLE_EQ(net.weights(0)[0], w0 - lr * (w0 * x - t) * x);
    EXPECT_EQ(net.weights(0)[1], 0.3);
}

TEST(SgdEpoch, BatchUsesMeanGradient) {
    auto net = linear_net(0.0, 0.0);
    train::TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.batch_size = 2;
    train::sgd_epoch(net, {data::Sample{1.0, 0.0, 1.0, 0.0}, data::Sample{0.0, 1.0, 3.0, 0.0}}, train::Target::f1,
                     cfg);
    EXPECT_DOUBLE_EQ(net.weights(0)[0], 0.5 * 0.5 * 1.0);
    EXPECT_DOUBLE_EQ(net.weights(0)[1], 0.5 * 0.5 * 3.0);
}

TEST(SgdEpoch, DeterministicForSeedAndEpoch) {
    const auto samples = data::generate_dataset(300, 4, {}, AeroParams{}, table()).samples;
    train::TrainConfig cfg;
    cfg.shuffle_seed = 12;
    auto a = paper_net(1), b = paper_net(1), c = paper_net(1);
    train::sgd_epoch(a, samples, train::Target::f2, cfg, 3);
    train::sgd_epoch(b, samples, train::Target::f2, cfg, 3);
    train::sgd_epoch(c, samples, train::Target::f2, cfg, 4);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(SgdEpoch, RejectsBadConfigAndEmptyData) {
    auto net = paper_net(1);
    train::TrainConfig cfg;
    EXPECT_THROW(train::sgd_epoch(net, {}, train::Target::f1, cfg), ts::Error);
    cfg.learning_rate = -1.0;
    EXPECT_THROW(train::sgd_epoch(net, {data::Sample{}}, train::Target::f1, cfg), ts::Error);
}

TEST(SgdEpoch, DivergenceIsReportedAsNumerical) {
    auto net = linear_net(1.0, 1.0);
    train::TrainConfig cfg;
    cfg.learning_rate = 1e6;
    std::vector<data::Sample> samples(50, data::Sample{10.0, 10.0, 1.0, 0.0});
    try {
        for (std::size_t e = 0; e < 20; ++e) train::sgd_epoch(net, samples, train::Target::f1, cfg, e);
        FAIL() << "expected divergence";
    } catch (const ts::Error &e) {
        EXPECT_EQ(e.kind(), ts::ErrorKind::numerical);
    }
}

TEST(TrainConfig, DefaultsAndValidation) {
    const train::TrainConfig cfg;
    EXPECT_EQ(cfg.epochs, 10u);
    EXPECT_EQ(cfg.batch_size, 1u);
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_DOUBLE_EQ(cfg.learning_rate_at(0), cfg.learning_rate);
    EXPECT_DOUBLE_EQ(cfg.learning_rate_at(5), 0.5 * cfg.learning_rate);
    train::TrainConfig constant = cfg;
    constant.schedule = train::LrSchedule::constant;
    EXPECT_EQ(constant.learning_rate_at(9), constant.learning_rate);
    for (auto bad : {train::TrainConfig{0}, train::TrainConfig{10, 0.0}, train::TrainConfig{10, 1e-3, 0}}) {
        EXPECT_THROW(bad.validate(), ts::Error);
    }
}

TEST(Rescale, FoldingIsExactInverse) {
    auto net = paper_net(6, true);
    const auto original = net;
    const train::Scaling s{5.2, 1.4, 3.3};
    train::rescale_network(net, s, true);
    const double scaled = mlp::forward(net, 9.0 / s.u, 1.0 / s.w) * s.target;
    EXPECT_NEAR(scaled, mlp::forward(original, 9.0, 1.0), 1e-12);
    train::rescale_network(net, s, false);
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        EXPECT_NEAR(net.params()[i], original.params()[i], 1e-15 * (1.0 + std::abs(original.params()[i])));
    }
}

TEST(Rescale, RequiresLinearEnds) {
    mlp::Network net({{2, 1}, {mlp::Activation::tanh}}, false);
    EXPECT_THROW(train::rescale_network(net, {}, true), ts::Error);
}

TEST(Train, HistoryLengthAndImprovement) {
    const auto ds = data::generate_dataset(2000, 2, {}, AeroParams{}, table());
    const auto [tr, te] = data::split_dataset(ds, 0.9, 2);
    auto net = paper_net(2);
    train::TrainConfig cfg;
    const auto report = train::train(net, tr, te, train::Target::f1, cfg);
    ASSERT_EQ(report.loss_history.size(), 10u);
    EXPECT_LT(report.loss_history.back(), report.loss_history.front());
    EXPECT_GT(report.final_weight_delta, 0.0);
    EXPECT_NEAR(report.test_rmse, train::evaluate_rmse(net, te.samples, train::Target::f1), 1e-15);
    EXPECT_TRUE(net.all_finite());
}

TEST(Train, ZeroTargetsStayAtZero) {
    auto ds = data::generate_dataset(500, 2, {}, AeroParams{}, table());
    for (auto &s : ds.samples) s.f1 = s.f2 = 0.0;
    const auto [tr, te] = data::split_dataset(ds, 0.9, 2);
    for (bool standardize : {false, true}) {
        mlp::Network net(mlp::Topology::paper_default(), false);
        train::TrainConfig cfg;
        cfg.standardize = standardize;
        const auto report = train::train(net, tr, te, train::Target::f2, cfg);
        EXPECT_LE(report.test_rmse, 1e-3);
    }
}

TEST(Train, RawUnitLossMatchesReportedHistoryScale) {
    // the report is in raw units whether or not standardization is used
    const auto ds = data::generate_dataset(1000, 8, {}, AeroParams{}, table());
    const auto [tr, te] = data::split_dataset(ds, 0.9, 8);
    train::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.schedule = train::LrSchedule::constant;
    // train() refuses lr = 0; a negligible rate leaves the network effectively fixed
    cfg.learning_rate = 1e-300;
    auto net = paper_net(4);
    const auto report = train::train(net, tr, te, train::Target::f2, cfg);
    EXPECT_NEAR(report.loss_history[0], std::pow(train::evaluate_rmse(net, tr.samples, train::Target::f2), 2),
                1e-9 * report.loss_history[0]);
}

TEST(Train, Deterministic) {
    const auto ds = data::generate_dataset(1000, 3, {}, AeroParams{}, table());
    const auto [tr, te] = data::split_dataset(ds, 0.9, 3);
    auto a = paper_net(7), b = paper_net(7);
    train::TrainConfig cfg;
    cfg.shuffle_seed = 4;
    const auto ra = train::train(a, tr, te, train::Target::f2, cfg);
    const auto rb = train::train(b, tr, te, train::Target::f2, cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ra.loss_history, rb.loss_history);
    EXPECT_EQ(ra.test_rmse, rb.test_rmse);
}

TEST(LabelStddev, PopulationFormula) {
    std::vector<data::Sample> s{{0, 0, 1, 0}, {0, 0, 3, 0}};
    EXPECT_DOUBLE_EQ(train::label_stddev(s, train::Target::f1), 1.0);
    EXPECT_EQ(train::label_stddev(s, train::Target::f2), 0.0);
}

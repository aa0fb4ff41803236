#include <doctest.h>

#include <cmath>

#include "fusenet/fisher.hpp"
#include "fusenet/rng.hpp"
#include "support/test_helpers.hpp"

using namespace fusenet;
namespace ft = fusenet::testing;

namespace {

TrainedModel wrap(Network net, LossKind kind) {
    TrainedModel m;
    m.network = std::move(net);
    TrainMeta meta;
    meta.hyper.loss_kind = kind;
    m.meta = meta;
    return m;
}

Dataset single_sample(Vector features, int label) {
    Matrix f(1, features.size());
    std::copy(features.begin(), features.end(), f.data.begin());
    return Dataset::from(std::move(f), {label});
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim,
                       std::size_t n_classes) {
    Matrix f(n, dim);
    for (double& v : f.data) v = rng.uniform();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i % n_classes); // every class present
    }
    return Dataset::from(std::move(f), std::move(labels));
}

} // namespace

TEST_SUITE_BEGIN("fisher");

TEST_CASE("square-loss importance of a single linear unit is x^2") {
    Network net;
    Matrix w(1, 1);
    w(0, 0) = 0.7;
    net.layers.push_back({w, Vector(1, 0.0), Activation::identity});
    net.class_labels = {0};
    const Dataset d = single_sample({0.5}, 0); // data features live in [0,1]
    // scale the input via the weight instead: dy/dw = x, so F_w = x^2
    const FisherResult r = square_loss_fisher(wrap(net, LossKind::square), d);
    CHECK(r.diag.weights[0](0, 0) == doctest::Approx(0.25));
    CHECK(r.diag.biases[0][0] == doctest::Approx(1.0)); // dy/db = 1
}

TEST_CASE("square-loss importances match finite differences of the outputs") {
    Rng rng(2718);
    for (int trial = 0; trial < 6; ++trial) {
        const Network net = ft::random_small_network(rng, LossKind::square);
        Rng drng(100 + trial);
        const Dataset data = random_dataset(drng, 5, net.input_width(),
                                            net.output_width());
        const FisherResult got =
            square_loss_fisher(wrap(net, LossKind::square), data);

        FisherDiag expected = ParamTensors::zeros_like(net);
        Vector x(net.input_width());
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::copy_n(data.features.row(i), x.size(), x.begin());
            for (std::size_t n = 0; n < net.output_width(); ++n) {
                const Gradients fd = ft::finite_difference(
                    net, [&](const Network& m) { return forward(m, x).output()[n]; });
                for (std::size_t l = 0; l < expected.weights.size(); ++l) {
                    for (std::size_t k = 0; k < expected.weights[l].data.size(); ++k) {
                        expected.weights[l].data[k] +=
                            fd.weights[l].data[k] * fd.weights[l].data[k];
                    }
                    for (std::size_t k = 0; k < expected.biases[l].size(); ++k) {
                        expected.biases[l][k] += fd.biases[l][k] * fd.biases[l][k];
                    }
                }
            }
        }
        CHECK(ft::max_rel_err(got.diag, expected, 1e-4) <= 1e-4);
    }
}

TEST_CASE("cross-entropy importance equals the mean squared sample gradient") {
    Rng rng(33);
    const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
    Rng drng(17);
    const Dataset data = random_dataset(drng, 12, net.input_width(),
                                        net.output_width());
    const FisherResult got =
        cross_entropy_fisher(wrap(net, LossKind::cross_entropy), data);

    FisherDiag expected = ParamTensors::zeros_like(net);
    Vector x(net.input_width());
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::copy_n(data.features.row(i), x.size(), x.begin());
        const Gradients g = backward(net, x, one_hot(net, data.labels[i]),
                                     LossKind::cross_entropy);
        for (std::size_t l = 0; l < expected.weights.size(); ++l) {
            for (std::size_t k = 0; k < expected.weights[l].data.size(); ++k) {
                expected.weights[l].data[k] += g.weights[l].data[k] * g.weights[l].data[k];
            }
            for (std::size_t k = 0; k < expected.biases[l].size(); ++k) {
                expected.biases[l][k] += g.biases[l][k] * g.biases[l][k];
            }
        }
    }
    expected.scale(1.0 / double(data.size()));
    CHECK(ft::max_rel_err(got.diag, expected, 1e-10) <= 1e-12);
}

TEST_CASE("importances are nonnegative for random models and data") {
    Rng rng(808);
    for (int trial = 0; trial < 10; ++trial) {
        const LossKind kind =
            trial % 2 == 0 ? LossKind::square : LossKind::cross_entropy;
        const Network net = ft::random_small_network(rng, kind);
        Rng drng(900 + trial);
        const Dataset data = random_dataset(drng, 8, net.input_width(),
                                            net.output_width());
        const FisherResult r = kind == LossKind::square
                                   ? square_loss_fisher(wrap(net, kind), data)
                                   : cross_entropy_fisher(wrap(net, kind), data);
        for (const Matrix& m : r.diag.weights) {
            for (double v : m.data) CHECK(v >= 0.0);
        }
        for (const Vector& b : r.diag.biases) {
            for (double v : b) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("a relu unit inactive on every sample has zero incoming importance") {
    Network net;
    Matrix w0(2, 2);
    w0(0, 0) = 0.4;
    w0(0, 1) = 0.2;
    w0(1, 0) = 0.3;
    w0(1, 1) = 0.1;
    Vector b0 = {-10.0, 0.5}; // unit 0 can never fire on [0,1] inputs
    Matrix w1(2, 2);
    w1(0, 0) = 1.0;
    w1(0, 1) = -1.0;
    w1(1, 0) = 0.5;
    w1(1, 1) = 0.5;
    net.layers.push_back({w0, b0, Activation::relu});
    net.layers.push_back({w1, Vector(2, 0.0), Activation::softmax});
    net.class_labels = {0, 1};
    Rng drng(55);
    const Dataset data = random_dataset(drng, 10, 2, 2);
    const FisherResult r =
        cross_entropy_fisher(wrap(net, LossKind::cross_entropy), data);
    CHECK(r.diag.weights[0](0, 0) == 0.0);
    CHECK(r.diag.weights[0](0, 1) == 0.0);
    CHECK(r.diag.biases[0][0] == 0.0);
    CHECK(r.diag.weights[0](1, 0) > 0.0);
}

TEST_CASE("square-loss importance is additive over dataset partitions") {
    Rng rng(606);
    const Network net = ft::random_small_network(rng, LossKind::square);
    Rng drng(5);
    const Dataset data = random_dataset(drng, 10, net.input_width(),
                                        net.output_width());
    auto part = [&](std::size_t from, std::size_t to) {
        Matrix f(to - from, data.feature_dim());
        std::vector<int> l;
        for (std::size_t i = from; i < to; ++i) {
            std::copy_n(data.features.row(i), data.feature_dim(), f.row(i - from));
            l.push_back(data.labels[i]);
        }
        return Dataset::from(std::move(f), std::move(l));
    };
    const TrainedModel m = wrap(net, LossKind::square);
    FisherDiag whole = square_loss_fisher(m, data).diag;
    FisherDiag left = square_loss_fisher(m, part(0, 4)).diag;
    const FisherDiag right = square_loss_fisher(m, part(4, 10)).diag;
    left.add(right);
    CHECK(ft::max_rel_err(whole, left, 1e-9) <= 1e-12);
}

TEST_CASE("cross-entropy importance composes as a weighted mean over partitions") {
    Rng rng(607);
    const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
    Rng drng(6);
    const Dataset data = random_dataset(drng, 10, net.input_width(),
                                        net.output_width());
    auto part = [&](std::size_t from, std::size_t to) {
        Matrix f(to - from, data.feature_dim());
        std::vector<int> l;
        for (std::size_t i = from; i < to; ++i) {
            std::copy_n(data.features.row(i), data.feature_dim(), f.row(i - from));
            l.push_back(data.labels[i]);
        }
        return Dataset::from(std::move(f), std::move(l));
    };
    const TrainedModel m = wrap(net, LossKind::cross_entropy);
    const FisherDiag whole = cross_entropy_fisher(m, data).diag;
    FisherDiag left = cross_entropy_fisher(m, part(0, 4)).diag;
    FisherDiag right = cross_entropy_fisher(m, part(4, 10)).diag;
    left.scale(0.4);
    right.scale(0.6);
    left.add(right);
    CHECK(ft::max_rel_err(whole, left, 1e-9) <= 1e-12);
}

TEST_CASE("all-zero inputs concentrate importance on the bias parameters") {
    Rng rng(608);
    const Network net =
        ft::random_network(rng, 3, {2}, {Activation::sigmoid});
    Matrix f(6, 3, 0.0);
    const Dataset zeros = Dataset::from(std::move(f), {0, 1, 0, 1, 0, 1});
    const FisherResult r = square_loss_fisher(wrap(net, LossKind::square), zeros);
    for (double v : r.diag.weights[0].data) CHECK(v == 0.0);
    double bias_mass = 0.0;
    for (double v : r.diag.biases[0]) bias_mass += v;
    CHECK(bias_mass > 0.0);
}

TEST_CASE("loss-kind mismatch is flagged but computation proceeds") {
    Rng rng(609);
    const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
    Rng drng(7);
    const Dataset data = random_dataset(drng, 4, net.input_width(),
                                        net.output_width());
    const FisherResult r = square_loss_fisher(wrap(net, LossKind::cross_entropy), data);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("loss-kind mismatch") != std::string::npos);
    validate_fisher(r.diag, net);
}

TEST_CASE("model-sampled labels are deterministic and differ from empirical") {
    Rng rng(611);
    const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
    Rng drng(9);
    const Dataset data = random_dataset(drng, 20, net.input_width(),
                                        net.output_width());
    const TrainedModel m = wrap(net, LossKind::cross_entropy);
    FisherOptions opts;
    opts.sample_labels_from_model = true;
    opts.seed = 77;
    const FisherDiag sampled = cross_entropy_fisher(m, data, opts).diag;
    const FisherDiag again = cross_entropy_fisher(m, data, opts).diag;
    CHECK(ft::max_rel_err(sampled, again, 1e-15) == 0.0);
    validate_fisher(sampled, net);
    const FisherDiag empirical = cross_entropy_fisher(m, data).diag;
    CHECK(ft::max_rel_err(sampled, empirical, 1e-12) > 0.0);
}

TEST_CASE("subsampled importance is deterministic per seed") {
    Rng rng(610);
    const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
    Rng drng(8);
    const Dataset data = random_dataset(drng, 20, net.input_width(),
                                        net.output_width());
    FisherOptions opts;
    opts.max_samples = 7;
    opts.seed = 42;
    const TrainedModel m = wrap(net, LossKind::cross_entropy);
    const FisherDiag a = cross_entropy_fisher(m, data, opts).diag;
    const FisherDiag b = cross_entropy_fisher(m, data, opts).diag;
    CHECK(ft::max_rel_err(a, b, 1e-15) == 0.0);
}

TEST_SUITE_END();

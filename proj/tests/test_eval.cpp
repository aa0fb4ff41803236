#include <doctest.h>

#include <cmath>
#include <map>

#include "fusenet/eval.hpp"
#include "fusenet/fuse.hpp"
#include "fusenet/rng.hpp"
#include "fusenet/train.hpp"
#include "support/test_helpers.hpp"

using namespace fusenet;
namespace ft = fusenet::testing;

namespace {

/// Network whose prediction always equals the strongest input feature:
/// identity weights on a linear head.
Network oracle_network(std::size_t k) {
    Network net;
    Matrix w(k, k);
    for (std::size_t i = 0; i < k; ++i) w(i, i) = 1.0;
    net.layers.push_back({w, Vector(k, 0.0), Activation::softmax});
    net.class_labels.resize(k);
    for (std::size_t i = 0; i < k; ++i) net.class_labels[i] = static_cast<int>(i);
    return net;
}

Dataset one_hot_dataset(Rng& rng, std::size_t n, std::size_t k) {
    Matrix f(n, k);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = rng.index(k);
        f(i, c) = 1.0;
        labels[i] = static_cast<int>(c);
    }
    return Dataset::from(std::move(f), std::move(labels));
}

} // namespace

TEST_SUITE_BEGIN("evalreport");

TEST_CASE("a perfect model scores 1.0 with a diagonal confusion matrix") {
    Rng rng(64);
    const Network net = oracle_network(4);
    const Dataset test = one_hot_dataset(rng, 120, 4);
    const EvalResult r = evaluate(net, test);
    CHECK(r.accuracy == 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (i != j) CHECK(r.confusion.at(i, j) == 0);
        }
    }
    CHECK(r.confusion.trace() == 120);
}

TEST_CASE("accuracy equals trace over total for arbitrary models") {
    Rng rng(65);
    for (int trial = 0; trial < 20; ++trial) {
        const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
        Matrix f(30, net.input_width());
        for (double& v : f.data) v = rng.uniform();
        std::vector<int> labels(30);
        for (std::size_t i = 0; i < 30; ++i) {
            labels[i] = static_cast<int>(rng.index(net.output_width()));
        }
        // make sure every class appears so class_set stays inside the labels
        for (std::size_t c = 0; c < net.output_width(); ++c) {
            labels[c] = static_cast<int>(c);
        }
        const Dataset test = Dataset::from(std::move(f), std::move(labels));
        const EvalResult r = evaluate(net, test);
        CHECK(r.accuracy ==
              doctest::Approx(double(r.confusion.trace()) / double(r.confusion.total())));
    }
}

TEST_CASE("confusion row sums equal the per-class test counts") {
    Rng rng(66);
    for (int trial = 0; trial < 100; ++trial) {
        const Network net = ft::random_small_network(rng, LossKind::cross_entropy);
        const std::size_t n = 10 + rng.index(40);
        Matrix f(n, net.input_width());
        for (double& v : f.data) v = rng.uniform();
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng.index(net.output_width()));
        }
        const Dataset test = Dataset::from(std::move(f), std::move(labels));

        std::map<int, std::uint64_t> expected;
        for (int l : test.labels) ++expected[l];
        const EvalResult r = evaluate(net, test);
        for (std::size_t row = 0; row < r.confusion.classes.size(); ++row) {
            CHECK(r.confusion.row_sum(row) == expected[r.confusion.classes[row]]);
        }
        CHECK(r.confusion.total() == n);
    }
}

TEST_CASE("an untrained network scores near chance on balanced data") {
    const std::size_t k = 4;
    const Dataset data = synth_blobs(k, 12, 100, 0.8, 0.08, 31).dataset;
    std::vector<double> accs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Network net = init_network(
            12, {{16, Activation::relu}, {k, Activation::softmax}},
            data.class_set, seed);
        accs.push_back(evaluate(net, data).accuracy);
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= double(accs.size());
    // binomial standard error over the pooled 10x400 predictions
    const double p = 1.0 / double(k);
    const double se = std::sqrt(p * (1 - p) / double(accs.size() * data.size()));
    CHECK(std::abs(mean - p) <= 5.0 * se);
}

TEST_CASE("evaluate rejects samples whose class the model cannot emit") {
    const Network net = oracle_network(3);
    Rng rng(67);
    Matrix f(4, 3);
    for (double& v : f.data) v = rng.uniform();
    const Dataset test = Dataset::from(std::move(f), {0, 1, 2, 7});
    CHECK_THROWS_AS(evaluate(net, test), std::invalid_argument);
}

TEST_CASE("restricted evaluation reproduces the constituent's structure") {
    // fuse two heads, then check evaluating the fused model restricted to
    // the first head's labels equals evaluating the first head alone
    Rng rng(68);
    const Network a = ft::random_network(
        rng, 6, {8, 3}, {Activation::relu, Activation::softmax});
    Network b = ft::random_network(
        rng, 6, {8, 3}, {Activation::relu, Activation::softmax});
    b.class_labels = {3, 4, 5};

    TrainedModel ma, mb;
    ma.network = a;
    mb.network = b;
    auto [fused, report] = fuse_pipeline(ma, mb, FusionSpec::ws_spec());
    (void)report;

    // restrict to A's labels and evaluate A-labeled data; the fused hidden
    // stack differs from A's, so compare against the same stacked network
    // with only A's rows - structural consistency, not accuracy
    Matrix f(40, 6);
    for (double& v : f.data) v = rng.uniform();
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < 40; ++i) labels[i] = static_cast<int>(rng.index(3));
    const Dataset test = Dataset::from(std::move(f), std::move(labels));

    const EvalResult restricted = evaluate_restricted(fused.network, test, {0, 1, 2});
    // manual argmax over the first three outputs
    std::uint64_t agree = 0;
    Vector x(6);
    for (std::size_t i = 0; i < test.size(); ++i) {
        std::copy_n(test.features.row(i), 6, x.begin());
        const Vector y = forward(fused.network, x).output();
        std::size_t best = 0;
        for (std::size_t u = 1; u < 3; ++u) {
            if (y[u] > y[best]) best = u;
        }
        if (static_cast<int>(best) == test.labels[i]) ++agree;
    }
    CHECK(restricted.accuracy == doctest::Approx(double(agree) / 40.0));
    CHECK(restricted.confusion.classes == std::vector<int>{0, 1, 2});
}

TEST_CASE("argmax ties break toward the lowest output index") {
    Network net;
    net.layers.push_back({Matrix(3, 2, 0.0), Vector(3, 0.0), Activation::softmax});
    net.class_labels = {5, 6, 7};
    Matrix f(1, 2);
    f(0, 0) = 0.5;
    const Dataset test = Dataset::from(std::move(f), {5});
    // all outputs equal 1/3; the tie must resolve to label 5
    CHECK(evaluate(net, test).accuracy == 1.0);
}

TEST_CASE("aggregate: examples and permutation invariance") {
    CHECK(aggregate({0.5, 0.5, 0.5}) == std::pair<double, double>{0.5, 0.0});
    const auto [m, s] = aggregate({0.0, 1.0});
    CHECK(m == doctest::Approx(0.5));
    CHECK(s == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    const auto [m2, s2] = aggregate({1.0, 0.0});
    CHECK(m == m2);
    CHECK(s == s2);
    CHECK_THROWS_AS(aggregate({0.5}), std::invalid_argument);
}

TEST_SUITE_END();

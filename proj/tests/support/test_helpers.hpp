#pragma once
// Shared fixtures for the unit and acceptance suites: random model/dataset
// generators, the central-difference gradient oracle, and comparison
// utilities. Everything here is seeded and deterministic.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "fusenet/dataset.hpp"
#include "fusenet/nnet.hpp"
#include "fusenet/rng.hpp"

namespace fusenet::testing {

/// Visits every parameter of the network in a fixed order.
template <typename Fn>
void for_each_param(Network& net, Fn&& fn) {
    for (DenseLayer& lay : net.layers) {
        for (double& w : lay.weights.data) fn(w);
        for (double& b : lay.bias) fn(b);
    }
}

/// Central-difference gradient of an arbitrary scalar function of the
/// network parameters, step h per parameter.
inline Gradients finite_difference(const Network& net,
                                   const std::function<double(const Network&)>& f,
                                   double h = 1e-5) {
    Gradients g = ParamTensors::zeros_like(net);
    Network work = net;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        for (std::size_t i = 0; i < net.layers[l].weights.data.size(); ++i) {
            double& theta = work.layers[l].weights.data[i];
            const double saved = theta;
            theta = saved + h;
            const double up = f(work);
            theta = saved - h;
            const double down = f(work);
            theta = saved;
            g.weights[l].data[i] = (up - down) / (2.0 * h);
        }
        for (std::size_t i = 0; i < net.layers[l].bias.size(); ++i) {
            double& theta = work.layers[l].bias[i];
            const double saved = theta;
            theta = saved + h;
            const double up = f(work);
            theta = saved - h;
            const double down = f(work);
            theta = saved;
            g.biases[l][i] = (up - down) / (2.0 * h);
        }
    }
    return g;
}

/// |a-b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor_ = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

inline double max_rel_err(const ParamTensors& a, const ParamTensors& b,
                          double floor_ = 1e-6) {
    double worst = 0.0;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        for (std::size_t i = 0; i < a.weights[l].data.size(); ++i) {
            worst = std::max(worst,
                             rel_err(a.weights[l].data[i], b.weights[l].data[i], floor_));
        }
        for (std::size_t i = 0; i < a.biases[l].size(); ++i) {
            worst = std::max(worst, rel_err(a.biases[l][i], b.biases[l][i], floor_));
        }
    }
    return worst;
}

/// Small random network with the given widths; weights are drawn with a
/// healthy spread so gradients stay measurable.
inline Network random_network(Rng& rng, std::size_t input_width,
                              const std::vector<std::size_t>& widths,
                              const std::vector<Activation>& activations,
                              double weight_scale = 0.7) {
    Network net;
    std::size_t in_w = input_width;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        DenseLayer lay;
        lay.weights = Matrix(widths[l], in_w);
        for (double& w : lay.weights.data) w = weight_scale * rng.normal();
        lay.bias.resize(widths[l]);
        for (double& b : lay.bias) b = 0.3 * rng.normal();
        lay.activation = activations[l];
        net.layers.push_back(std::move(lay));
        in_w = widths[l];
    }
    net.class_labels.resize(widths.back());
    for (std::size_t i = 0; i < net.class_labels.size(); ++i) {
        net.class_labels[i] = static_cast<int>(i);
    }
    net.validate();
    return net;
}

/// Random architecture (1-3 layers, widths <= 6) with mixed activations.
inline Network random_small_network(Rng& rng, LossKind loss) {
    const std::size_t depth = 1 + rng.index(3);
    const std::size_t input_width = 2 + rng.index(4);
    std::vector<std::size_t> widths;
    std::vector<Activation> acts;
    const Activation hidden_pool[] = {Activation::relu, Activation::sigmoid,
                                      Activation::identity};
    for (std::size_t l = 0; l + 1 < depth; ++l) {
        widths.push_back(2 + rng.index(5));
        acts.push_back(hidden_pool[rng.index(3)]);
    }
    widths.push_back(2 + rng.index(4));
    acts.push_back(loss == LossKind::cross_entropy ? Activation::softmax
                                                   : Activation::sigmoid);
    return random_network(rng, input_width, widths, acts);
}

inline Vector random_input(Rng& rng, std::size_t dim, double scale = 1.0) {
    Vector x(dim);
    for (double& v : x) v = scale * rng.normal();
    return x;
}

inline Vector random_one_hot(Rng& rng, std::size_t dim) {
    Vector t(dim, 0.0);
    t[rng.index(dim)] = 1.0;
    return t;
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    rng.shuffle(p);
    return p;
}

inline bool networks_equal(const Network& a, const Network& b) { return a == b; }

/// Max |difference| between two networks' parameters (shapes must match).
inline double max_param_diff(const Network& a, const Network& b) {
    double worst = 0.0;
    for (std::size_t l = 0; l < a.depth(); ++l) {
        for (std::size_t i = 0; i < a.layers[l].weights.data.size(); ++i) {
            worst = std::max(worst, std::abs(a.layers[l].weights.data[i] -
                                             b.layers[l].weights.data[i]));
        }
        for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i) {
            worst = std::max(worst,
                             std::abs(a.layers[l].bias[i] - b.layers[l].bias[i]));
        }
    }
    return worst;
}

} // namespace fusenet::testing

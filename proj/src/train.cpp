#include "fusenet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "fusenet/rng.hpp"

namespace fusenet {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamState {
    ParamTensors m;
    ParamTensors v;
    std::size_t t = 0;
};

void adam_step(Network& net, const Gradients& g, AdamState& st, double lr) {
    ++st.t;
    const double c1 = 1.0 - std::pow(kAdamBeta1, double(st.t));
    const double c2 = 1.0 - std::pow(kAdamBeta2, double(st.t));
    for (std::size_t l = 0; l < net.depth(); ++l) {
        auto update = [&](double& theta, double grad, double& m, double& v) {
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad * grad;
            theta -= lr * (m / c1) / (std::sqrt(v / c2) + kAdamEps);
        };
        Matrix& w = net.layers[l].weights;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            update(w.data[i], g.weights[l].data[i], st.m.weights[l].data[i],
                   st.v.weights[l].data[i]);
        }
        Vector& b = net.layers[l].bias;
        for (std::size_t i = 0; i < b.size(); ++i) {
            update(b[i], g.biases[l][i], st.m.biases[l][i], st.v.biases[l][i]);
        }
    }
}

void check_class_cover(const Network& net, const Dataset& d, const char* which) {
    std::set<int> want(net.class_labels.begin(), net.class_labels.end());
    std::set<int> have(d.class_set.begin(), d.class_set.end());
    if (want != have) {
        throw std::invalid_argument(std::string("train: ") + which +
                                    " class set does not match network labels");
    }
}

} // namespace

void TrainHyper::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("hyper: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("hyper: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("hyper: max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("hyper: patience must be >= 1");
    if (l2_coeff < 0.0) throw std::invalid_argument("hyper: l2_coeff must be >= 0");
}

double accuracy(const Network& net, const Dataset& data) {
    std::size_t correct = 0;
    Vector x(net.input_width());
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::copy_n(data.features.row(i), x.size(), x.begin());
        const ForwardTrace tr = forward(net, x);
        if (net.class_labels[argmax_lowest(tr.output())] == data.labels[i]) {
            ++correct;
        }
    }
    return data.size() ? double(correct) / double(data.size()) : 0.0;
}

TrainedModel train(const Network& net0, const Dataset& train_set,
                   const Dataset& val_set, const TrainHyper& hyper) {
    hyper.validate();
    net0.validate();
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (train_set.feature_dim() != net0.input_width() ||
        val_set.feature_dim() != net0.input_width()) {
        throw std::invalid_argument("train: feature dimension mismatch");
    }
    check_class_cover(net0, train_set, "training");
    check_class_cover(net0, val_set, "validation");

    Network net = net0;
    AdamState st;
    st.m = ParamTensors::zeros_like(net);
    st.v = ParamTensors::zeros_like(net);

    Rng rng(hyper.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    // Pre-built targets, one per sample.
    std::vector<Vector> targets;
    targets.reserve(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        targets.push_back(one_hot(net, train_set.labels[i]));
    }

    Network best = net;
    double best_val = -1.0;
    std::size_t stall = 0;
    std::size_t epochs_run = 0;

    Vector x(net.input_width());
    for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        epochs_run = epoch;
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const std::size_t end = std::min(order.size(), start + hyper.batch_size);
            Gradients acc = ParamTensors::zeros_like(net);
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                std::copy_n(train_set.features.row(i), x.size(), x.begin());
                backward_accumulate(net, x, targets[i], hyper.loss_kind, acc);
            }
            acc.scale(1.0 / double(end - start));
            if (hyper.l2_coeff > 0.0) {
                for (std::size_t l = 0; l < net.depth(); ++l) {
                    for (std::size_t i = 0; i < acc.weights[l].data.size(); ++i) {
                        acc.weights[l].data[i] +=
                            hyper.l2_coeff * net.layers[l].weights.data[i];
                    }
                }
            }
            adam_step(net, acc, st, hyper.learning_rate);
        }

        const double vacc = accuracy(net, val_set);
        if (vacc > best_val) {
            best_val = vacc;
            best = net;
            stall = 0;
        } else if (++stall >= hyper.patience) {
            break;
        }
    }

    TrainedModel out;
    out.network = std::move(best);
    TrainMeta meta;
    meta.hyper = hyper;
    meta.seed = hyper.seed;
    meta.epochs_run = epochs_run;
    meta.val_accuracy = best_val;
    meta.train_accuracy = accuracy(out.network, train_set);
    out.meta = std::move(meta);
    return out;
}

} // namespace fusenet

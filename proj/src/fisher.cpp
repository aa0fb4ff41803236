#include "fusenet/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fusenet/rng.hpp"

namespace fusenet {

namespace {

std::vector<std::size_t> pick_samples(std::size_t n, const FisherOptions& opts) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (opts.max_samples > 0 && opts.max_samples < n) {
        Rng rng(derive_seed(opts.seed, 0x46495348));
        rng.shuffle(idx);
        idx.resize(opts.max_samples);
        std::sort(idx.begin(), idx.end());
    }
    return idx;
}

void add_squared(ParamTensors& acc, const ParamTensors& g) {
    for (std::size_t l = 0; l < acc.weights.size(); ++l) {
        for (std::size_t i = 0; i < acc.weights[l].data.size(); ++i) {
            const double v = g.weights[l].data[i];
            acc.weights[l].data[i] += v * v;
        }
        for (std::size_t i = 0; i < acc.biases[l].size(); ++i) {
            const double v = g.biases[l][i];
            acc.biases[l][i] += v * v;
        }
    }
}

void check_inputs(const TrainedModel& model, const Dataset& data,
                  LossKind expected, std::vector<std::string>& warnings) {
    model.network.validate();
    if (data.size() == 0) {
        throw std::invalid_argument("fisher: empty dataset");
    }
    if (data.feature_dim() != model.network.input_width()) {
        throw std::invalid_argument("fisher: feature dimension mismatch");
    }
    if (model.meta && model.meta->hyper.loss_kind != expected) {
        warnings.push_back("loss-kind mismatch: model was trained with " +
                           to_string(model.meta->hyper.loss_kind) +
                           " but Fisher uses the " + to_string(expected) +
                           " form");
    }
}

} // namespace

void validate_fisher(const FisherDiag& f, const Network& net) {
    if (!f.shape_matches(net)) {
        throw std::invalid_argument("fisher: shape not parallel to network");
    }
    auto check = [](double v) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("fisher: entry negative or non-finite");
        }
    };
    for (const Matrix& w : f.weights) {
        for (double v : w.data) check(v);
    }
    for (const Vector& b : f.biases) {
        for (double v : b) check(v);
    }
}

FisherResult square_loss_fisher(const TrainedModel& model, const Dataset& data,
                                const FisherOptions& opts) {
    FisherResult out;
    check_inputs(model, data, LossKind::square, out.warnings);

    const Network& net = model.network;
    out.diag = ParamTensors::zeros_like(net);
    Gradients buffer = ParamTensors::zeros_like(net);
    Vector x(net.input_width());
    for (std::size_t i : pick_samples(data.size(), opts)) {
        std::copy_n(data.features.row(i), x.size(), x.begin());
        const ForwardTrace tr = forward(net, x);
        for (std::size_t n = 0; n < net.output_width(); ++n) {
            output_gradient_into(net, tr, n, buffer);
            add_squared(out.diag, buffer);
        }
    }
    validate_fisher(out.diag, net);
    return out;
}

FisherResult cross_entropy_fisher(const TrainedModel& model, const Dataset& data,
                                  const FisherOptions& opts) {
    FisherResult out;
    check_inputs(model, data, LossKind::cross_entropy, out.warnings);

    const Network& net = model.network;
    out.diag = ParamTensors::zeros_like(net);
    Rng label_rng(derive_seed(opts.seed, 0x4c41424c));
    const auto samples = pick_samples(data.size(), opts);
    Vector x(net.input_width());
    for (std::size_t i : samples) {
        std::copy_n(data.features.row(i), x.size(), x.begin());
        Vector target;
        if (opts.sample_labels_from_model) {
            const ForwardTrace tr = forward(net, x);
            const double u = label_rng.uniform();
            double cum = 0.0;
            std::size_t pick = net.output_width() - 1;
            for (std::size_t n = 0; n < net.output_width(); ++n) {
                cum += tr.output()[n];
                if (u < cum) {
                    pick = n;
                    break;
                }
            }
            target.assign(net.output_width(), 0.0);
            target[pick] = 1.0;
        } else {
            target = one_hot(net, data.labels[i]);
        }
        add_squared(out.diag, backward(net, x, target, LossKind::cross_entropy));
    }
    out.diag.scale(1.0 / double(samples.size()));
    validate_fisher(out.diag, net);
    return out;
}

FisherResult fisher_for_model(const TrainedModel& model, const Dataset& data,
                              const FisherOptions& opts) {
    const LossKind kind = model.loss_kind_or(LossKind::cross_entropy);
    return kind == LossKind::square ? square_loss_fisher(model, data, opts)
                                    : cross_entropy_fisher(model, data, opts);
}

} // namespace fusenet

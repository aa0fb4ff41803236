#include "fusenet/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "fusenet/rng.hpp"

namespace fusenet {

namespace {
constexpr double kInitStd = 0.05;
} // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "softmax") return Activation::softmax;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(LossKind k) {
    return k == LossKind::square ? "square" : "cross_entropy";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "square") return LossKind::square;
    if (s == "cross_entropy") return LossKind::cross_entropy;
    throw std::invalid_argument("unknown loss kind: " + s);
}

std::size_t Network::label_index(int label) const {
    for (std::size_t i = 0; i < class_labels.size(); ++i) {
        if (class_labels[i] == label) return i;
    }
    throw std::invalid_argument("label not in network class set: " +
                                std::to_string(label));
}

void Network::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("network: no layers");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& lay = layers[l];
        if (lay.out_width() == 0 || lay.in_width() == 0) {
            throw std::invalid_argument("network: zero-width layer");
        }
        if (lay.bias.size() != lay.out_width()) {
            throw std::invalid_argument("network: bias width mismatch");
        }
        if (l > 0 && lay.in_width() != layers[l - 1].out_width()) {
            throw std::invalid_argument("network: layer widths do not chain");
        }
        if (lay.activation == Activation::softmax && l + 1 != layers.size()) {
            throw std::invalid_argument("network: softmax only on final layer");
        }
        for (double v : lay.weights.data) {
            if (!std::isfinite(v)) throw std::invalid_argument("network: non-finite weight");
        }
        for (double v : lay.bias) {
            if (!std::isfinite(v)) throw std::invalid_argument("network: non-finite bias");
        }
    }
    if (class_labels.size() != output_width()) {
        throw std::invalid_argument("network: class label count != output width");
    }
    std::set<int> uniq(class_labels.begin(), class_labels.end());
    if (uniq.size() != class_labels.size()) {
        throw std::invalid_argument("network: duplicate class labels");
    }
}

Network init_network(std::size_t input_width, const std::vector<LayerSpec>& arch,
                     std::vector<int> class_labels, std::uint64_t seed) {
    if (input_width == 0 || arch.empty()) {
        throw std::invalid_argument("init_network: empty architecture");
    }
    for (const LayerSpec& s : arch) {
        if (s.width == 0) {
            throw std::invalid_argument("init_network: non-positive layer width");
        }
    }
    Rng rng(seed);
    Network net;
    net.class_labels = std::move(class_labels);
    std::size_t in_w = input_width;
    for (const LayerSpec& s : arch) {
        DenseLayer lay;
        lay.weights = Matrix(s.width, in_w);
        for (double& w : lay.weights.data) w = kInitStd * rng.normal();
        lay.bias = Vector(s.width, 0.0);
        lay.activation = s.activation;
        net.layers.push_back(std::move(lay));
        in_w = s.width;
    }
    net.validate();
    return net;
}

namespace {

void apply_activation(Activation a, const Vector& pre, Vector& post) {
    post.resize(pre.size());
    switch (a) {
        case Activation::identity:
            post = pre;
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < pre.size(); ++i) {
                post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            }
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < pre.size(); ++i) {
                post[i] = 1.0 / (1.0 + std::exp(-pre[i]));
            }
            break;
        case Activation::softmax: {
            const double mx = *std::max_element(pre.begin(), pre.end());
            double sum = 0.0;
            for (std::size_t i = 0; i < pre.size(); ++i) {
                post[i] = std::exp(pre[i] - mx);
                sum += post[i];
            }
            for (double& v : post) v /= sum;
            break;
        }
    }
}

/// grad_pre = J_activation(pre)^T * grad_post
Vector activation_vjp(Activation a, const Vector& pre, const Vector& post,
                      const Vector& grad_post) {
    Vector g(pre.size());
    switch (a) {
        case Activation::identity:
            g = grad_post;
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < pre.size(); ++i) {
                g[i] = pre[i] > 0.0 ? grad_post[i] : 0.0;
            }
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < pre.size(); ++i) {
                g[i] = grad_post[i] * post[i] * (1.0 - post[i]);
            }
            break;
        case Activation::softmax: {
            double dot_gp = 0.0;
            for (std::size_t i = 0; i < pre.size(); ++i) dot_gp += grad_post[i] * post[i];
            for (std::size_t i = 0; i < pre.size(); ++i) {
                g[i] = post[i] * (grad_post[i] - dot_gp);
            }
            break;
        }
    }
    return g;
}

enum class GradMode { assign, accumulate };

void backprop_from_output(const Network& net, const ForwardTrace& tr,
                          Vector grad_post, Gradients& g, GradMode mode) {
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const DenseLayer& lay = net.layers[li];
        const Vector delta =
            activation_vjp(lay.activation, tr.pre[li], tr.post[li], grad_post);
        const Vector& input = li == 0 ? tr.input : tr.post[li - 1];
        Matrix& gw = g.weights[li];
        for (std::size_t r = 0; r < lay.out_width(); ++r) {
            const double d = delta[r];
            double* row = gw.row(r);
            if (mode == GradMode::assign) {
                g.biases[li][r] = d;
                if (d == 0.0) {
                    std::fill_n(row, lay.in_width(), 0.0);
                } else {
                    for (std::size_t c = 0; c < lay.in_width(); ++c) {
                        row[c] = d * input[c];
                    }
                }
            } else {
                g.biases[li][r] += d;
                if (d != 0.0) {
                    for (std::size_t c = 0; c < lay.in_width(); ++c) {
                        row[c] += d * input[c];
                    }
                }
            }
        }
        if (li > 0) {
            grad_post.assign(lay.in_width(), 0.0);
            for (std::size_t r = 0; r < lay.out_width(); ++r) {
                const double d = delta[r];
                if (d == 0.0) continue;
                const double* row = lay.weights.row(r);
                for (std::size_t c = 0; c < lay.in_width(); ++c) {
                    grad_post[c] += d * row[c];
                }
            }
        }
    }
}

Vector loss_gradient_wrt_output(const Vector& y, const Vector& t, LossKind kind) {
    Vector g(y.size());
    if (kind == LossKind::square) {
        for (std::size_t i = 0; i < y.size(); ++i) g[i] = y[i] - t[i];
    } else {
        // d/dy of -t*ln(max(y, floor)); zero below the floor, matching loss().
        for (std::size_t i = 0; i < y.size(); ++i) {
            g[i] = y[i] > kLogFloor ? -t[i] / y[i] : 0.0;
        }
    }
    return g;
}

} // namespace

ForwardTrace forward(const Network& net, const Vector& x) {
    if (x.size() != net.input_width()) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    ForwardTrace tr;
    tr.input = x;
    tr.pre.resize(net.depth());
    tr.post.resize(net.depth());
    const Vector* cur = &tr.input;
    for (std::size_t li = 0; li < net.depth(); ++li) {
        const DenseLayer& lay = net.layers[li];
        Vector& z = tr.pre[li];
        z.resize(lay.out_width());
        for (std::size_t r = 0; r < lay.out_width(); ++r) {
            z[r] = lay.bias[r] + dot(lay.weights.row(r), cur->data(), lay.in_width());
        }
        apply_activation(lay.activation, z, tr.post[li]);
        cur = &tr.post[li];
    }
    return tr;
}

double loss(const Vector& pred, const Vector& target_one_hot, LossKind kind) {
    if (pred.size() != target_one_hot.size()) {
        throw std::invalid_argument("loss: prediction/target length mismatch");
    }
    if (kind == LossKind::square) {
        double s = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - target_one_hot[i];
            s += d * d;
        }
        return 0.5 * s;
    }
    double sum = 0.0;
    for (double p : pred) {
        if (p < -1e-9 || p > 1.0 + 1e-9) {
            throw std::invalid_argument("loss: cross-entropy needs a probability vector");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("loss: cross-entropy prediction does not sum to 1");
    }
    double l = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (target_one_hot[i] != 0.0) {
            l -= target_one_hot[i] * std::log(std::max(pred[i], kLogFloor));
        }
    }
    return l;
}

ParamTensors ParamTensors::zeros_like(const Network& net) {
    ParamTensors p;
    p.weights.reserve(net.depth());
    p.biases.reserve(net.depth());
    for (const DenseLayer& lay : net.layers) {
        p.weights.emplace_back(lay.out_width(), lay.in_width());
        p.biases.emplace_back(lay.out_width(), 0.0);
    }
    return p;
}

bool ParamTensors::same_shape(const ParamTensors& o) const {
    if (weights.size() != o.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (!weights[l].same_shape(o.weights[l])) return false;
        if (biases[l].size() != o.biases[l].size()) return false;
    }
    return true;
}

bool ParamTensors::shape_matches(const Network& net) const {
    if (weights.size() != net.depth() || biases.size() != net.depth()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows != net.layers[l].out_width() ||
            weights[l].cols != net.layers[l].in_width() ||
            biases[l].size() != net.layers[l].out_width()) {
            return false;
        }
    }
    return true;
}

void ParamTensors::add(const ParamTensors& o) { add_scaled(o, 1.0); }

void ParamTensors::add_scaled(const ParamTensors& o, double s) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].data.size(); ++i) {
            weights[l].data[i] += s * o.weights[l].data[i];
        }
        for (std::size_t i = 0; i < biases[l].size(); ++i) {
            biases[l][i] += s * o.biases[l][i];
        }
    }
}

void ParamTensors::scale(double s) {
    for (auto& w : weights) {
        for (double& v : w.data) v *= s;
    }
    for (auto& b : biases) {
        for (double& v : b) v *= s;
    }
}

Gradients backward(const Network& net, const Vector& x, const Vector& target,
                   LossKind kind) {
    if (target.size() != net.output_width()) {
        throw std::invalid_argument("backward: target dimension mismatch");
    }
    const ForwardTrace tr = forward(net, x);
    Gradients g = ParamTensors::zeros_like(net);
    backprop_from_output(net, tr,
                         loss_gradient_wrt_output(tr.output(), target, kind), g,
                         GradMode::assign);
    return g;
}

void backward_accumulate(const Network& net, const Vector& x, const Vector& target,
                         LossKind kind, Gradients& acc) {
    if (target.size() != net.output_width()) {
        throw std::invalid_argument("backward: target dimension mismatch");
    }
    const ForwardTrace tr = forward(net, x);
    backprop_from_output(net, tr,
                         loss_gradient_wrt_output(tr.output(), target, kind), acc,
                         GradMode::accumulate);
}

std::vector<Gradients> output_gradients(const Network& net, const Vector& x) {
    const ForwardTrace tr = forward(net, x);
    std::vector<Gradients> out;
    out.reserve(net.output_width());
    for (std::size_t n = 0; n < net.output_width(); ++n) {
        out.push_back(ParamTensors::zeros_like(net));
        output_gradient_into(net, tr, n, out.back());
    }
    return out;
}

void output_gradient_into(const Network& net, const ForwardTrace& trace,
                          std::size_t output_unit, Gradients& out) {
    Vector seed(net.output_width(), 0.0);
    seed[output_unit] = 1.0;
    backprop_from_output(net, trace, std::move(seed), out, GradMode::assign);
}

std::size_t argmax_lowest(const Vector& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

Vector one_hot(const Network& net, int label) {
    Vector t(net.output_width(), 0.0);
    t[net.label_index(label)] = 1.0;
    return t;
}

} // namespace fusenet

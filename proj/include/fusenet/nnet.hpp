#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "fusenet/matrix.hpp"

namespace fusenet {

enum class Activation { identity, relu, sigmoid, softmax };
enum class LossKind { square, cross_entropy };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);
std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

/// Floor applied to predictions before taking logarithms in the
/// cross-entropy loss.
inline constexpr double kLogFloor = 1e-12;

struct DenseLayer {
    Matrix weights; ///< out_width x in_width
    Vector bias;    ///< out_width
    Activation activation = Activation::identity;

    std::size_t in_width() const { return weights.cols; }
    std::size_t out_width() const { return weights.rows; }
    bool operator==(const DenseLayer& o) const = default;
};

/// Layered dense feedforward classifier. class_labels names the output
/// units in order; softmax is permitted only on the final layer.
struct Network {
    std::vector<DenseLayer> layers;
    std::vector<int> class_labels;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_width() const { return layers.front().in_width(); }
    std::size_t output_width() const { return layers.back().out_width(); }

    /// Index of `label` in class_labels; throws for unknown labels.
    std::size_t label_index(int label) const;

    /// Throws if shapes, activations, labels, or finiteness are off.
    void validate() const;

    bool operator==(const Network& o) const = default;
};

struct LayerSpec {
    std::size_t width = 0;
    Activation activation = Activation::relu;
};

/// Builds a network with weights ~ N(0, 0.05^2) from the seeded generator
/// and zero biases. Identical seeds give bit-identical networks.
Network init_network(std::size_t input_width, const std::vector<LayerSpec>& arch,
                     std::vector<int> class_labels, std::uint64_t seed);

/// Pre- and post-activation vectors for every layer of one forward pass.
struct ForwardTrace {
    Vector input;
    std::vector<Vector> pre;
    std::vector<Vector> post;

    const Vector& output() const { return post.back(); }
};

ForwardTrace forward(const Network& net, const Vector& x);

double loss(const Vector& pred, const Vector& target_one_hot, LossKind kind);

/// One tensor per layer, shape-parallel to a Network's weights and biases.
/// Used for gradients, Fisher diagonals, and Adam moments.
struct ParamTensors {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static ParamTensors zeros_like(const Network& net);
    bool same_shape(const ParamTensors& o) const;
    bool shape_matches(const Network& net) const;

    void add(const ParamTensors& o);                ///< this += o
    void add_scaled(const ParamTensors& o, double s); ///< this += s*o
    void scale(double s);
};

using Gradients = ParamTensors;
using FisherDiag = ParamTensors; ///< entries are nonnegative by contract

/// Exact gradient of loss(forward(net, x), target) w.r.t. every parameter.
Gradients backward(const Network& net, const Vector& x, const Vector& target,
                   LossKind kind);

/// Adds the same gradient into `acc` without allocating; used for batch
/// accumulation.
void backward_accumulate(const Network& net, const Vector& x, const Vector& target,
                         LossKind kind, Gradients& acc);

/// Per-output-unit gradients: result[n] holds d(output_n)/d(theta) for the
/// post-activation output of unit n.
std::vector<Gradients> output_gradients(const Network& net, const Vector& x);

/// Writes d(output_n)/d(theta) into `out` (overwriting), reusing a forward
/// trace so callers can sweep all output units cheaply.
void output_gradient_into(const Network& net, const ForwardTrace& trace,
                          std::size_t output_unit, Gradients& out);

/// Argmax with ties broken toward the lowest index.
std::size_t argmax_lowest(const Vector& v);

/// One-hot target for `label` under the network's class ordering.
Vector one_hot(const Network& net, int label);

} // namespace fusenet

#include "fusenet/fuse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

namespace fusenet {

std::string to_string(FusionMethod m) {
    return m == FusionMethod::ws ? "ws" : "ewc";
}

FusionMethod fusion_method_from_string(const std::string& s) {
    if (s == "ws") return FusionMethod::ws;
    if (s == "ewc") return FusionMethod::ewc;
    throw std::invalid_argument("unknown fusion method: " + s);
}

std::string to_string(HiddenPolicy p) {
    switch (p) {
        case HiddenPolicy::sum: return "sum";
        case HiddenPolicy::average: return "average";
        case HiddenPolicy::ewc: return "ewc";
    }
    return "?";
}

HiddenPolicy hidden_policy_from_string(const std::string& s) {
    if (s == "sum") return HiddenPolicy::sum;
    if (s == "average") return HiddenPolicy::average;
    if (s == "ewc") return HiddenPolicy::ewc;
    throw std::invalid_argument("unknown hidden policy: " + s);
}

FusionSpec FusionSpec::ws_spec(HiddenPolicy policy, bool align) {
    FusionSpec s;
    s.method = FusionMethod::ws;
    s.hidden_policies = {policy};
    s.align = align;
    return s;
}

FusionSpec FusionSpec::ewc_spec(bool align) {
    FusionSpec s;
    s.method = FusionMethod::ewc;
    s.hidden_policies = {HiddenPolicy::ewc};
    s.align = align;
    return s;
}

std::vector<HiddenPolicy> FusionSpec::resolve_policies(std::size_t n_hidden) const {
    std::vector<HiddenPolicy> p = hidden_policies;
    if (p.empty()) {
        p.assign(1, method == FusionMethod::ws ? HiddenPolicy::sum
                                               : HiddenPolicy::ewc);
    }
    if (p.size() == 1) {
        p.assign(n_hidden, p[0]);
    }
    if (p.size() != n_hidden) {
        throw std::invalid_argument("fusion spec: policy count != hidden layers");
    }
    for (HiddenPolicy pol : p) {
        if (method == FusionMethod::ws && pol == HiddenPolicy::ewc) {
            throw std::invalid_argument("fusion spec: ws method cannot use ewc policy");
        }
        if (method == FusionMethod::ewc && pol != HiddenPolicy::ewc) {
            throw std::invalid_argument("fusion spec: ewc method requires ewc policy");
        }
    }
    return p;
}

namespace {

void check_layer_shapes(const DenseLayer& a, const DenseLayer& b) {
    if (!a.weights.same_shape(b.weights) || a.bias.size() != b.bias.size()) {
        throw std::invalid_argument("fuse: layer shapes differ");
    }
    if (a.activation != b.activation) {
        throw std::invalid_argument("fuse: layer activations differ");
    }
}

/// Entrywise Fisher-weighted mean. Each branch is bitwise symmetric under
/// swapping (a, fa) with (b, fb), and the degenerate cases are exact.
inline double ewc_entry(double ta, double tb, double fa, double fb,
                        double epsilon) {
    if (fa + fb < epsilon) return 0.5 * (ta + tb);
    if (ta == tb) return ta;
    if (fb == 0.0) return ta;
    if (fa == 0.0) return tb;
    return (fa * ta + fb * tb) / (fa + fb);
}

void check_nonneg(const Matrix& w, const Vector& b) {
    for (double v : w.data) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("fuse: Fisher entries must be nonnegative");
        }
    }
    for (double v : b) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("fuse: Fisher entries must be nonnegative");
        }
    }
}

void check_fusable(const Network& a, const Network& b) {
    if (a.depth() != b.depth()) {
        throw std::invalid_argument(
            "fuse: network depths differ (pad the shallower one first)");
    }
    if (a.input_width() != b.input_width()) {
        throw std::invalid_argument("fuse: input widths differ");
    }
    for (std::size_t l = 0; l + 1 < a.depth(); ++l) {
        if (a.layers[l].out_width() != b.layers[l].out_width()) {
            throw std::invalid_argument(
                "fuse: hidden widths differ (use pad_to_match first)");
        }
        if (a.layers[l].activation != b.layers[l].activation) {
            throw std::invalid_argument("fuse: hidden activations differ");
        }
    }
    if (a.layers.back().activation != b.layers.back().activation) {
        throw std::invalid_argument("fuse: output activations differ");
    }
}

} // namespace

DenseLayer ws_fuse_layer(const DenseLayer& a, const DenseLayer& b,
                         HiddenPolicy policy) {
    check_layer_shapes(a, b);
    if (policy == HiddenPolicy::ewc) {
        throw std::invalid_argument("ws_fuse_layer: policy must be sum or average");
    }
    const double s = policy == HiddenPolicy::sum ? 1.0 : 0.5;
    DenseLayer out = a;
    for (std::size_t i = 0; i < out.weights.data.size(); ++i) {
        out.weights.data[i] = s * (a.weights.data[i] + b.weights.data[i]);
    }
    for (std::size_t i = 0; i < out.bias.size(); ++i) {
        out.bias[i] = s * (a.bias[i] + b.bias[i]);
    }
    return out;
}

DenseLayer ewc_fuse_layer(const DenseLayer& a, const DenseLayer& b,
                          const Matrix& fisher_a_w, const Vector& fisher_a_b,
                          const Matrix& fisher_b_w, const Vector& fisher_b_b,
                          double epsilon) {
    check_layer_shapes(a, b);
    if (!fisher_a_w.same_shape(a.weights) || !fisher_b_w.same_shape(b.weights) ||
        fisher_a_b.size() != a.bias.size() || fisher_b_b.size() != b.bias.size()) {
        throw std::invalid_argument("ewc_fuse_layer: Fisher shapes differ");
    }
    check_nonneg(fisher_a_w, fisher_a_b);
    check_nonneg(fisher_b_w, fisher_b_b);

    DenseLayer out = a;
    for (std::size_t i = 0; i < out.weights.data.size(); ++i) {
        out.weights.data[i] = ewc_entry(a.weights.data[i], b.weights.data[i],
                                        fisher_a_w.data[i], fisher_b_w.data[i],
                                        epsilon);
    }
    for (std::size_t i = 0; i < out.bias.size(); ++i) {
        out.bias[i] = ewc_entry(a.bias[i], b.bias[i], fisher_a_b[i], fisher_b_b[i],
                                epsilon);
    }
    return out;
}

HeadConcat concat_output(const DenseLayer& head_a, const std::vector<int>& labels_a,
                         const DenseLayer& head_b, const std::vector<int>& labels_b) {
    if (head_a.in_width() != head_b.in_width()) {
        throw std::invalid_argument("concat_output: head input widths differ");
    }
    if (head_a.activation != head_b.activation) {
        throw std::invalid_argument("concat_output: head activations differ");
    }
    if (labels_a.size() != head_a.out_width() || labels_b.size() != head_b.out_width()) {
        throw std::invalid_argument("concat_output: label count != head width");
    }
    std::set<int> sa(labels_a.begin(), labels_a.end());
    for (int l : labels_b) {
        if (sa.count(l)) {
            throw std::invalid_argument("concat_output: class label sets overlap");
        }
    }

    HeadConcat out;
    out.layer.activation = head_a.activation;
    out.layer.weights = Matrix(head_a.out_width() + head_b.out_width(),
                               head_a.in_width());
    std::memcpy(out.layer.weights.data.data(), head_a.weights.data.data(),
                head_a.weights.data.size() * sizeof(double));
    std::memcpy(out.layer.weights.data.data() + head_a.weights.data.size(),
                head_b.weights.data.data(),
                head_b.weights.data.size() * sizeof(double));
    out.layer.bias = head_a.bias;
    out.layer.bias.insert(out.layer.bias.end(), head_b.bias.begin(),
                          head_b.bias.end());
    out.class_labels = labels_a;
    out.class_labels.insert(out.class_labels.end(), labels_b.begin(),
                            labels_b.end());
    return out;
}

Network pad_to_match(const Network& net,
                     const std::vector<std::size_t>& target_hidden_widths) {
    const std::size_t n_hidden = net.depth() - 1;
    if (target_hidden_widths.size() != n_hidden) {
        throw std::invalid_argument("pad_to_match: need one width per hidden layer");
    }
    for (std::size_t l = 0; l < n_hidden; ++l) {
        if (target_hidden_widths[l] < net.layers[l].out_width()) {
            throw std::invalid_argument("pad_to_match: cannot shrink a layer");
        }
    }

    Network out = net;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const std::size_t old_w = out.layers[l].out_width();
        const std::size_t new_w = target_hidden_widths[l];
        if (new_w == old_w) continue;

        Matrix w(new_w, out.layers[l].in_width());
        std::memcpy(w.data.data(), out.layers[l].weights.data.data(),
                    out.layers[l].weights.data.size() * sizeof(double));
        out.layers[l].weights = std::move(w);
        out.layers[l].bias.resize(new_w, 0.0);

        Matrix& next = out.layers[l + 1].weights;
        Matrix next_new(next.rows, new_w);
        for (std::size_t r = 0; r < next.rows; ++r) {
            std::memcpy(next_new.row(r), next.row(r), old_w * sizeof(double));
        }
        next = std::move(next_new);
    }
    out.validate();
    return out;
}

TrainedModel pad_to_match(const TrainedModel& model,
                          const std::vector<std::size_t>& target_hidden_widths) {
    TrainedModel out = model;
    out.network = pad_to_match(model.network, target_hidden_widths);
    if (model.fisher) {
        FisherDiag padded = ParamTensors::zeros_like(out.network);
        for (std::size_t l = 0; l < padded.weights.size(); ++l) {
            const Matrix& src = model.fisher->weights[l];
            for (std::size_t r = 0; r < src.rows; ++r) {
                std::memcpy(padded.weights[l].row(r), src.row(r),
                            src.cols * sizeof(double));
            }
            std::copy(model.fisher->biases[l].begin(), model.fisher->biases[l].end(),
                      padded.biases[l].begin());
        }
        out.fisher = std::move(padded);
    }
    return out;
}

std::pair<TrainedModel, FusionReport> fuse_pipeline(const TrainedModel& a,
                                                    const TrainedModel& b,
                                                    const FusionSpec& spec) {
    a.network.validate();
    b.network.validate();
    check_fusable(a.network, b.network);

    const std::size_t n_hidden = a.network.depth() - 1;
    const std::vector<HiddenPolicy> policies = spec.resolve_policies(n_hidden);
    const bool needs_fisher = spec.align || spec.method == FusionMethod::ewc;
    if (needs_fisher && (!a.fisher || !b.fisher)) {
        throw std::invalid_argument(
            "fuse_pipeline: method requires Fisher values on both models");
    }

    FusionReport report;
    report.method = spec.method;
    report.align_used = spec.align;
    report.weight_means_a = weight_mean_report(a.network);
    report.weight_means_b = weight_mean_report(b.network);
    if (spec.method == FusionMethod::ws) {
        auto warn_mean = [&report](const std::vector<LayerWeightStats>& stats,
                                   const char* which) {
            for (const LayerWeightStats& st : stats) {
                if (st.n >= 2 && std::abs(st.mean) > 3.0 * st.standard_error) {
                    report.warnings.push_back(
                        std::string("weights of network ") + which + " layer " +
                        std::to_string(st.layer) +
                        " have a mean significantly away from zero; the "
                        "summation mechanism may degrade");
                }
            }
        };
        warn_mean(report.weight_means_a, "A");
        warn_mean(report.weight_means_b, "B");
    }

    TrainedModel b_aligned = b;
    std::vector<AssignmentSolution> solutions;
    std::vector<double> identity_costs;
    if (spec.align) {
        AlignResult ar = align_networks(a, b, spec.cost_scope);
        b_aligned = std::move(ar.aligned_b);
        solutions = std::move(ar.solutions);
        identity_costs = std::move(ar.identity_costs);
    }

    TrainedModel fused;
    fused.network.layers.reserve(a.network.depth());
    for (std::size_t l = 0; l < n_hidden; ++l) {
        LayerFusionRecord rec;
        rec.layer = l;
        rec.policy = policies[l];
        if (spec.align) {
            rec.cost_before = identity_costs[l];
            rec.cost_after = solutions[l].total_cost;
        }
        report.layers.push_back(rec);

        if (policies[l] == HiddenPolicy::ewc) {
            fused.network.layers.push_back(ewc_fuse_layer(
                a.network.layers[l], b_aligned.network.layers[l],
                a.fisher->weights[l], a.fisher->biases[l],
                b_aligned.fisher->weights[l], b_aligned.fisher->biases[l],
                spec.epsilon));
        } else {
            fused.network.layers.push_back(ws_fuse_layer(
                a.network.layers[l], b_aligned.network.layers[l], policies[l]));
        }
    }

    HeadConcat head = concat_output(a.network.layers.back(), a.network.class_labels,
                                    b_aligned.network.layers.back(),
                                    b_aligned.network.class_labels);
    fused.network.layers.push_back(std::move(head.layer));
    fused.network.class_labels = std::move(head.class_labels);
    fused.network.validate();

    if (a.fisher && b_aligned.fisher) {
        FisherDiag f = ParamTensors::zeros_like(fused.network);
        for (std::size_t l = 0; l < n_hidden; ++l) {
            for (std::size_t i = 0; i < f.weights[l].data.size(); ++i) {
                f.weights[l].data[i] = a.fisher->weights[l].data[i] +
                                       b_aligned.fisher->weights[l].data[i];
            }
            for (std::size_t i = 0; i < f.biases[l].size(); ++i) {
                f.biases[l][i] =
                    a.fisher->biases[l][i] + b_aligned.fisher->biases[l][i];
            }
        }
        const Matrix& ha = a.fisher->weights.back();
        const Matrix& hb = b_aligned.fisher->weights.back();
        Matrix& hf = f.weights.back();
        std::memcpy(hf.data.data(), ha.data.data(), ha.data.size() * sizeof(double));
        std::memcpy(hf.data.data() + ha.data.size(), hb.data.data(),
                    hb.data.size() * sizeof(double));
        Vector& bf = f.biases.back();
        std::copy(a.fisher->biases.back().begin(), a.fisher->biases.back().end(),
                  bf.begin());
        std::copy(b_aligned.fisher->biases.back().begin(),
                  b_aligned.fisher->biases.back().end(),
                  bf.begin() + static_cast<std::ptrdiff_t>(ha.rows));
        fused.fisher = std::move(f);
    }

    return {std::move(fused), std::move(report)};
}

} // namespace fusenet

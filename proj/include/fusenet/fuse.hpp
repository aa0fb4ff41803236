#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusenet/align.hpp"
#include "fusenet/diagnostics.hpp"
#include "fusenet/eval.hpp"
#include "fusenet/train.hpp"

namespace fusenet {

enum class FusionMethod { ws, ewc };
enum class HiddenPolicy { sum, average, ewc };

std::string to_string(FusionMethod m);
FusionMethod fusion_method_from_string(const std::string& s);
std::string to_string(HiddenPolicy p);
HiddenPolicy hidden_policy_from_string(const std::string& s);

struct FusionSpec {
    FusionMethod method = FusionMethod::ws;
    /// Per-hidden-layer policy; empty means the method default (sum for ws,
    /// ewc for ewc); a single entry broadcasts to all hidden layers.
    std::vector<HiddenPolicy> hidden_policies;
    bool align = false;
    double epsilon = 1e-12; ///< Fisher-sum guard below which the plain average is used
    CostScope cost_scope = CostScope::presynaptic;

    static FusionSpec ws_spec(HiddenPolicy policy = HiddenPolicy::sum,
                              bool align = false);
    static FusionSpec ewc_spec(bool align = true);

    /// Expands to one policy per hidden layer and checks the method/policy
    /// compatibility rules.
    std::vector<HiddenPolicy> resolve_policies(std::size_t n_hidden) const;
};

/// Element-wise sum or average of two same-shape layers.
DenseLayer ws_fuse_layer(const DenseLayer& a, const DenseLayer& b,
                         HiddenPolicy policy);

/// Element-wise Fisher-weighted mean (F_a*t_a+F_b*t_b)/(F_a+F_b); entries
/// whose Fisher sum is below epsilon fall back to the plain average.
DenseLayer ewc_fuse_layer(const DenseLayer& a, const DenseLayer& b,
                          const Matrix& fisher_a_w, const Vector& fisher_a_b,
                          const Matrix& fisher_b_w, const Vector& fisher_b_b,
                          double epsilon);

struct HeadConcat {
    DenseLayer layer;
    std::vector<int> class_labels;
};

/// Stacks headA's output rows over headB's and concatenates the label
/// lists (A first). Label sets must be disjoint.
HeadConcat concat_output(const DenseLayer& head_a, const std::vector<int>& labels_a,
                         const DenseLayer& head_b, const std::vector<int>& labels_b);

/// Grows hidden layers to the target widths with zero weights/biases;
/// forward outputs on the original classes are unchanged.
Network pad_to_match(const Network& net,
                     const std::vector<std::size_t>& target_hidden_widths);

/// pad_to_match on the network plus zero-padding of the stored Fisher.
TrainedModel pad_to_match(const TrainedModel& model,
                          const std::vector<std::size_t>& target_hidden_widths);

struct LayerFusionRecord {
    std::size_t layer = 0;
    HiddenPolicy policy = HiddenPolicy::sum;
    /// Pairing cost of the identity matching and of the solved assignment
    /// (present when alignment ran).
    std::optional<double> cost_before;
    std::optional<double> cost_after;
};

struct FusionReport {
    FusionMethod method = FusionMethod::ws;
    bool align_used = false;
    std::vector<LayerFusionRecord> layers;
    std::vector<LayerWeightStats> weight_means_a;
    std::vector<LayerWeightStats> weight_means_b;
    std::vector<std::string> warnings;
    /// Filled by evaluation stages, absent straight out of the pipeline.
    std::optional<double> accuracy;
    std::optional<ConfusionMatrix> confusion;
};

/// Full fusion: optional alignment of B onto A, per-layer hidden fusion,
/// output-head concatenation over the disjoint class union. The fused
/// model's Fisher is the entrywise sum on hidden layers and the stacked
/// source values on the head.
std::pair<TrainedModel, FusionReport> fuse_pipeline(const TrainedModel& a,
                                                    const TrainedModel& b,
                                                    const FusionSpec& spec);

} // namespace fusenet

#pragma once
#include <cstddef>
#include <vector>

#include "fusenet/fisher.hpp"
#include "fusenet/nnet.hpp"
#include "fusenet/train.hpp"

namespace fusenet {

/// Minimum-cost perfect matching of a square nonnegative cost matrix.
/// permutation[k] = l pairs row node k with column node l.
struct AssignmentSolution {
    std::vector<std::size_t> permutation;
    double total_cost = 0.0;
};

/// Which weights enter the node-pairing cost. Presynaptic (incoming row +
/// bias) is the default; the variant additionally includes the node's
/// outgoing column of the next layer.
enum class CostScope { presynaptic, presynaptic_and_postsynaptic };

/// Pairing cost between hidden units k of A and l of B at `layer`:
/// sum over the involved parameters of F_a*F_b/(F_a+F_b) * (theta_a-theta_b)^2,
/// with zero-denominator terms contributing 0.
Matrix pair_cost(const Network& a, const Network& b, const FisherDiag& fisher_a,
                 const FisherDiag& fisher_b, std::size_t layer,
                 CostScope scope = CostScope::presynaptic);

/// Exact O(n^3) assignment solver (Jonker-Volgenant style shortest
/// augmenting paths). Rejects non-square, negative, or non-finite input.
AssignmentSolution solve_assignment(const Matrix& cost);

/// Reorders the units of hidden layer `layer_index` so that new unit j is
/// old unit perm[j]; the next layer's weight columns follow. Forward
/// outputs are unchanged.
Network permute_hidden(const Network& net, std::size_t layer_index,
                       const std::vector<std::size_t>& perm);

/// Same reordering applied to a shape-parallel tensor set (Fisher values,
/// gradients).
ParamTensors permute_hidden(const ParamTensors& params, std::size_t layer_index,
                            const std::vector<std::size_t>& perm);

struct AlignResult {
    TrainedModel aligned_b;
    std::vector<AssignmentSolution> solutions; ///< one per hidden layer
    std::vector<double> identity_costs; ///< cost of the unpermuted pairing per layer
};

/// Zips B onto A hidden layer by hidden layer from the input side outward:
/// each layer's pairing cost is built on presynaptic weights already
/// aligned by the earlier iterations, solved exactly, and the permutation
/// applied to B's network and Fisher values.
AlignResult align_networks(const TrainedModel& a, const TrainedModel& b,
                           CostScope scope = CostScope::presynaptic);

} // namespace fusenet

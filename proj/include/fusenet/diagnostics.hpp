#pragma once
#include <cstdint>
#include <vector>

#include "fusenet/dataset.hpp"
#include "fusenet/nnet.hpp"

namespace fusenet {

struct PeqEstimate {
    double preserved = 0.0; ///< fraction of draws with sgn(a+b) == sgn(a)
    double flipped = 0.0;   ///< complementary fraction; preserved+flipped == 1
    std::size_t n_samples = 0;
};

/// Monte-Carlo frequency of the summed presynaptic term keeping the native
/// term's sign, with a ~ N(0, sigma_a^2) and b ~ N(0, sigma_b^2) i.i.d.
/// Deterministic per seed; ~0.75 for equal sigmas.
PeqEstimate estimate_peq(std::size_t n_samples, double sigma_a, double sigma_b,
                         std::uint64_t seed);

struct LayerWeightStats {
    std::size_t layer = 0;
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;       ///< sample standard deviation (n-1)
    double standard_error = 0.0;
};

/// Sample statistics over each layer's weight entries (biases excluded).
std::vector<LayerWeightStats> weight_mean_report(const Network& net);

/// For each unit of the first hidden layer: the ratio of the mean absolute
/// pre-activation under A to the one under B across the probe samples.
/// A zero denominator yields +infinity.
std::vector<double> dominance_report(const Network& a, const Network& b,
                                     const Dataset& probes);

} // namespace fusenet

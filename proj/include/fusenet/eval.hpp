#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "fusenet/dataset.hpp"
#include "fusenet/nnet.hpp"

namespace fusenet {

/// K x K integer counts; rows are true classes, columns predictions, both
/// in the order of `classes`.
struct ConfusionMatrix {
    std::vector<int> classes;
    std::vector<std::uint64_t> counts; ///< row-major K*K

    std::uint64_t at(std::size_t r, std::size_t c) const {
        return counts[r * classes.size() + c];
    }
    std::uint64_t& at(std::size_t r, std::size_t c) {
        return counts[r * classes.size() + c];
    }
    std::uint64_t row_sum(std::size_t r) const;
    std::uint64_t trace() const;
    std::uint64_t total() const;
};

struct EvalResult {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

/// Argmax classification over all output units; ties break toward the
/// lowest unit index. test.class_set must be covered by the network labels.
EvalResult evaluate(const Network& net, const Dataset& test);

/// Same, but the argmax runs over the `allowed` output units only and the
/// test set must contain only those classes.
EvalResult evaluate_restricted(const Network& net, const Dataset& test,
                               const std::vector<int>& allowed);

/// Sample mean and sample standard deviation (n-1) of >= 2 accuracy runs.
std::pair<double, double> aggregate(const std::vector<double>& runs);

} // namespace fusenet

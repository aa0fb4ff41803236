#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "fusenet/dataset.hpp"
#include "fusenet/train.hpp"

namespace fusenet {

struct FisherOptions {
    /// 0 = use every sample; otherwise a seeded subsample of this size.
    std::size_t max_samples = 0;
    /// Draw the label from the model's own output distribution instead of
    /// using the true label (cross-entropy variant only). Defaults off.
    bool sample_labels_from_model = false;
    std::uint64_t seed = 0;
};

struct FisherResult {
    FisherDiag diag;
    std::vector<std::string> warnings;
};

/// Per-parameter importance for square-loss models: the sum over all
/// patterns and output units of the squared per-output gradient. Additive
/// over dataset partitions; magnitudes scale with the sample count, so
/// never compare values computed from datasets of different size.
FisherResult square_loss_fisher(const TrainedModel& model, const Dataset& data,
                                const FisherOptions& opts = {});

/// Per-parameter importance for cross-entropy models: the empirical mean
/// over samples of the squared loss gradient at the sample's label.
FisherResult cross_entropy_fisher(const TrainedModel& model, const Dataset& data,
                                  const FisherOptions& opts = {});

/// The variant matching the model's own training loss kind.
FisherResult fisher_for_model(const TrainedModel& model, const Dataset& data,
                              const FisherOptions& opts = {});

/// Throws unless f is shape-parallel to net with finite nonnegative entries.
void validate_fisher(const FisherDiag& f, const Network& net);

} // namespace fusenet

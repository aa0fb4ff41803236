#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusenet/dataset.hpp"
#include "fusenet/nnet.hpp"

namespace fusenet {

struct TrainHyper {
    double learning_rate = 1e-3;
    std::size_t batch_size = 200;
    std::size_t max_epochs = 100;
    std::size_t patience = 5; ///< epochs without validation improvement
    LossKind loss_kind = LossKind::cross_entropy;
    double l2_coeff = 0.0; ///< (l2/2)*sum(w^2) added to the loss, weights only
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainMeta {
    TrainHyper hyper;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    std::size_t epochs_run = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct TrainedModel {
    Network network;
    std::optional<FisherDiag> fisher;
    std::optional<TrainMeta> meta; ///< absent for fused models

    LossKind loss_kind_or(LossKind fallback) const {
        return meta ? meta->hyper.loss_kind : fallback;
    }
};

/// Adam (beta1=0.9, beta2=0.999, eps=1e-8) with per-epoch seeded shuffling
/// and early stopping on validation accuracy; the returned network is the
/// snapshot with the best validation accuracy. Pure function of its inputs.
TrainedModel train(const Network& net, const Dataset& train_set,
                   const Dataset& val_set, const TrainHyper& hyper);

/// Fraction of samples whose argmax prediction matches the label.
double accuracy(const Network& net, const Dataset& data);

} // namespace fusenet

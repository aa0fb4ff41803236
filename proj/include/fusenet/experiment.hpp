#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusenet/dataset.hpp"
#include "fusenet/fuse.hpp"
#include "fusenet/train.hpp"

namespace fusenet {

struct ArchSpec {
    std::vector<std::size_t> hidden_widths; ///< empty = linear classifier
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::softmax;
};

/// A named fusion recipe for experiment runs.
struct MethodSpec {
    FusionMethod method = FusionMethod::ws;
    HiddenPolicy ws_policy = HiddenPolicy::sum;
    bool align = false;

    std::string name() const;
    static MethodSpec parse(const std::string& name);
    FusionSpec to_fusion_spec() const;
};

struct ExperimentConfig {
    ArchSpec arch;
    TrainHyper hyper;
    std::vector<MethodSpec> methods;
    std::size_t repetitions = 3;
    std::uint64_t master_seed = 1;
    double val_fraction = 0.2; ///< carved from each constituent's training split
    /// Fixed class split for every repetition; empty = draw a fresh split
    /// of half the classes per repetition from the sub-seed.
    std::vector<int> fixed_classes_a;
    std::size_t fisher_max_samples = 0;
};

struct FusedOutcome {
    std::string method;
    double accuracy = 0.0; ///< on the full union-class test set
    std::vector<std::string> warnings;
};

struct RepetitionResult {
    std::uint64_t seed = 0;
    std::vector<int> classes_a;
    std::vector<int> classes_b;
    double accuracy_a = 0.0; ///< constituent accuracy on its native test classes
    double accuracy_b = 0.0;
    double val_accuracy_a = 0.0;
    double val_accuracy_b = 0.0;
    std::size_t epochs_a = 0;
    std::size_t epochs_b = 0;
    std::vector<FusedOutcome> fused;
};

/// Trains the two constituents for one repetition and returns them with
/// Fisher values attached; exposed so callers can fuse/evaluate further.
struct RepetitionModels {
    TrainedModel a;
    TrainedModel b;
    Dataset test_a; ///< test samples of A's classes
    Dataset test_b;
};

RepetitionModels train_constituents(const Dataset& train_pool,
                                    const Dataset& test_set,
                                    const std::vector<int>& classes_a,
                                    const ExperimentConfig& cfg,
                                    std::uint64_t rep_seed);

RepetitionResult run_repetition(const Dataset& train_pool, const Dataset& test_set,
                                const std::vector<int>& classes_a,
                                const ExperimentConfig& cfg,
                                std::uint64_t rep_seed);

struct MethodAggregate {
    std::string method;
    double mean = 0.0;
    double stddev = 0.0;
};

struct ExperimentSummary {
    std::vector<RepetitionResult> repetitions;
    MethodAggregate constituents; ///< over all constituent accuracies
    std::vector<MethodAggregate> fused;
    bool partial = false;  ///< a repetition failed; results above are incomplete
    std::string error;
};

ExperimentSummary run_experiment(const Dataset& train_pool,
                                 const Dataset& test_set,
                                 const ExperimentConfig& cfg);

} // namespace fusenet

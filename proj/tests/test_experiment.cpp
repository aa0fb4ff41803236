#include <doctest.h>

#include "fusenet/experiment.hpp"
#include "fusenet/rng.hpp"

using namespace fusenet;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.arch.hidden_widths = {16};
    cfg.hyper.batch_size = 32;
    cfg.hyper.max_epochs = 10;
    cfg.hyper.patience = 5;
    cfg.methods = {MethodSpec::parse("ws"), MethodSpec::parse("ewc")};
    cfg.repetitions = 2;
    cfg.master_seed = 7;
    return cfg;
}

} // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("method recipes parse to and from their names") {
    for (const char* name :
         {"ws", "ws-average", "ws-aligned", "ewc", "ewc-noalign"}) {
        CHECK(MethodSpec::parse(name).name() == name);
    }
    CHECK_THROWS_AS(MethodSpec::parse("mystery"), std::invalid_argument);
    CHECK(MethodSpec::parse("ewc").align);
    CHECK(!MethodSpec::parse("ewc-noalign").align);
    CHECK(!MethodSpec::parse("ws").align);
}

TEST_CASE("run_experiment is deterministic and draws fresh splits per repetition") {
    const Dataset pool = synth_blobs(6, 10, 60, 0.8, 0.05, 51).dataset;
    const Dataset test = synth_blobs(6, 10, 20, 0.8, 0.05, 51).dataset;
    const ExperimentConfig cfg = small_config();
    const ExperimentSummary s1 = run_experiment(pool, test, cfg);
    const ExperimentSummary s2 = run_experiment(pool, test, cfg);
    REQUIRE(s1.repetitions.size() == 2);
    CHECK(!s1.partial);
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(s1.repetitions[r].classes_a == s2.repetitions[r].classes_a);
        CHECK(s1.repetitions[r].accuracy_a == s2.repetitions[r].accuracy_a);
        REQUIRE(s1.repetitions[r].fused.size() == 2);
        for (std::size_t f = 0; f < 2; ++f) {
            CHECK(s1.repetitions[r].fused[f].accuracy ==
                  s2.repetitions[r].fused[f].accuracy);
        }
        // a 6-class pool splits 3/3
        CHECK(s1.repetitions[r].classes_a.size() == 3);
        CHECK(s1.repetitions[r].classes_b.size() == 3);
    }
    CHECK(s1.repetitions[0].classes_a != s1.repetitions[1].classes_a);
}

TEST_CASE("a fixed class split is honored in every repetition") {
    const Dataset pool = synth_blobs(4, 8, 50, 0.8, 0.05, 52).dataset;
    const Dataset test = synth_blobs(4, 8, 15, 0.8, 0.05, 52).dataset;
    ExperimentConfig cfg = small_config();
    cfg.fixed_classes_a = {1, 3};
    const ExperimentSummary s = run_experiment(pool, test, cfg);
    for (const RepetitionResult& rep : s.repetitions) {
        CHECK(rep.classes_a == std::vector<int>{1, 3});
        CHECK(rep.classes_b == std::vector<int>{0, 2});
    }
}

TEST_CASE("a failing repetition aborts with partial results flagged") {
    const Dataset pool = synth_blobs(4, 8, 50, 0.8, 0.05, 53).dataset;
    const Dataset test = synth_blobs(4, 8, 15, 0.8, 0.05, 53).dataset;
    ExperimentConfig cfg = small_config();
    cfg.fixed_classes_a = {0, 1, 2, 3}; // improper split fails inside the rep
    const ExperimentSummary s = run_experiment(pool, test, cfg);
    CHECK(s.partial);
    CHECK(s.repetitions.empty());
    CHECK(!s.error.empty());
}

TEST_CASE("aggregates cover constituents and every requested method") {
    const Dataset pool = synth_blobs(4, 8, 60, 0.8, 0.05, 54).dataset;
    const Dataset test = synth_blobs(4, 8, 20, 0.8, 0.05, 54).dataset;
    const ExperimentSummary s = run_experiment(pool, test, small_config());
    REQUIRE(s.fused.size() == 2);
    CHECK(s.fused[0].method == "ws");
    CHECK(s.fused[1].method == "ewc");
    CHECK(s.constituents.mean > 0.0);
    for (const MethodAggregate& agg : s.fused) {
        CHECK(agg.mean >= 0.0);
        CHECK(agg.mean <= 1.0);
    }
}

TEST_SUITE_END();

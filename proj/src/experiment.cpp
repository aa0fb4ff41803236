#include "fusenet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fusenet/eval.hpp"
#include "fusenet/fisher.hpp"
#include "fusenet/rng.hpp"

namespace fusenet {

std::string MethodSpec::name() const {
    if (method == FusionMethod::ewc) {
        return align ? "ewc" : "ewc-noalign";
    }
    std::string n = ws_policy == HiddenPolicy::average ? "ws-average" : "ws";
    if (align) n += "-aligned";
    return n;
}

MethodSpec MethodSpec::parse(const std::string& name) {
    MethodSpec m;
    if (name == "ws") {
        m.method = FusionMethod::ws;
    } else if (name == "ws-average") {
        m.method = FusionMethod::ws;
        m.ws_policy = HiddenPolicy::average;
    } else if (name == "ws-aligned") {
        m.method = FusionMethod::ws;
        m.align = true;
    } else if (name == "ewc") {
        m.method = FusionMethod::ewc;
        m.align = true;
    } else if (name == "ewc-noalign") {
        m.method = FusionMethod::ewc;
        m.align = false;
    } else {
        throw std::invalid_argument("unknown fusion recipe: " + name);
    }
    return m;
}

FusionSpec MethodSpec::to_fusion_spec() const {
    FusionSpec s;
    s.method = method;
    s.align = align;
    s.hidden_policies = {method == FusionMethod::ewc ? HiddenPolicy::ewc
                                                     : ws_policy};
    return s;
}

namespace {

std::vector<LayerSpec> build_arch(const ArchSpec& arch, std::size_t n_classes) {
    std::vector<LayerSpec> layers;
    for (std::size_t w : arch.hidden_widths) {
        layers.push_back({w, arch.hidden_activation});
    }
    layers.push_back({n_classes, arch.output_activation});
    return layers;
}

TrainedModel train_one(const Dataset& data, const std::vector<int>& classes,
                       const ExperimentConfig& cfg, std::uint64_t init_seed,
                       std::uint64_t train_seed, std::uint64_t fisher_seed) {
    std::size_t val_count = static_cast<std::size_t>(
        std::lround(cfg.val_fraction * static_cast<double>(data.size())));
    val_count = std::clamp<std::size_t>(val_count, 1, data.size() - 1);
    auto [train_split, val_split] = holdout(data, val_count, train_seed);

    Network net = init_network(data.feature_dim(),
                               build_arch(cfg.arch, classes.size()), classes,
                               init_seed);
    TrainHyper hyper = cfg.hyper;
    hyper.seed = train_seed;
    TrainedModel model = train(net, train_split, val_split, hyper);

    FisherOptions fopts;
    fopts.max_samples = cfg.fisher_max_samples;
    fopts.seed = fisher_seed;
    FisherResult fr = fisher_for_model(model, train_split, fopts);
    model.fisher = std::move(fr.diag);
    if (model.meta) {
        model.meta->warnings.insert(model.meta->warnings.end(),
                                    fr.warnings.begin(), fr.warnings.end());
    }
    return model;
}

} // namespace

RepetitionModels train_constituents(const Dataset& train_pool,
                                    const Dataset& test_set,
                                    const std::vector<int>& classes_a,
                                    const ExperimentConfig& cfg,
                                    std::uint64_t rep_seed) {
    std::vector<int> sorted_a = classes_a;
    std::sort(sorted_a.begin(), sorted_a.end());

    auto [pool_a, pool_b] = split_by_class(train_pool, sorted_a);
    std::vector<int> classes_b = pool_b.class_set;

    RepetitionModels out;
    out.a = train_one(pool_a, sorted_a, cfg, derive_seed(rep_seed, 1),
                      derive_seed(rep_seed, 2), derive_seed(rep_seed, 3));
    out.b = train_one(pool_b, classes_b, cfg, derive_seed(rep_seed, 4),
                      derive_seed(rep_seed, 5), derive_seed(rep_seed, 6));
    auto [test_a, test_b] = split_by_class(test_set, sorted_a);
    out.test_a = std::move(test_a);
    out.test_b = std::move(test_b);
    return out;
}

RepetitionResult run_repetition(const Dataset& train_pool, const Dataset& test_set,
                                const std::vector<int>& classes_a,
                                const ExperimentConfig& cfg,
                                std::uint64_t rep_seed) {
    RepetitionModels models =
        train_constituents(train_pool, test_set, classes_a, cfg, rep_seed);

    RepetitionResult rep;
    rep.seed = rep_seed;
    rep.classes_a = models.a.network.class_labels;
    rep.classes_b = models.b.network.class_labels;
    rep.accuracy_a = evaluate(models.a.network, models.test_a).accuracy;
    rep.accuracy_b = evaluate(models.b.network, models.test_b).accuracy;
    rep.val_accuracy_a = models.a.meta->val_accuracy;
    rep.val_accuracy_b = models.b.meta->val_accuracy;
    rep.epochs_a = models.a.meta->epochs_run;
    rep.epochs_b = models.b.meta->epochs_run;

    for (const MethodSpec& m : cfg.methods) {
        auto [fused, report] = fuse_pipeline(models.a, models.b, m.to_fusion_spec());
        FusedOutcome outcome;
        outcome.method = m.name();
        outcome.accuracy = evaluate(fused.network, test_set).accuracy;
        outcome.warnings = report.warnings;
        rep.fused.push_back(std::move(outcome));
    }
    return rep;
}

ExperimentSummary run_experiment(const Dataset& train_pool,
                                 const Dataset& test_set,
                                 const ExperimentConfig& cfg) {
    if (cfg.repetitions < 1) {
        throw std::invalid_argument("experiment: repetitions must be >= 1");
    }
    ExperimentSummary summary;
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        const std::uint64_t rep_seed = derive_seed(cfg.master_seed, r);
        try {
            std::vector<int> classes_a = cfg.fixed_classes_a;
            if (classes_a.empty()) {
                std::vector<int> all = train_pool.class_set;
                Rng rng(derive_seed(rep_seed, 0));
                rng.shuffle(all);
                classes_a.assign(all.begin(),
                                 all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2));
            }
            summary.repetitions.push_back(
                run_repetition(train_pool, test_set, classes_a, cfg, rep_seed));
        } catch (const std::exception& e) {
            summary.partial = true;
            summary.error = "repetition " + std::to_string(r) + " failed: " + e.what();
            break;
        }
    }

    auto aggregate_values = [](const std::string& name,
                               const std::vector<double>& vals) {
        MethodAggregate agg;
        agg.method = name;
        if (vals.size() >= 2) {
            const auto [m, s] = aggregate(vals);
            agg.mean = m;
            agg.stddev = s;
        } else if (vals.size() == 1) {
            agg.mean = vals[0];
        }
        return agg;
    };

    std::vector<double> constituent_accs;
    for (const RepetitionResult& rep : summary.repetitions) {
        constituent_accs.push_back(rep.accuracy_a);
        constituent_accs.push_back(rep.accuracy_b);
    }
    summary.constituents = aggregate_values("constituent", constituent_accs);

    for (const MethodSpec& m : cfg.methods) {
        std::vector<double> accs;
        for (const RepetitionResult& rep : summary.repetitions) {
            for (const FusedOutcome& f : rep.fused) {
                if (f.method == m.name()) accs.push_back(f.accuracy);
            }
        }
        summary.fused.push_back(aggregate_values(m.name(), accs));
    }
    return summary;
}

} // namespace fusenet

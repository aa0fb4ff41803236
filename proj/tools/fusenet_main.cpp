// fusenet - train, fuse, and evaluate dense classifiers without retraining.
//
// Subcommands: gen-data, train, fuse, eval, experiment, diag.
// Machine output is JSON on stdout; --pretty switches to an indented
// rendering. All commands are deterministic functions of their arguments,
// input files, and seeds.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fusenet/dataset.hpp"
#include "fusenet/diagnostics.hpp"
#include "fusenet/eval.hpp"
#include "fusenet/experiment.hpp"
#include "fusenet/fisher.hpp"
#include "fusenet/fuse.hpp"
#include "fusenet/model_io.hpp"
#include "fusenet/report_json.hpp"
#include "fusenet/rng.hpp"
#include "fusenet/train.hpp"

using nlohmann::json;

namespace {

void emit(const json& j, bool pretty) {
    if (pretty) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << j.dump() << "\n";
    }
}

std::vector<int> parse_class_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

fusenet::Dataset load_filtered(const std::string& images, const std::string& labels,
                               const std::string& classes_csv) {
    fusenet::Dataset d = fusenet::load_idx(images, labels);
    if (classes_csv.empty()) return d;
    const std::vector<int> classes = parse_class_list(classes_csv);
    if (classes.size() >= d.class_set.size()) return d;
    auto [kept, rest] = fusenet::split_by_class(d, classes);
    (void)rest;
    return kept;
}

struct TrainArgs {
    std::string images, labels, classes_csv, out_path;
    std::string hidden_csv = "800";
    std::string hidden_act = "relu", out_act = "softmax", loss = "cross_entropy";
    double lr = 1e-3, l2 = 0.0, val_fraction = 0.2;
    std::size_t batch = 200, epochs = 60, patience = 5, val_count = 0;
    std::uint64_t seed = 1;
    bool no_fisher = false, fisher_sampled_labels = false;
    std::size_t fisher_samples = 0;
    bool pretty = false;
};

int run_train(const TrainArgs& a) {
    fusenet::Dataset data = load_filtered(a.images, a.labels, a.classes_csv);

    std::size_t val_count = a.val_count;
    if (val_count == 0) {
        val_count = static_cast<std::size_t>(
            std::lround(a.val_fraction * static_cast<double>(data.size())));
    }
    if (val_count == 0 || val_count >= data.size()) {
        throw std::invalid_argument("train: validation count out of range");
    }
    auto [train_split, val_split] = fusenet::holdout(data, val_count, a.seed);

    std::vector<fusenet::LayerSpec> arch;
    if (!a.hidden_csv.empty() && a.hidden_csv != "0") {
        for (int w : parse_class_list(a.hidden_csv)) {
            arch.push_back({static_cast<std::size_t>(w),
                            fusenet::activation_from_string(a.hidden_act)});
        }
    }
    arch.push_back({data.class_set.size(),
                    fusenet::activation_from_string(a.out_act)});

    fusenet::TrainHyper hyper;
    hyper.learning_rate = a.lr;
    hyper.batch_size = a.batch;
    hyper.max_epochs = a.epochs;
    hyper.patience = a.patience;
    hyper.loss_kind = fusenet::loss_kind_from_string(a.loss);
    hyper.l2_coeff = a.l2;
    hyper.seed = fusenet::derive_seed(a.seed, 1);

    fusenet::Network net =
        fusenet::init_network(data.feature_dim(), arch, data.class_set,
                              fusenet::derive_seed(a.seed, 0));
    fusenet::TrainedModel model =
        fusenet::train(net, train_split, val_split, hyper);

    if (!a.no_fisher) {
        fusenet::FisherOptions fopts;
        fopts.max_samples = a.fisher_samples;
        fopts.sample_labels_from_model = a.fisher_sampled_labels;
        fopts.seed = fusenet::derive_seed(a.seed, 2);
        fusenet::FisherResult fr =
            fusenet::fisher_for_model(model, train_split, fopts);
        model.fisher = std::move(fr.diag);
        model.meta->warnings.insert(model.meta->warnings.end(),
                                    fr.warnings.begin(), fr.warnings.end());
    }

    fusenet::save_model(model, a.out_path);
    emit({{"model", a.out_path},
          {"classes", model.network.class_labels},
          {"train_accuracy", model.meta->train_accuracy},
          {"val_accuracy", model.meta->val_accuracy},
          {"epochs_run", model.meta->epochs_run},
          {"fisher", model.fisher.has_value()}},
         a.pretty);
    return 0;
}

struct FuseArgs {
    std::string model_a, model_b, out_path, report_path;
    std::string method = "ws", policy;
    std::string eval_images, eval_labels;
    bool align = false, no_align = false;
    double epsilon = 1e-12;
    bool postsynaptic_cost = false;
    bool pretty = false;
};

int run_fuse(const FuseArgs& a) {
    const fusenet::TrainedModel ma = fusenet::load_model(a.model_a);
    const fusenet::TrainedModel mb = fusenet::load_model(a.model_b);

    fusenet::FusionSpec spec;
    spec.method = fusenet::fusion_method_from_string(a.method);
    spec.align = spec.method == fusenet::FusionMethod::ewc;
    if (a.align) spec.align = true;
    if (a.no_align) spec.align = false;
    spec.epsilon = a.epsilon;
    if (a.postsynaptic_cost) {
        spec.cost_scope = fusenet::CostScope::presynaptic_and_postsynaptic;
    }
    if (!a.policy.empty()) {
        std::stringstream ss(a.policy);
        std::string item;
        spec.hidden_policies.clear();
        while (std::getline(ss, item, ',')) {
            spec.hidden_policies.push_back(fusenet::hidden_policy_from_string(item));
        }
    }

    auto [fused, report] = fusenet::fuse_pipeline(ma, mb, spec);
    fusenet::save_model(fused, a.out_path);

    if (!a.eval_images.empty()) {
        const fusenet::Dataset test =
            fusenet::load_idx(a.eval_images, a.eval_labels);
        const fusenet::EvalResult r = fusenet::evaluate(fused.network, test);
        report.accuracy = r.accuracy;
        report.confusion = r.confusion;
    }

    json jr = fusenet::to_json(report);
    jr["model"] = a.out_path;
    if (!a.report_path.empty()) {
        std::ofstream rf(a.report_path, std::ios::trunc);
        if (!rf) {
            throw std::runtime_error("cannot write report: " + a.report_path);
        }
        rf << jr.dump(2) << "\n";
    }
    emit(jr, a.pretty);
    return 0;
}

struct EvalArgs {
    std::string model, images, labels, classes_csv, restrict_csv;
    bool pretty = false;
};

int run_eval(const EvalArgs& a) {
    const fusenet::TrainedModel model = fusenet::load_model(a.model);
    const fusenet::Dataset test = load_filtered(a.images, a.labels, a.classes_csv);
    fusenet::EvalResult r;
    if (a.restrict_csv.empty()) {
        r = fusenet::evaluate(model.network, test);
    } else {
        r = fusenet::evaluate_restricted(model.network, test,
                                         parse_class_list(a.restrict_csv));
    }
    emit(fusenet::to_json(r), a.pretty);
    return 0;
}

struct GenDataArgs {
    std::size_t classes = 4, features = 16, per_class = 100;
    double center_scale = 0.8, noise = 0.05;
    std::uint64_t seed = 1;
    std::string out_images, out_labels;
    bool pretty = false;
};

int run_gen_data(const GenDataArgs& a) {
    fusenet::SynthBlobsResult r = fusenet::synth_blobs(
        a.classes, a.features, a.per_class, a.center_scale, a.noise, a.seed);
    fusenet::save_idx(r.dataset, a.out_images, a.out_labels);
    json j = {{"images", a.out_images},
              {"labels", a.out_labels},
              {"samples", r.dataset.size()},
              {"features", r.dataset.feature_dim()},
              {"classes", r.dataset.class_set}};
    if (r.clipped_values > 0) {
        j["warnings"] = {"noise_std too large for the [0,1] range; " +
                         std::to_string(r.clipped_values) + " values clipped"};
    }
    emit(j, a.pretty);
    return 0;
}

struct ExperimentArgs {
    std::string config_path;
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t repetitions = 0;
    std::uint64_t master_seed = 0;
    bool has_seed = false;
    bool pretty = false;
};

int run_experiment_cmd(const ExperimentArgs& a) {
    json cfg_json = json::object();
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) {
            throw std::runtime_error("cannot open config: " + a.config_path);
        }
        in >> cfg_json;
    }

    auto str = [&](const char* key, const std::string& cli_value) -> std::string {
        if (!cli_value.empty()) return cli_value;
        if (cfg_json.contains("data") && cfg_json["data"].contains(key)) {
            return cfg_json["data"][key].get<std::string>();
        }
        throw std::invalid_argument(std::string("experiment: missing data path ") +
                                    key);
    };

    fusenet::ExperimentConfig cfg;
    cfg.arch.hidden_widths =
        cfg_json.value("hidden", std::vector<std::size_t>{800});
    cfg.arch.hidden_activation = fusenet::activation_from_string(
        cfg_json.value("hidden_activation", std::string("relu")));
    cfg.arch.output_activation = fusenet::activation_from_string(
        cfg_json.value("output_activation", std::string("softmax")));
    if (cfg_json.contains("hyper")) {
        const json& h = cfg_json["hyper"];
        cfg.hyper.learning_rate = h.value("learning_rate", 1e-3);
        cfg.hyper.batch_size = h.value("batch_size", std::size_t{200});
        cfg.hyper.max_epochs = h.value("max_epochs", std::size_t{60});
        cfg.hyper.patience = h.value("patience", std::size_t{5});
        cfg.hyper.l2_coeff = h.value("l2_coeff", 0.0);
        cfg.hyper.loss_kind = fusenet::loss_kind_from_string(
            h.value("loss", std::string("cross_entropy")));
    }
    for (const auto& m :
         cfg_json.value("methods", std::vector<std::string>{"ws", "ewc"})) {
        cfg.methods.push_back(fusenet::MethodSpec::parse(m));
    }
    cfg.repetitions = a.repetitions > 0
                          ? a.repetitions
                          : cfg_json.value("repetitions", std::size_t{3});
    cfg.master_seed = a.has_seed ? a.master_seed
                                 : cfg_json.value("master_seed", std::uint64_t{1});
    cfg.val_fraction = cfg_json.value("val_fraction", 0.2);
    cfg.fixed_classes_a = cfg_json.value("classes_a", std::vector<int>{});
    cfg.fisher_max_samples = cfg_json.value("fisher_max_samples", std::size_t{0});

    const fusenet::Dataset train_pool = fusenet::load_idx(
        str("train_images", a.train_images), str("train_labels", a.train_labels));
    const fusenet::Dataset test_set = fusenet::load_idx(
        str("test_images", a.test_images), str("test_labels", a.test_labels));

    const fusenet::ExperimentSummary summary =
        fusenet::run_experiment(train_pool, test_set, cfg);
    emit(fusenet::to_json(summary), a.pretty);
    return summary.partial ? 1 : 0;
}

struct DiagArgs {
    bool peq = false;
    std::size_t n = 1000000;
    double sigma_a = 1.0, sigma_b = 1.0;
    std::uint64_t seed = 1;
    std::string model_a, model_b, images, labels, classes_csv;
    bool pretty = false;
};

int run_diag(const DiagArgs& a) {
    json j;
    if (a.peq) {
        j["peq"] = fusenet::to_json(
            fusenet::estimate_peq(a.n, a.sigma_a, a.sigma_b, a.seed));
    } else {
        if (a.model_a.empty() || a.model_b.empty()) {
            throw std::invalid_argument("diag: need --model-a/--model-b (or --peq)");
        }
        const fusenet::TrainedModel ma = fusenet::load_model(a.model_a);
        const fusenet::TrainedModel mb = fusenet::load_model(a.model_b);
        json means_a = json::array();
        for (const auto& s : fusenet::weight_mean_report(ma.network)) {
            means_a.push_back(fusenet::to_json(s));
        }
        json means_b = json::array();
        for (const auto& s : fusenet::weight_mean_report(mb.network)) {
            means_b.push_back(fusenet::to_json(s));
        }
        j["weight_means_a"] = std::move(means_a);
        j["weight_means_b"] = std::move(means_b);
        if (!a.images.empty()) {
            const fusenet::Dataset probes =
                load_filtered(a.images, a.labels, a.classes_csv);
            const std::vector<double> ratios =
                fusenet::dominance_report(ma.network, mb.network, probes);
            json jr = json::array();
            for (double r : ratios) {
                if (std::isinf(r)) {
                    jr.push_back("inf");
                } else {
                    jr.push_back(r);
                }
            }
            j["dominance_ratios"] = std::move(jr);
        }
    }
    emit(j, a.pretty);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge fusion of dense classifiers (weights summation / "
                 "Fisher-weighted consolidation)"};
    app.require_subcommand(1);

    TrainArgs ta;
    CLI::App* tr = app.add_subcommand(
        "train", "train a constituent and store it with its Fisher values");
    tr->add_option("--images", ta.images, "IDX image file")->required();
    tr->add_option("--labels", ta.labels, "IDX label file")->required();
    tr->add_option("--classes", ta.classes_csv,
                   "comma-separated class subset to train on");
    tr->add_option("--hidden", ta.hidden_csv,
                   "comma-separated hidden widths ('0' for none)");
    tr->add_option("--hidden-act", ta.hidden_act, "hidden activation");
    tr->add_option("--out-act", ta.out_act, "output activation");
    tr->add_option("--loss", ta.loss, "square | cross_entropy");
    tr->add_option("--lr", ta.lr, "learning rate");
    tr->add_option("--batch", ta.batch, "batch size");
    tr->add_option("--epochs", ta.epochs, "max epochs");
    tr->add_option("--patience", ta.patience, "early-stopping patience");
    tr->add_option("--l2", ta.l2, "L2 coefficient (weights only)");
    tr->add_option("--val-count", ta.val_count, "validation sample count");
    tr->add_option("--val-fraction", ta.val_fraction,
                   "validation fraction when --val-count is 0");
    tr->add_option("--seed", ta.seed, "master seed");
    tr->add_option("--fisher-samples", ta.fisher_samples,
                   "subsample size for Fisher (0 = full split)");
    tr->add_flag("--fisher-sampled-labels", ta.fisher_sampled_labels,
                 "draw Fisher labels from the model instead of the data");
    tr->add_flag("--no-fisher", ta.no_fisher, "skip Fisher computation");
    tr->add_option("--out", ta.out_path, "output model path")->required();
    tr->add_flag("--pretty", ta.pretty, "indented output");

    FuseArgs fa;
    CLI::App* fu = app.add_subcommand("fuse", "fuse two stored models");
    fu->add_option("model_a", fa.model_a, "first model file")->required();
    fu->add_option("model_b", fa.model_b, "second model file")->required();
    fu->add_option("--method", fa.method, "ws | ewc");
    fu->add_option("--policy", fa.policy,
                   "hidden policy (sum|average, per-layer csv allowed)");
    fu->add_flag("--align", fa.align, "align hidden nodes before fusing");
    fu->add_flag("--no-align", fa.no_align, "disable alignment");
    fu->add_option("--epsilon", fa.epsilon, "Fisher-sum floor for ewc entries");
    fu->add_flag("--postsynaptic-cost", fa.postsynaptic_cost,
                 "include outgoing weights in the pairing cost");
    fu->add_option("--out", fa.out_path, "fused model path")->required();
    fu->add_option("--report", fa.report_path, "also write the report here");
    fu->add_option("--eval-images", fa.eval_images,
                   "evaluate the fused model on this IDX image file");
    fu->add_option("--eval-labels", fa.eval_labels, "IDX labels for --eval-images");
    fu->add_flag("--pretty", fa.pretty, "indented output");

    EvalArgs ea;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a stored model");
    ev->add_option("model", ea.model, "model file")->required();
    ev->add_option("--images", ea.images, "IDX image file")->required();
    ev->add_option("--labels", ea.labels, "IDX label file")->required();
    ev->add_option("--classes", ea.classes_csv, "test class subset");
    ev->add_option("--restrict", ea.restrict_csv,
                   "restrict the argmax to these output labels");
    ev->add_flag("--pretty", ea.pretty, "indented output");

    GenDataArgs ga;
    CLI::App* ge =
        app.add_subcommand("gen-data", "write a synthetic Gaussian-blob IDX pair");
    ge->add_option("--classes", ga.classes, "number of classes");
    ge->add_option("--features", ga.features, "feature dimension");
    ge->add_option("--per-class", ga.per_class, "samples per class");
    ge->add_option("--center-scale", ga.center_scale, "center spread in [0,1]");
    ge->add_option("--noise", ga.noise, "per-feature noise std");
    ge->add_option("--seed", ga.seed, "seed");
    ge->add_option("--out-images", ga.out_images, "IDX image output")->required();
    ge->add_option("--out-labels", ga.out_labels, "IDX label output")->required();
    ge->add_flag("--pretty", ga.pretty, "indented output");

    ExperimentArgs xa;
    CLI::App* xp = app.add_subcommand(
        "experiment", "train/fuse/evaluate over repeated random class splits");
    xp->add_option("--config", xa.config_path, "JSON config file");
    xp->add_option("--train-images", xa.train_images, "IDX training images");
    xp->add_option("--train-labels", xa.train_labels, "IDX training labels");
    xp->add_option("--test-images", xa.test_images, "IDX test images");
    xp->add_option("--test-labels", xa.test_labels, "IDX test labels");
    xp->add_option("--repetitions", xa.repetitions, "override repetition count");
    xp->add_option("--master-seed", xa.master_seed, "override master seed")
        ->each([&xa](const std::string&) { xa.has_seed = true; });
    xp->add_flag("--pretty", xa.pretty, "indented output");

    DiagArgs da;
    CLI::App* dg = app.add_subcommand(
        "diag",
        "statistical diagnostics (sign-preservation estimate, weight means, "
        "dominance)");
    dg->add_flag("--peq", da.peq, "Monte-Carlo sign-preservation estimate");
    dg->add_option("--n", da.n, "sample count for --peq");
    dg->add_option("--sigma-a", da.sigma_a, "sigma of the native term");
    dg->add_option("--sigma-b", da.sigma_b, "sigma of the foreign term");
    dg->add_option("--seed", da.seed, "seed for --peq");
    dg->add_option("--model-a", da.model_a, "first model file");
    dg->add_option("--model-b", da.model_b, "second model file");
    dg->add_option("--images", da.images, "probe IDX images");
    dg->add_option("--labels", da.labels, "probe IDX labels");
    dg->add_option("--classes", da.classes_csv, "probe class subset");
    dg->add_flag("--pretty", da.pretty, "indented output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tr->parsed()) return run_train(ta);
        if (fu->parsed()) return run_fuse(fa);
        if (ev->parsed()) return run_eval(ea);
        if (ge->parsed()) return run_gen_data(ga);
        if (xp->parsed()) return run_experiment_cmd(xa);
        if (dg->parsed()) return run_diag(da);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

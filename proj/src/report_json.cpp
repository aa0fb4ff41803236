#include "fusenet/report_json.hpp"

namespace fusenet {

nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < cm.classes.size(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < cm.classes.size(); ++c) {
            row.push_back(cm.at(r, c));
        }
        rows.push_back(std::move(row));
    }
    return {{"classes", cm.classes}, {"counts", std::move(rows)}};
}

nlohmann::json to_json(const EvalResult& r) {
    return {{"accuracy", r.accuracy},
            {"confusion", to_json(r.confusion)},
            {"tie_break", "lowest-index"}};
}

nlohmann::json to_json(const LayerWeightStats& s) {
    return {{"layer", s.layer},
            {"n", s.n},
            {"mean", s.mean},
            {"stddev", s.stddev},
            {"standard_error", s.standard_error}};
}

nlohmann::json to_json(const FusionReport& r) {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerFusionRecord& rec : r.layers) {
        nlohmann::json jl = {{"layer", rec.layer},
                             {"policy", to_string(rec.policy)}};
        if (rec.cost_before) jl["alignment_cost_before"] = *rec.cost_before;
        if (rec.cost_after) jl["alignment_cost_after"] = *rec.cost_after;
        layers.push_back(std::move(jl));
    }
    auto stats = [](const std::vector<LayerWeightStats>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const LayerWeightStats& s : v) arr.push_back(to_json(s));
        return arr;
    };
    nlohmann::json j = {{"method", to_string(r.method)},
                        {"align", r.align_used},
                        {"layers", std::move(layers)},
                        {"weight_means_a", stats(r.weight_means_a)},
                        {"weight_means_b", stats(r.weight_means_b)},
                        {"warnings", r.warnings}};
    if (r.accuracy) j["accuracy"] = *r.accuracy;
    if (r.confusion) j["confusion"] = to_json(*r.confusion);
    return j;
}

nlohmann::json to_json(const PeqEstimate& p) {
    return {{"preserved", p.preserved},
            {"flipped", p.flipped},
            {"n_samples", p.n_samples}};
}

nlohmann::json to_json(const RepetitionResult& r) {
    nlohmann::json fused = nlohmann::json::array();
    for (const FusedOutcome& f : r.fused) {
        fused.push_back({{"method", f.method},
                         {"accuracy", f.accuracy},
                         {"warnings", f.warnings}});
    }
    return {{"seed", r.seed},
            {"classes_a", r.classes_a},
            {"classes_b", r.classes_b},
            {"accuracy_a", r.accuracy_a},
            {"accuracy_b", r.accuracy_b},
            {"val_accuracy_a", r.val_accuracy_a},
            {"val_accuracy_b", r.val_accuracy_b},
            {"epochs_a", r.epochs_a},
            {"epochs_b", r.epochs_b},
            {"fused", std::move(fused)}};
}

nlohmann::json to_json(const ExperimentSummary& s) {
    nlohmann::json reps = nlohmann::json::array();
    for (const RepetitionResult& r : s.repetitions) reps.push_back(to_json(r));
    auto agg = [](const MethodAggregate& a) {
        return nlohmann::json{
            {"method", a.method}, {"mean", a.mean}, {"stddev", a.stddev}};
    };
    nlohmann::json fused = nlohmann::json::array();
    for (const MethodAggregate& a : s.fused) fused.push_back(agg(a));
    nlohmann::json j = {{"repetitions", std::move(reps)},
                        {"constituents", agg(s.constituents)},
                        {"fused", std::move(fused)},
                        {"partial", s.partial}};
    if (s.partial) j["error"] = s.error;
    return j;
}

} // namespace fusenet

#pragma once
#include <json.hpp>

#include "fusenet/diagnostics.hpp"
#include "fusenet/eval.hpp"
#include "fusenet/experiment.hpp"
#include "fusenet/fuse.hpp"

namespace fusenet {

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const EvalResult& r);
nlohmann::json to_json(const LayerWeightStats& s);
nlohmann::json to_json(const FusionReport& r);
nlohmann::json to_json(const PeqEstimate& p);
nlohmann::json to_json(const RepetitionResult& r);
nlohmann::json to_json(const ExperimentSummary& s);

} // namespace fusenet

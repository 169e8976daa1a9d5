#pragma once

#include "telewip/experiment.hpp"
#include "telewip/trial.hpp"

#include "json.hpp"

#include <string>

namespace telewip {

nlohmann::json trial_to_json(const TrialRecord& rec);
/// Throws std::runtime_error on schema or version mismatch.
TrialRecord trial_from_json(const nlohmann::json& j);

/// Canonical serialization; identical records give identical bytes.
std::string dump_trial(const TrialRecord& rec);

void save_trial(const TrialRecord& rec, const std::string& path);
TrialRecord load_trial(const std::string& path);

nlohmann::json tape_to_json(const CommandTape& tape);
CommandTape tape_from_json(const nlohmann::json& j);
void save_tape(const CommandTape& tape, const std::string& path);
CommandTape load_tape(const std::string& path);

nlohmann::json summary_to_json(const CaseSummary& row);
nlohmann::json results_to_json(std::span<const CaseSummary> table);

}  // namespace telewip

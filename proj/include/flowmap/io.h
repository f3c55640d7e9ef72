#pragma once

#include "flowmap/contracts.h"
#include "flowmap/mapping.h"
#include "flowmap/taint.h"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

// JSON forms of session artifacts and check reports. All output goes through
// canonical(): sorted keys, two-space indent, trailing newline.

namespace flowmap::io {

using Json = nlohmann::json;

std::string canonical(const Json& j);
/// Parses JSON text; syntax errors become SchemaError naming `file`.
Json parse_json(std::string_view text, const std::string& file = {});

std::uint64_t fnv1a64(std::string_view data);
/// `prefix` followed by 16 hex digits of the FNV-1a hash of canonical(body).
std::string stable_id(std::string_view prefix, const Json& body);

// Mapping state (.map.json). Loading needs the models and PM it refers to.
Json to_json(const mapping::MappingEntry& e);
Json to_json(const mapping::MappingState& state);
mapping::MappingState mapping_state_from_json(const Json& j, std::vector<dfd::SecDfd> models,
                                              std::shared_ptr<const pm::ProgramModel> pm);

// Ground truth (.gt.json): [{"dfd": "...", "pm": "..."}].
mapping::GroundTruth parse_ground_truth(std::string_view text, const std::string& file = {});
std::string print_ground_truth(const mapping::GroundTruth& gt);
/// Confirms every pair as a user-defined mapping; returns the entry ids.
std::vector<std::string> apply_ground_truth(mapping::MappingState& state, const mapping::GroundTruth& gt);

/// Grouped suggestion view: entries per DFD element, best score first.
Json suggestions_view(const mapping::MappingState& state, const std::vector<mapping::MappingEntry>& suggestions);

// Findings carry an "id" derived from their content so UI markers survive
// reloads.
Json to_json(const contracts::Violation& v, const pm::ProgramModel& pm);
Json to_json(const contracts::Convergence& c);
Json to_json(const contracts::CheckResult& r, const pm::ProgramModel& pm);
Json to_json(const mapping::ComplianceReport& r);
Json design_leaks_json(const std::string& model, const std::vector<dfd::DesignLeak>& leaks);

Json to_json(const taint::TaintAlarm& a);
Json to_json(const taint::TaintResult& r);
Json to_json(const taint::ReductionReport& r);

Json to_json(const mapping::Evaluation& e);
Json to_json(const contracts::InjectionReport& r);

contracts::CryptoList crypto_list_from_json(const Json& j);
Json to_json(const contracts::CryptoList& list);

} // namespace flowmap::io

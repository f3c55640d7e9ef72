#pragma once

#include "flowmap/mapping.h"
#include "flowmap/signature_pattern.h"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Design-guided explicit-flow taint analysis over the program model.
// Signatures here are qualified definition signatures ("pkg.Type.m(P):R").

namespace flowmap::taint {

enum class Mode { Plain, PartlyOpt, FullyOpt };
std::string_view to_string(Mode m);
/// Accepts "plain", "partly", "fully" and the upper-case mode names.
Mode mode_from_string(std::string_view s);

using SignatureSet = std::set<std::string>;

struct AssetPolicy {
  SignatureSet sources;
  SignatureSet sinks;
  SignatureSet allowedSinks;
  bool operator==(const AssetPolicy&) const = default;
};

struct TaintConfig {
  Mode mode = Mode::Plain;
  std::map<std::string, AssetPolicy> perAsset; // asset ref "<model>/<asset>"
  SignatureSet defaultSources;
  SignatureSet defaultSinks;
  std::size_t alarmCap = 100;
  bool operator==(const TaintConfig&) const = default;
};

struct TaintAlarm {
  std::optional<std::string> asset;
  std::string source;
  std::string sink;
  std::vector<std::string> witness; // edge ids from a seed to the sink parameter
  auto operator<=>(const TaintAlarm&) const = default;
};

struct TaintRun {
  std::optional<std::string> asset;
  std::vector<TaintAlarm> alarms; // sorted by (source, sink), one per pair
  bool truncated = false;         // the alarm cap was reached
};

struct TaintResult {
  Mode mode = Mode::Plain;
  std::vector<TaintRun> runs;
  std::vector<std::string> unresolved; // signatures that name no definition
};

/// Signatures of all definitions matching any pattern; patterns matching
/// nothing are appended to `unresolved`.
SignatureSet expand_patterns(const pm::ProgramModel& pm, const std::vector<SignaturePattern>& patterns,
                             std::vector<std::string>* unresolved = nullptr);

SignatureSet derive_sources(const mapping::MappingState& state, const std::string& assetRef);
SignatureSet derive_allowed_sinks(const mapping::MappingState& state, const std::string& assetRef);
SignatureSet derive_zone_sinks(const mapping::MappingState& state, const std::string& assetRef);

/// PLAIN keeps only the defaults. The optimised modes hold one policy per
/// HIGH asset of every model.
TaintConfig build_config(Mode mode, const mapping::MappingState& state, const SignatureSet& defaultSources,
                         const SignatureSet& defaultSinks);

/// One propagation run from `sources` to `sinks`.
TaintRun run_taint(const pm::ProgramModel& pm, const SignatureSet& sources, const SignatureSet& sinks,
                   std::size_t alarmCap = 100, std::optional<std::string> asset = std::nullopt,
                   std::vector<std::string>* unresolved = nullptr);

/// PLAIN: one run over the defaults; otherwise one run per asset policy.
TaintResult run_taint(const pm::ProgramModel& pm, const TaintConfig& config);

/// Unique (source, sink) pairs per model: PLAIN counts its single run for
/// every model, the other modes count the union over that model's assets.
std::map<std::string, std::size_t> alarms_per_model(const TaintResult& result, const std::vector<std::string>& models);

struct ModeRow {
  Mode mode = Mode::Plain;
  std::map<std::string, std::size_t> perModel;
  double average = 0.0;
  std::optional<long> deltaPercent; // relative to PLAIN; empty for PLAIN or a zero baseline
};

struct ReductionReport {
  std::vector<ModeRow> rows;
  /// Fixed-width table: one line per mode with counts, average and change.
  std::string table() const;
};

/// "↓ 50%", "↑ 20%", "± 0%" or "n/a".
std::string format_delta(std::optional<long> percent);

ReductionReport compare_configs(const pm::ProgramModel& pm, const std::vector<TaintConfig>& configs,
                                const std::vector<std::string>& models);

} // namespace flowmap::taint

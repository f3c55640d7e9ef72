#pragma once

#include "flowmap/mapping.h"
#include "flowmap/signature_pattern.h"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Verification of process contracts against the mapped implementation.

namespace flowmap::contracts {

enum class Capability { Encrypt, Decrypt, Both };
std::string_view to_string(Capability c);

struct CryptoEntry {
  Capability capability = Capability::Both;
  SignaturePattern pattern;
  bool operator==(const CryptoEntry&) const = default;
};

/// Well-known cryptographic operations, each tagged with what it can do.
class CryptoList {
public:
  /// One `enc|dec|both<TAB>pattern` per line; '#' comments and blank lines
  /// are ignored. Throws ParseError with line and column.
  static CryptoList parse(std::string_view text, const std::string& file = {});
  std::string print() const;

  /// Adds entries not already present; returns how many were new.
  std::size_t merge(const CryptoList& other);

  const std::vector<CryptoEntry>& entries() const { return entries_; }
  bool capable(std::string_view qualifiedSignature, Capability required) const;

  bool operator==(const CryptoList&) const = default;

private:
  std::vector<CryptoEntry> entries_;
};

/// Implemented flow: data entering the process through `sources` that reaches
/// the outgoing edge `target`.
struct IFlow {
  std::set<std::string> sources; // PM edge ids
  std::string target;            // PM edge id
  auto operator<=>(const IFlow&) const = default;
};

enum class ViolationKind { CryptoAbsence, AbsenceNotImplemented, DivergenceNoBiunique, DivergenceNotInDfd };
std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind = ViolationKind::CryptoAbsence;
  std::string process;                 // DFD ref
  std::optional<std::size_t> contract; // index into the process's contracts
  std::optional<std::string> outAsset;
  std::optional<IFlow> iflow;
  std::vector<std::string> definitions;
  auto operator<=>(const Violation&) const = default;
};

struct Convergence {
  std::string process;
  std::size_t contract = 0;
  std::optional<std::string> outAsset;
  std::optional<IFlow> iflow;                                     // forward/join evidence
  std::vector<std::pair<std::string, std::string>> cryptoCalls;  // caller, callee definitions
  auto operator<=>(const Convergence&) const = default;
};

struct CheckResult {
  std::vector<Violation> violations;
  std::vector<Convergence> convergences;
  void append(CheckResult other);
  void normalize(); // sort and dedupe
};

/// Definitions confirmed for a DFD element (accepted or user-defined).
pm::DefSet confirmed_definitions(const mapping::MappingState& state, const std::string& elementRef);

/// Encrypt/decrypt contracts: every such contract needs a mapped definition
/// calling a listed operation with the matching capability.
CheckResult check_crypto(const mapping::MappingState& state, const CryptoList& list);
CheckResult check_crypto(const mapping::MappingState& state, const CryptoList& list, const std::string& processRef);

/// I-Flow extraction for one process. Throws PreconditionError when the
/// process has no confirmed definition.
std::set<IFlow> extract_iflows(const mapping::MappingState& state, const std::string& processRef);

/// Identifies one expected flow: a forward/join contract and one out asset.
struct DFlowKey {
  std::size_t contract = 0;
  std::string outAsset;
  auto operator<=>(const DFlowKey&) const = default;
};

/// Candidate I-Flows per D-Flow (the matching step of the processing check).
std::map<DFlowKey, std::set<IFlow>> match_dflows(const mapping::MappingState& state, const std::string& processRef,
                                                 const std::set<IFlow>& iflows);

CheckResult check_processing_contracts(const mapping::MappingState& state, const std::string& processRef,
                                       const std::set<IFlow>& iflows);

/// Forward/join check for every process of every model; unmapped processes
/// report each of their D-Flows as not implemented.
CheckResult check_all_processing(const mapping::MappingState& state);

/// Injective assignment of one candidate to every key, by backtracking with
/// keys ordered fail-first (fewest candidates, then key order) and candidates
/// in set order. Empty input yields an empty assignment.
template <class K, class V>
std::optional<std::map<K, V>> find_biunique(const std::map<K, std::set<V>>& matches) {
  std::vector<const std::pair<const K, std::set<V>>*> order;
  for (const auto& kv : matches) order.push_back(&kv);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->second.size() < b->second.size(); });
  std::map<K, V> assignment;
  std::set<V> used;
  auto solve = [&](auto&& self, std::size_t i) -> bool {
    if (i == order.size()) return true;
    for (const V& v : order[i]->second) {
      if (used.count(v)) continue;
      used.insert(v);
      assignment[order[i]->first] = v;
      if (self(self, i + 1)) return true;
      used.erase(v);
      assignment.erase(order[i]->first);
    }
    return false;
  };
  if (!solve(solve, 0)) return std::nullopt;
  return assignment;
}

enum class InjectKind { Encrypt, Decrypt, Forward, Join };
std::string_view to_string(InjectKind k);
/// Parses "enc,dec,fwd,join" (any subset).
std::set<InjectKind> parse_inject_kinds(std::string_view csv);

std::vector<dfd::ProcessContract> enumerate_injectable_contracts(const dfd::SecDfd& model, const std::string& process,
                                                                 const std::set<InjectKind>& kinds);

struct InjectionOutcome {
  std::string process; // DFD ref
  dfd::ProcessContract contract;
  bool detected = false;                 // expected absence reported
  std::vector<Violation> unexpected;     // new violations other than the expected one
  std::vector<Convergence> lost;         // baseline convergences that disappeared
};

struct InjectionScore {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::optional<double> precision, recall;
};

struct InjectionReport {
  std::vector<InjectionOutcome> outcomes;
  InjectionScore crypto, processing;
};

/// Injects every enumerable contract in turn and scores detection. Throws
/// PreconditionError when the baseline already has violations.
InjectionReport run_injection_experiment(const mapping::MappingState& state, const CryptoList& list,
                                         const std::set<InjectKind>& kinds);

} // namespace flowmap::contracts

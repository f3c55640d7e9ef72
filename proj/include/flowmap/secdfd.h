#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Design-level model: security-annotated data flow diagrams, their textual
// form, label propagation and the attacker-zone leak check.

namespace flowmap::dfd {

enum class NodeKind { Process, ExternalEntity, DataStore };
enum class Label { Low, High };
enum class ContractKind { EncryptOrHash, Decrypt, Join, Forward };

std::string_view to_string(NodeKind kind);
std::string_view to_string(Label label);
std::string_view to_string(ContractKind kind);

struct ProcessContract {
  ContractKind kind = ContractKind::Forward;
  std::vector<std::string> inAssets;
  std::vector<std::string> outAssets;

  bool operator==(const ProcessContract&) const = default;
};

struct DfdNode {
  std::string id;
  NodeKind kind = NodeKind::Process;
  std::vector<ProcessContract> contracts;

  bool operator==(const DfdNode&) const = default;
};

struct DfdFlow {
  int index = 0;
  std::string source;
  std::string target;
  std::vector<std::string> assets;

  bool carries(std::string_view asset) const;
  bool operator==(const DfdFlow&) const = default;
};

struct Asset {
  std::string name;
  std::string valueType;
  Label label = Label::Low;
  std::string source;
  std::vector<std::string> targets;

  bool operator==(const Asset&) const = default;
};

struct AttackerZone {
  std::string name;
  std::vector<std::string> nodes;
  std::vector<int> flows;

  bool operator==(const AttackerZone&) const = default;
};

/// Trust boundaries are kept only so that printing preserves them.
struct TrustBoundary {
  std::string name;
  std::vector<std::string> members;

  bool operator==(const TrustBoundary&) const = default;
};

struct SecDfd {
  std::string name;
  std::vector<DfdNode> nodes;
  std::vector<DfdFlow> flows;
  std::vector<Asset> assets;
  std::vector<AttackerZone> zones;
  std::vector<TrustBoundary> boundaries;

  const DfdNode* findNode(std::string_view id) const;
  const Asset* findAsset(std::string_view name) const;
  const DfdFlow* findFlow(int index) const;
  DfdNode* findNode(std::string_view id);

  /// Flows whose target (resp. source) is the given node, in flow order.
  std::vector<const DfdFlow*> flowsInto(std::string_view node) const;
  std::vector<const DfdFlow*> flowsFrom(std::string_view node) const;

  /// Distinct assets carried into / out of a node, sorted by name.
  std::vector<std::string> assetsInto(std::string_view node) const;
  std::vector<std::string> assetsOutOf(std::string_view node) const;

  bool operator==(const SecDfd&) const = default;
};

/// Parses the line-oriented SecDFD language. Throws ParseError carrying the
/// line and column of the first syntax or validation problem.
SecDfd parse_secdfd(std::string_view text, const std::string& fileName = {});

/// Canonical textual form; parse_secdfd(print_secdfd(m)) == m.
std::string print_secdfd(const SecDfd& model);

/// Checks every model invariant; throws InvalidArgument on the first problem.
/// parse_secdfd already validates, this is for programmatically built models.
void validate(const SecDfd& model);

/// Label of every (flow index, asset) occurrence.
struct LabelAssignment {
  std::map<std::pair<int, std::string>, Label> entries;

  Label at(int flow, const std::string& asset) const;
  bool operator==(const LabelAssignment&) const = default;
};

LabelAssignment propagate_labels(const SecDfd& model);

/// A confidential asset observable inside an attacker zone. `element` is a
/// node id, or "flow:<index>" for a zone member flow.
struct DesignLeak {
  std::string asset;
  std::string zone;
  std::string element;

  auto operator<=>(const DesignLeak&) const = default;
};

std::vector<DesignLeak> check_design_leaks(const SecDfd& model, const LabelAssignment& labels);

/// Elements the asset originates from, following contracts backwards.
std::set<std::string> trace_asset_origin(const SecDfd& model, const Asset& asset);

/// Index of the first contract of `process` listing `asset` as input, if any.
std::optional<std::size_t> first_contract_consuming(const DfdNode& process, std::string_view asset);

} // namespace flowmap::dfd

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Implementation-level program model (PM): declarations, call edges and
// data-flow edges between parameter, return, field and local endpoints.

namespace flowmap::pm {

/// Reserved type id used as the return type of methods without a result.
inline constexpr std::string_view kVoid = "VOID";

struct TypeDecl {
  std::string id;
  std::string qualifiedName;
  std::optional<std::string> supertype; // type id
  std::vector<std::string> fields;      // field ids
  std::vector<std::string> definitions; // definition ids

  std::string simpleName() const;
  bool operator==(const TypeDecl&) const = default;
};

struct MethodName {
  std::string id;
  std::string name;
  bool operator==(const MethodName&) const = default;
};

struct MethodSignature {
  std::string id;
  std::string name; // method-name id
  std::vector<std::string> params; // type ids
  std::string returnType;          // type id or kVoid
  bool operator==(const MethodSignature&) const = default;
};

struct SourceLocation {
  std::string file;
  int line = 0;
  int endLine = 0;
  bool operator==(const SourceLocation&) const = default;
};

struct MethodDefinition {
  std::string id;
  std::string signature;     // signature id
  std::string declaringType; // type id
  SourceLocation loc;
  bool operator==(const MethodDefinition&) const = default;
};

struct FieldDecl {
  std::string id;
  std::string name;
  std::string declaringType;
  std::string type;
  bool operator==(const FieldDecl&) const = default;
};

struct CallEdge {
  std::string caller; // definition id
  std::string callee; // definition id
  int site = 0;       // ordinal of the call expression within the caller
  auto operator<=>(const CallEdge&) const = default;
};

enum class FlowKind { ParamPass, ReturnFlow, Intra };
std::string_view to_string(FlowKind kind);
FlowKind flow_kind_from_string(std::string_view s);

struct FlowEndpoint {
  enum class Kind { Param, Return, Field, Local };
  Kind kind = Kind::Local;
  std::string ref; // definition id, or field id for Field
  int index = 0;   // parameter position or local ordinal

  static FlowEndpoint param(std::string def, int k) { return {Kind::Param, std::move(def), k}; }
  static FlowEndpoint returnOf(std::string def) { return {Kind::Return, std::move(def), 0}; }
  static FlowEndpoint field(std::string f) { return {Kind::Field, std::move(f), 0}; }
  static FlowEndpoint local(std::string def, int n) { return {Kind::Local, std::move(def), n}; }

  /// Owning definition; fields belong to no definition.
  std::optional<std::string> owner() const;

  /// "param:<defId>:<k>", "return:<defId>", "field:<fieldId>", "local:<defId>:<n>"
  std::string encode() const;
  static FlowEndpoint decode(std::string_view text);

  auto operator<=>(const FlowEndpoint&) const = default;
};

struct DataFlowEdge {
  std::string id;
  FlowKind kind = FlowKind::Intra;
  FlowEndpoint from;
  FlowEndpoint to;
  std::string type; // communicated type id
  bool operator==(const DataFlowEdge&) const = default;
};

/// Raw declarations; ProgramModel::build validates them and adds indices.
struct ProgramParts {
  std::vector<TypeDecl> types;
  std::vector<MethodName> methodNames;
  std::vector<MethodSignature> signatures;
  std::vector<MethodDefinition> definitions;
  std::vector<FieldDecl> fields;
  std::vector<CallEdge> calls;
  std::vector<DataFlowEdge> flows;

  bool operator==(const ProgramParts&) const = default;
};

using DefSet = std::set<std::string>;
using EdgeSet = std::set<std::string>;

/// Immutable, validated program model. All collections are kept sorted by id.
class ProgramModel {
public:
  ProgramModel() = default;

  /// Validates every invariant (ids unique, references resolve, endpoint kinds
  /// consistent with edge kinds) and throws SchemaError otherwise.
  static ProgramModel build(ProgramParts parts);

  const std::vector<TypeDecl>& types() const { return parts_.types; }
  const std::vector<MethodName>& methodNames() const { return parts_.methodNames; }
  const std::vector<MethodSignature>& signatures() const { return parts_.signatures; }
  const std::vector<MethodDefinition>& definitions() const { return parts_.definitions; }
  const std::vector<FieldDecl>& fields() const { return parts_.fields; }
  const std::vector<CallEdge>& calls() const { return parts_.calls; }
  const std::vector<DataFlowEdge>& flows() const { return parts_.flows; }

  const TypeDecl* type(std::string_view id) const;
  const MethodName* methodName(std::string_view id) const;
  const MethodSignature* signature(std::string_view id) const;
  const MethodDefinition* definition(std::string_view id) const;
  const FieldDecl* field(std::string_view id) const;
  const DataFlowEdge* edge(std::string_view id) const;

  /// Lookup by qualified name ("pkg.Type" or a builtin such as "String").
  const TypeDecl* typeByQualifiedName(std::string_view name) const;

  std::vector<const MethodSignature*> signaturesNamed(std::string_view methodNameId) const;
  std::vector<const MethodDefinition*> definitionsOf(std::string_view signatureId) const;
  std::vector<const CallEdge*> callsFrom(std::string_view def) const;

  std::vector<const DataFlowEdge*> edgesInto(const FlowEndpoint& e) const;
  std::vector<const DataFlowEdge*> edgesFrom(const FlowEndpoint& e) const;

  /// Every endpoint owned by the definition that occurs on some edge.
  std::vector<FlowEndpoint> endpointsOf(std::string_view def) const;

  /// "pkg.Type.method(P1,P2):R" with qualified type names; used by crypto
  /// lists, taint source/sink lists and alarm reports.
  std::string qualifiedSignature(std::string_view def) const;
  /// Qualified name of a type id, "void" for kVoid.
  std::string typeName(std::string_view typeId) const;

  const ProgramParts& parts() const { return parts_; }
  bool operator==(const ProgramModel& o) const { return parts_ == o.parts_; }

private:
  void index();

  ProgramParts parts_;
  std::map<std::string, std::size_t, std::less<>> typeIdx_, nameIdx_, sigIdx_, defIdx_, fieldIdx_, edgeIdx_;
  std::map<std::string, std::size_t, std::less<>> typeByQName_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> sigsByName_, defsBySig_, callsByCaller_;
  std::map<FlowEndpoint, std::vector<std::size_t>> into_, from_;
  std::map<std::string, std::vector<FlowEndpoint>, std::less<>> endpointsByDef_;
};

// ---------------------------------------------------------------------------
// Flow queries used by the contract checks.

/// PARAM_PASS edges into parameters of `defs` and RETURN_FLOW edges into
/// `defs`, whose origin lies outside `defs`. Throws NotFoundError on an
/// unknown definition.
EdgeSet in_flows(const ProgramModel& pm, const DefSet& defs);

/// RETURN_FLOW edges out of `defs` and PARAM_PASS edges from `defs` into
/// parameters of definitions outside `defs`.
EdgeSet out_flows(const ProgramModel& pm, const DefSet& defs);

/// Candidates from which `target` is reachable walking edges backwards, only
/// passing through endpoints inside `defs` (fields count as inside).
EdgeSet reachable_bwd(const ProgramModel& pm, const std::string& target, const EdgeSet& candidates,
                      const DefSet& defs);

const std::string& communicated_type(const ProgramModel& pm, const std::string& edgeId);

} // namespace flowmap::pm

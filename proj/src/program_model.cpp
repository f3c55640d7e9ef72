#include "flowmap/program_model.h"

#include "flowmap/error.h"

#include <algorithm>
#include <deque>

namespace flowmap::pm {

std::string TypeDecl::simpleName() const {
  auto dot = qualifiedName.rfind('.');
  return dot == std::string::npos ? qualifiedName : qualifiedName.substr(dot + 1);
}

std::string_view to_string(FlowKind kind) {
  switch (kind) {
  case FlowKind::ParamPass: return "PARAM_PASS";
  case FlowKind::ReturnFlow: return "RETURN_FLOW";
  case FlowKind::Intra: return "INTRA";
  }
  return "?";
}

FlowKind flow_kind_from_string(std::string_view s) {
  if (s == "PARAM_PASS") return FlowKind::ParamPass;
  if (s == "RETURN_FLOW") return FlowKind::ReturnFlow;
  if (s == "INTRA") return FlowKind::Intra;
  throw SchemaError("unknown flow kind '" + std::string(s) + "'");
}

std::optional<std::string> FlowEndpoint::owner() const {
  if (kind == Kind::Field) return std::nullopt;
  return ref;
}

std::string FlowEndpoint::encode() const {
  switch (kind) {
  case Kind::Param: return "param:" + ref + ":" + std::to_string(index);
  case Kind::Return: return "return:" + ref;
  case Kind::Field: return "field:" + ref;
  case Kind::Local: return "local:" + ref + ":" + std::to_string(index);
  }
  return {};
}

namespace {

std::pair<std::string, int> splitIndexed(std::string_view rest, std::string_view text) {
  auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size())
    throw SchemaError("malformed endpoint '" + std::string(text) + "'");
  auto num = rest.substr(colon + 1);
  if (!std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw SchemaError("malformed endpoint index in '" + std::string(text) + "'");
  return {std::string(rest.substr(0, colon)), std::stoi(std::string(num))};
}

} // namespace

FlowEndpoint FlowEndpoint::decode(std::string_view text) {
  auto startsWith = [&](std::string_view p) { return text.substr(0, p.size()) == p; };
  if (startsWith("param:")) {
    auto [ref, k] = splitIndexed(text.substr(6), text);
    return param(ref, k);
  }
  if (startsWith("local:")) {
    auto [ref, n] = splitIndexed(text.substr(6), text);
    return local(ref, n);
  }
  if (startsWith("return:") && text.size() > 7) return returnOf(std::string(text.substr(7)));
  if (startsWith("field:") && text.size() > 6) return field(std::string(text.substr(6)));
  throw SchemaError("malformed endpoint '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void sortById(std::vector<T>& v) {
  std::sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.id < b.id; });
}

template <class T>
void buildIndex(const std::vector<T>& v, std::map<std::string, std::size_t, std::less<>>& idx, const char* what) {
  idx.clear();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!idx.emplace(v[i].id, i).second) throw SchemaError(std::string("duplicate ") + what + " id '" + v[i].id + "'");
}

template <class T>
const T* lookup(const std::vector<T>& v, const std::map<std::string, std::size_t, std::less<>>& idx,
                std::string_view id) {
  auto it = idx.find(id);
  return it == idx.end() ? nullptr : &v[it->second];
}

} // namespace

ProgramModel ProgramModel::build(ProgramParts parts) {
  sortById(parts.types);
  sortById(parts.methodNames);
  sortById(parts.signatures);
  sortById(parts.definitions);
  sortById(parts.fields);
  sortById(parts.flows);
  std::sort(parts.calls.begin(), parts.calls.end());
  parts.calls.erase(std::unique(parts.calls.begin(), parts.calls.end()), parts.calls.end());
  for (auto& t : parts.types) {
    std::sort(t.fields.begin(), t.fields.end());
    std::sort(t.definitions.begin(), t.definitions.end());
  }

  ProgramModel pm;
  pm.parts_ = std::move(parts);
  pm.index();

  const auto& P = pm.parts_;
  auto needType = [&](const std::string& id, const std::string& ctx, bool allowVoid) {
    if (allowVoid && id == kVoid) return;
    if (!pm.type(id)) throw SchemaError(ctx + " references unknown type '" + id + "'");
  };

  for (const auto& t : P.types) {
    if (t.supertype) needType(*t.supertype, "type '" + t.id + "'", false);
    for (const auto& f : t.fields) {
      const FieldDecl* fd = pm.field(f);
      if (!fd || fd->declaringType != t.id) throw SchemaError("type '" + t.id + "' lists foreign field '" + f + "'");
    }
    for (const auto& d : t.definitions) {
      const MethodDefinition* md = pm.definition(d);
      if (!md || md->declaringType != t.id)
        throw SchemaError("type '" + t.id + "' lists foreign definition '" + d + "'");
    }
  }
  for (const auto& f : P.fields) {
    needType(f.declaringType, "field '" + f.id + "'", false);
    needType(f.type, "field '" + f.id + "'", false);
    const auto& owned = pm.type(f.declaringType)->fields;
    if (!std::binary_search(owned.begin(), owned.end(), f.id))
      throw SchemaError("field '" + f.id + "' is not listed by its declaring type");
  }

  std::set<std::tuple<std::string, std::vector<std::string>, std::string>> sigKeys;
  for (const auto& s : P.signatures) {
    if (!pm.methodName(s.name)) throw SchemaError("signature '" + s.id + "' references unknown method name '" + s.name + "'");
    for (const auto& p : s.params) needType(p, "signature '" + s.id + "'", false);
    needType(s.returnType, "signature '" + s.id + "'", true);
    if (!sigKeys.insert({s.name, s.params, s.returnType}).second)
      throw SchemaError("duplicate signature '" + s.id + "'");
  }

  std::set<std::pair<std::string, std::string>> defKeys;
  for (const auto& d : P.definitions) {
    if (!pm.signature(d.signature)) throw SchemaError("definition '" + d.id + "' references unknown signature");
    needType(d.declaringType, "definition '" + d.id + "'", false);
    if (!defKeys.insert({d.signature, d.declaringType}).second)
      throw SchemaError("duplicate definition of '" + d.signature + "' in '" + d.declaringType + "'");
    const auto& owned = pm.type(d.declaringType)->definitions;
    if (!std::binary_search(owned.begin(), owned.end(), d.id))
      throw SchemaError("definition '" + d.id + "' is not listed by its declaring type");
  }

  for (const auto& c : P.calls) {
    if (!pm.definition(c.caller) || !pm.definition(c.callee))
      throw SchemaError("call edge references unknown definition ('" + c.caller + "' -> '" + c.callee + "')");
  }

  auto checkEndpoint = [&](const FlowEndpoint& e, const std::string& edge) {
    switch (e.kind) {
    case FlowEndpoint::Kind::Field:
      if (!pm.field(e.ref)) throw SchemaError("edge '" + edge + "' references unknown field '" + e.ref + "'");
      return;
    case FlowEndpoint::Kind::Param: {
      const MethodDefinition* d = pm.definition(e.ref);
      if (!d) break;
      if (e.index < 0 || e.index >= static_cast<int>(pm.signature(d->signature)->params.size()))
        throw SchemaError("edge '" + edge + "' references parameter " + std::to_string(e.index) + " of '" + e.ref + "'");
      return;
    }
    case FlowEndpoint::Kind::Return: {
      const MethodDefinition* d = pm.definition(e.ref);
      if (!d) break;
      if (pm.signature(d->signature)->returnType == kVoid)
        throw SchemaError("edge '" + edge + "' references the return of void method '" + e.ref + "'");
      return;
    }
    case FlowEndpoint::Kind::Local:
      if (!pm.definition(e.ref)) break;
      if (e.index < 0) throw SchemaError("edge '" + edge + "' has a negative local ordinal");
      return;
    }
    throw SchemaError("edge '" + edge + "' references unknown definition '" + e.ref + "'");
  };

  for (const auto& e : P.flows) {
    checkEndpoint(e.from, e.id);
    checkEndpoint(e.to, e.id);
    if (e.type == kVoid) throw SchemaError("edge '" + e.id + "' carries VOID");
    needType(e.type, "edge '" + e.id + "'", false);
    if (e.kind == FlowKind::ParamPass && e.to.kind != FlowEndpoint::Kind::Param)
      throw SchemaError("PARAM_PASS edge '" + e.id + "' must target a parameter");
    if (e.kind == FlowKind::ReturnFlow && e.from.kind != FlowEndpoint::Kind::Return)
      throw SchemaError("RETURN_FLOW edge '" + e.id + "' must originate at a return");
  }
  return pm;
}

void ProgramModel::index() {
  const auto& P = parts_;
  buildIndex(P.types, typeIdx_, "type");
  buildIndex(P.methodNames, nameIdx_, "method name");
  buildIndex(P.signatures, sigIdx_, "signature");
  buildIndex(P.definitions, defIdx_, "definition");
  buildIndex(P.fields, fieldIdx_, "field");
  buildIndex(P.flows, edgeIdx_, "flow");

  typeByQName_.clear();
  for (std::size_t i = 0; i < P.types.size(); ++i)
    if (!typeByQName_.emplace(P.types[i].qualifiedName, i).second)
      throw SchemaError("duplicate qualified type name '" + P.types[i].qualifiedName + "'");

  sigsByName_.clear();
  defsBySig_.clear();
  callsByCaller_.clear();
  for (std::size_t i = 0; i < P.signatures.size(); ++i) sigsByName_[P.signatures[i].name].push_back(i);
  for (std::size_t i = 0; i < P.definitions.size(); ++i) defsBySig_[P.definitions[i].signature].push_back(i);
  for (std::size_t i = 0; i < P.calls.size(); ++i) callsByCaller_[P.calls[i].caller].push_back(i);

  into_.clear();
  from_.clear();
  endpointsByDef_.clear();
  std::map<std::string, std::set<FlowEndpoint>> eps;
  for (std::size_t i = 0; i < P.flows.size(); ++i) {
    const auto& e = P.flows[i];
    into_[e.to].push_back(i);
    from_[e.from].push_back(i);
    if (auto o = e.from.owner()) eps[*o].insert(e.from);
    if (auto o = e.to.owner()) eps[*o].insert(e.to);
  }
  for (auto& [def, set] : eps) endpointsByDef_[def] = {set.begin(), set.end()};
}

const TypeDecl* ProgramModel::type(std::string_view id) const { return lookup(parts_.types, typeIdx_, id); }
const MethodName* ProgramModel::methodName(std::string_view id) const {
  return lookup(parts_.methodNames, nameIdx_, id);
}
const MethodSignature* ProgramModel::signature(std::string_view id) const {
  return lookup(parts_.signatures, sigIdx_, id);
}
const MethodDefinition* ProgramModel::definition(std::string_view id) const {
  return lookup(parts_.definitions, defIdx_, id);
}
const FieldDecl* ProgramModel::field(std::string_view id) const { return lookup(parts_.fields, fieldIdx_, id); }
const DataFlowEdge* ProgramModel::edge(std::string_view id) const { return lookup(parts_.flows, edgeIdx_, id); }

const TypeDecl* ProgramModel::typeByQualifiedName(std::string_view name) const {
  auto it = typeByQName_.find(name);
  return it == typeByQName_.end() ? nullptr : &parts_.types[it->second];
}

std::vector<const MethodSignature*> ProgramModel::signaturesNamed(std::string_view methodNameId) const {
  std::vector<const MethodSignature*> out;
  if (auto it = sigsByName_.find(methodNameId); it != sigsByName_.end())
    for (auto i : it->second) out.push_back(&parts_.signatures[i]);
  return out;
}

std::vector<const MethodDefinition*> ProgramModel::definitionsOf(std::string_view signatureId) const {
  std::vector<const MethodDefinition*> out;
  if (auto it = defsBySig_.find(signatureId); it != defsBySig_.end())
    for (auto i : it->second) out.push_back(&parts_.definitions[i]);
  return out;
}

std::vector<const CallEdge*> ProgramModel::callsFrom(std::string_view def) const {
  std::vector<const CallEdge*> out;
  if (auto it = callsByCaller_.find(def); it != callsByCaller_.end())
    for (auto i : it->second) out.push_back(&parts_.calls[i]);
  return out;
}

std::vector<const DataFlowEdge*> ProgramModel::edgesInto(const FlowEndpoint& e) const {
  std::vector<const DataFlowEdge*> out;
  if (auto it = into_.find(e); it != into_.end())
    for (auto i : it->second) out.push_back(&parts_.flows[i]);
  return out;
}

std::vector<const DataFlowEdge*> ProgramModel::edgesFrom(const FlowEndpoint& e) const {
  std::vector<const DataFlowEdge*> out;
  if (auto it = from_.find(e); it != from_.end())
    for (auto i : it->second) out.push_back(&parts_.flows[i]);
  return out;
}

std::vector<FlowEndpoint> ProgramModel::endpointsOf(std::string_view def) const {
  auto it = endpointsByDef_.find(def);
  return it == endpointsByDef_.end() ? std::vector<FlowEndpoint>{} : it->second;
}

std::string ProgramModel::typeName(std::string_view typeId) const {
  if (typeId == kVoid) return "void";
  const TypeDecl* t = type(typeId);
  return t ? t->qualifiedName : std::string(typeId);
}

std::string ProgramModel::qualifiedSignature(std::string_view def) const {
  const MethodDefinition* d = definition(def);
  if (!d) throw NotFoundError("unknown definition '" + std::string(def) + "'");
  const MethodSignature* s = signature(d->signature);
  std::string out = typeName(d->declaringType) + "." + methodName(s->name)->name + "(";
  for (std::size_t i = 0; i < s->params.size(); ++i) out += (i ? "," : "") + typeName(s->params[i]);
  return out + "):" + typeName(s->returnType);
}

// ---------------------------------------------------------------------------

namespace {

void requireDefs(const ProgramModel& pm, const DefSet& defs) {
  for (const auto& d : defs)
    if (!pm.definition(d)) throw NotFoundError("unknown definition '" + d + "'");
}

bool inside(const FlowEndpoint& e, const DefSet& defs) {
  auto o = e.owner();
  return o && defs.count(*o);
}

} // namespace

EdgeSet in_flows(const ProgramModel& pm, const DefSet& defs) {
  requireDefs(pm, defs);
  EdgeSet out;
  for (const auto& e : pm.flows()) {
    if (e.kind == FlowKind::Intra) continue;
    if (inside(e.to, defs) && !inside(e.from, defs)) out.insert(e.id);
  }
  return out;
}

EdgeSet out_flows(const ProgramModel& pm, const DefSet& defs) {
  requireDefs(pm, defs);
  EdgeSet out;
  for (const auto& e : pm.flows()) {
    if (e.kind == FlowKind::Intra) continue;
    if (inside(e.from, defs) && !inside(e.to, defs)) out.insert(e.id);
  }
  return out;
}

EdgeSet reachable_bwd(const ProgramModel& pm, const std::string& target, const EdgeSet& candidates,
                      const DefSet& defs) {
  const DataFlowEdge* t = pm.edge(target);
  if (!t) throw NotFoundError("unknown flow '" + target + "'");
  EdgeSet found;
  std::set<FlowEndpoint> seen{t->from};
  std::deque<FlowEndpoint> work{t->from};
  while (!work.empty()) {
    FlowEndpoint cur = work.front();
    work.pop_front();
    for (const DataFlowEdge* e : pm.edgesInto(cur)) {
      if (candidates.count(e->id)) found.insert(e->id);
      bool passable = e->from.kind == FlowEndpoint::Kind::Field || inside(e->from, defs);
      if (passable && seen.insert(e->from).second) work.push_back(e->from);
    }
  }
  return found;
}

const std::string& communicated_type(const ProgramModel& pm, const std::string& edgeId) {
  const DataFlowEdge* e = pm.edge(edgeId);
  if (!e) throw NotFoundError("unknown flow '" + edgeId + "'");
  return e->type;
}

} // namespace flowmap::pm

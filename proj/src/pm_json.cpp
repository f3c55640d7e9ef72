#include "flowmap/pm_json.h"

#include "flowmap/error.h"

#include <json.hpp>

namespace flowmap::pm {

using nlohmann::json;

namespace {

json encodeLoc(const SourceLocation& l) { return {{"file", l.file}, {"line", l.line}, {"endLine", l.endLine}}; }

// Strict object reader; finish() rejects keys that were never read.
class Obj {
public:
  Obj(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw SchemaError(ctx_ + ": expected an object");
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw SchemaError(ctx_ + ": unexpected key '" + k + "'");
  }

  const json& get(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw SchemaError(ctx_ + ": missing key '" + key + "'");
    seen_.insert(key);
    return *it;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  std::string str(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw SchemaError(ctx_ + ": '" + key + "' must be a string");
    return v.get<std::string>();
  }
  int integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer()) throw SchemaError(ctx_ + ": '" + key + "' must be an integer");
    return v.get<int>();
  }
  std::vector<std::string> strings(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) throw SchemaError(ctx_ + ": '" + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw SchemaError(ctx_ + ": '" + key + "' must contain strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

const json& array(Obj& o, const std::string& key) {
  const json& v = o.get(key);
  if (!v.is_array()) throw SchemaError("'" + key + "' must be an array");
  return v;
}

} // namespace

std::string save_pm(const ProgramModel& pm) {
  json j = json::object();
  json types = json::array();
  for (const auto& t : pm.types()) {
    json o = {{"id", t.id}, {"qualifiedName", t.qualifiedName}, {"fields", t.fields}, {"definitions", t.definitions}};
    if (t.supertype) o["supertype"] = *t.supertype;
    types.push_back(std::move(o));
  }
  json names = json::array();
  for (const auto& n : pm.methodNames()) names.push_back({{"id", n.id}, {"name", n.name}});
  json sigs = json::array();
  for (const auto& s : pm.signatures())
    sigs.push_back({{"id", s.id}, {"name", s.name}, {"params", s.params}, {"return", s.returnType}});
  json defs = json::array();
  for (const auto& d : pm.definitions())
    defs.push_back({{"id", d.id}, {"signature", d.signature}, {"declaringType", d.declaringType}, {"loc", encodeLoc(d.loc)}});
  json fields = json::array();
  for (const auto& f : pm.fields())
    fields.push_back({{"id", f.id}, {"name", f.name}, {"declaringType", f.declaringType}, {"type", f.type}});
  json calls = json::array();
  for (const auto& c : pm.calls()) calls.push_back({{"caller", c.caller}, {"callee", c.callee}, {"site", c.site}});
  json flows = json::array();
  for (const auto& e : pm.flows())
    flows.push_back({{"id", e.id},
                     {"kind", std::string(to_string(e.kind))},
                     {"from", e.from.encode()},
                     {"to", e.to.encode()},
                     {"type", e.type}});
  j["types"] = std::move(types);
  j["methodNames"] = std::move(names);
  j["signatures"] = std::move(sigs);
  j["definitions"] = std::move(defs);
  j["fields"] = std::move(fields);
  j["calls"] = std::move(calls);
  j["flows"] = std::move(flows);
  return j.dump(2) + "\n";
}

ProgramModel load_pm(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  ProgramParts parts;
  {
    Obj root(j, "program model");
    for (const auto& t : array(root, "types")) {
      Obj o(t, "type");
      TypeDecl d;
      d.id = o.str("id");
      d.qualifiedName = o.str("qualifiedName");
      if (o.has("supertype")) d.supertype = o.str("supertype");
      d.fields = o.strings("fields");
      d.definitions = o.strings("definitions");
      o.finish();
      parts.types.push_back(std::move(d));
    }
    for (const auto& n : array(root, "methodNames")) {
      Obj o(n, "method name");
      parts.methodNames.push_back({o.str("id"), o.str("name")});
      o.finish();
    }
    for (const auto& s : array(root, "signatures")) {
      Obj o(s, "signature");
      parts.signatures.push_back({o.str("id"), o.str("name"), o.strings("params"), o.str("return")});
      o.finish();
    }
    for (const auto& d : array(root, "definitions")) {
      Obj o(d, "definition");
      MethodDefinition md{o.str("id"), o.str("signature"), o.str("declaringType"), {}};
      Obj loc(o.get("loc"), "definition location");
      md.loc = {loc.str("file"), loc.integer("line"), loc.integer("endLine")};
      loc.finish();
      o.finish();
      parts.definitions.push_back(std::move(md));
    }
    for (const auto& f : array(root, "fields")) {
      Obj o(f, "field");
      parts.fields.push_back({o.str("id"), o.str("name"), o.str("declaringType"), o.str("type")});
      o.finish();
    }
    for (const auto& c : array(root, "calls")) {
      Obj o(c, "call");
      parts.calls.push_back({o.str("caller"), o.str("callee"), o.integer("site")});
      o.finish();
    }
    for (const auto& e : array(root, "flows")) {
      Obj o(e, "flow");
      DataFlowEdge edge;
      edge.id = o.str("id");
      edge.kind = flow_kind_from_string(o.str("kind"));
      edge.from = FlowEndpoint::decode(o.str("from"));
      edge.to = FlowEndpoint::decode(o.str("to"));
      edge.type = o.str("type");
      o.finish();
      parts.flows.push_back(std::move(edge));
    }
    root.finish();
  }
  return ProgramModel::build(std::move(parts));
}

} // namespace flowmap::pm

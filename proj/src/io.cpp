#include "flowmap/io.h"

#include "flowmap/error.h"

#include <cstdio>

namespace flowmap::io {

using mapping::MappingEntry;
using mapping::MappingState;

std::string canonical(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(std::string_view text, const std::string& file) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw SchemaError((file.empty() ? std::string("<input>") : file) + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string stable_id(std::string_view prefix, const Json& body) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical(body))));
  return std::string(prefix) + hex;
}

namespace {

// Typed access with schema errors instead of nlohmann's type errors.
const Json& member(const Json& obj, const char* key, const char* what) {
  if (!obj.is_object()) throw SchemaError(std::string(what) + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string(what) + " lacks '" + key + "'");
  return *it;
}

std::string str(const Json& obj, const char* key, const char* what) {
  const Json& v = member(obj, key, what);
  if (!v.is_string()) throw SchemaError(std::string(what) + "." + key + " must be a string");
  return v.get<std::string>();
}

double num(const Json& obj, const char* key, const char* what) {
  const Json& v = member(obj, key, what);
  if (!v.is_number()) throw SchemaError(std::string(what) + "." + key + " must be a number");
  return v.get<double>();
}

int integer(const Json& obj, const char* key, const char* what) {
  const Json& v = member(obj, key, what);
  if (!v.is_number_integer()) throw SchemaError(std::string(what) + "." + key + " must be an integer");
  return v.get<int>();
}

std::vector<std::string> strings(const Json& obj, const char* key, const char* what) {
  const Json& v = member(obj, key, what);
  if (!v.is_array()) throw SchemaError(std::string(what) + "." + key + " must be an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw SchemaError(std::string(what) + "." + key + " must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

void onlyKeys(const Json& obj, std::initializer_list<const char*> keys, const char* what) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw SchemaError(std::string(what) + " has unknown key '" + k + "'");
  }
}

template <class E>
E convert(const char* what, E (*fn)(std::string_view), const std::string& s) {
  try {
    return fn(s);
  } catch (const Error& e) {
    throw SchemaError(std::string(what) + ": " + e.what());
  }
}

} // namespace

Json to_json(const MappingEntry& e) {
  return {{"id", e.id},
          {"dfd", e.dfdElement},
          {"pm", e.pmElement},
          {"kind", to_string(e.kind)},
          {"state", to_string(e.state)},
          {"quality", e.quality},
          {"score", e.score},
          {"derivedFrom", e.derivedFrom}};
}

Json to_json(const MappingState& state) {
  Json entries = Json::array();
  for (const auto& e : state.entries()) entries.push_back(to_json(e));
  return {{"iteration", state.iteration()},
          {"nextId", state.nextId()},
          {"weights", {{"accepted", state.weights().accepted}, {"suggested", state.weights().suggested}}},
          {"entries", std::move(entries)}};
}

MappingState mapping_state_from_json(const Json& j, std::vector<dfd::SecDfd> models,
                                     std::shared_ptr<const pm::ProgramModel> pm) {
  MappingState state(std::move(models), std::move(pm));
  onlyKeys(j, {"iteration", "nextId", "weights", "entries"}, "mapping state");
  const Json& w = member(j, "weights", "mapping state");
  onlyKeys(w, {"accepted", "suggested"}, "weights");
  mapping::ScoreWeights weights{num(w, "accepted", "weights"), num(w, "suggested", "weights")};
  std::vector<MappingEntry> entries;
  const Json& es = member(j, "entries", "mapping state");
  if (!es.is_array()) throw SchemaError("mapping state.entries must be an array");
  for (const auto& je : es) {
    onlyKeys(je, {"id", "dfd", "pm", "kind", "state", "quality", "score", "derivedFrom"}, "entry");
    MappingEntry e;
    e.id = str(je, "id", "entry");
    e.dfdElement = str(je, "dfd", "entry");
    e.pmElement = str(je, "pm", "entry");
    e.kind = convert("entry.kind", &mapping::entry_kind_from_string, str(je, "kind", "entry"));
    e.state = convert("entry.state", &mapping::entry_state_from_string, str(je, "state", "entry"));
    e.quality = num(je, "quality", "entry");
    e.score = num(je, "score", "entry");
    e.derivedFrom = strings(je, "derivedFrom", "entry");
    try {
      mapping::dfd_element_kind(state, e.dfdElement);
    } catch (const NotFoundError& err) {
      throw SchemaError("entry '" + e.id + "': " + err.what());
    }
    const auto& p = state.pm();
    if (!p.type(e.pmElement) && !p.methodName(e.pmElement) && !p.signature(e.pmElement) && !p.definition(e.pmElement))
      throw SchemaError("entry '" + e.id + "' refers to unknown PM element '" + e.pmElement + "'");
    entries.push_back(std::move(e));
  }
  state.restore(std::move(entries), integer(j, "iteration", "mapping state"), integer(j, "nextId", "mapping state"),
                weights);
  return state;
}

mapping::GroundTruth parse_ground_truth(std::string_view text, const std::string& file) {
  Json j = parse_json(text, file);
  if (!j.is_array()) throw SchemaError(file + ": ground truth must be an array");
  mapping::GroundTruth gt;
  for (const auto& p : j) {
    onlyKeys(p, {"dfd", "pm"}, "ground truth pair");
    gt.push_back({str(p, "dfd", "ground truth pair"), str(p, "pm", "ground truth pair")});
  }
  return gt;
}

std::string print_ground_truth(const mapping::GroundTruth& gt) {
  Json j = Json::array();
  for (const auto& p : gt) j.push_back({{"dfd", p.dfd}, {"pm", p.pm}});
  return canonical(j);
}

std::vector<std::string> apply_ground_truth(MappingState& state, const mapping::GroundTruth& gt) {
  std::vector<std::string> ids;
  for (const auto& p : gt) ids.push_back(mapping::map_manually(state, p.dfd, p.pm));
  return ids;
}

namespace {

std::string pmLabel(const pm::ProgramModel& pm, const std::string& id) {
  if (const auto* t = pm.type(id)) return t->qualifiedName;
  if (const auto* n = pm.methodName(id)) return n->name;
  if (const auto* s = pm.signature(id)) {
    std::string out = pm.methodName(s->name)->name + "(";
    for (std::size_t i = 0; i < s->params.size(); ++i) out += (i ? "," : "") + pm.typeName(s->params[i]);
    return out + "):" + pm.typeName(s->returnType);
  }
  if (pm.definition(id)) return pm.qualifiedSignature(id);
  return id;
}

Json location(const pm::ProgramModel& pm, const std::string& def) {
  const auto* d = pm.definition(def);
  if (!d) return nullptr;
  return {{"definition", def}, {"file", d->loc.file}, {"line", d->loc.line}, {"endLine", d->loc.endLine}};
}

} // namespace

Json suggestions_view(const MappingState& state, const std::vector<MappingEntry>& suggestions) {
  Json groups = Json::array();
  const MappingEntry* prev = nullptr;
  for (const auto& e : suggestions) {
    if (e.state == mapping::EntryState::Rejected) continue;
    if (!prev || prev->dfdElement != e.dfdElement) groups.push_back({{"dfdElement", e.dfdElement}, {"entries", Json::array()}});
    prev = &e;
    Json row = to_json(e);
    row["label"] = pmLabel(state.pm(), e.pmElement);
    Json loc = location(state.pm(), e.pmElement);
    if (!loc.is_null()) row["location"] = std::move(loc);
    groups.back()["entries"].push_back(std::move(row));
  }
  return {{"iteration", state.iteration()}, {"groups", std::move(groups)}};
}

namespace {

Json iflowJson(const contracts::IFlow& f) { return {{"sources", f.sources}, {"target", f.target}}; }

template <class T>
void putOpt(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

} // namespace

Json to_json(const contracts::Violation& v, const pm::ProgramModel& pm) {
  Json j = {{"kind", to_string(v.kind)}, {"process", v.process}, {"definitions", v.definitions}};
  putOpt(j, "contract", v.contract);
  putOpt(j, "outAsset", v.outAsset);
  if (v.iflow) j["iflow"] = iflowJson(*v.iflow);
  j["id"] = stable_id("v", j);
  Json locs = Json::array();
  for (const auto& d : v.definitions) {
    Json l = location(pm, d);
    if (!l.is_null()) locs.push_back(std::move(l));
  }
  j["locations"] = std::move(locs);
  return j;
}

Json to_json(const contracts::Convergence& c) {
  Json calls = Json::array();
  for (const auto& [caller, callee] : c.cryptoCalls) calls.push_back({{"caller", caller}, {"callee", callee}});
  Json j = {{"process", c.process}, {"contract", c.contract}, {"cryptoCalls", std::move(calls)}};
  putOpt(j, "outAsset", c.outAsset);
  if (c.iflow) j["iflow"] = iflowJson(*c.iflow);
  return j;
}

Json to_json(const contracts::CheckResult& r, const pm::ProgramModel& pm) {
  Json vs = Json::array(), cs = Json::array();
  for (const auto& v : r.violations) vs.push_back(to_json(v, pm));
  for (const auto& c : r.convergences) cs.push_back(to_json(c));
  return {{"violations", std::move(vs)}, {"convergences", std::move(cs)}};
}

Json to_json(const mapping::ComplianceReport& r) {
  Json ds = Json::array();
  for (const auto& d : r.divergences) {
    Json j = {{"kind", to_string(d.kind)}, {"element", d.element}, {"edges", d.edges}};
    putOpt(j, "other", d.other);
    putOpt(j, "target", d.target);
    j["id"] = stable_id("d", j);
    ds.push_back(std::move(j));
  }
  return {{"convergences", r.convergences}, {"absences", r.absences}, {"divergences", std::move(ds)}};
}

Json design_leaks_json(const std::string& model, const std::vector<dfd::DesignLeak>& leaks) {
  Json out = Json::array();
  for (const auto& l : leaks) {
    Json j = {{"kind", "DESIGN_LEAK"}, {"model", model}, {"asset", l.asset}, {"zone", l.zone}, {"element", l.element}};
    j["id"] = stable_id("l", j);
    out.push_back(std::move(j));
  }
  return out;
}

Json to_json(const taint::TaintAlarm& a) {
  Json j = {{"source", a.source}, {"sink", a.sink}, {"witness", a.witness}};
  j["asset"] = a.asset ? Json(*a.asset) : Json(nullptr);
  j["id"] = stable_id("a", {{"asset", j["asset"]}, {"source", a.source}, {"sink", a.sink}});
  return j;
}

Json to_json(const taint::TaintResult& r) {
  Json alarms = Json::array();
  Json runs = Json::array();
  for (const auto& run : r.runs) {
    for (const auto& a : run.alarms) alarms.push_back(to_json(a));
    runs.push_back({{"asset", run.asset ? Json(*run.asset) : Json(nullptr)},
                    {"alarms", run.alarms.size()},
                    {"truncated", run.truncated}});
  }
  return {{"mode", to_string(r.mode)}, {"alarms", std::move(alarms)}, {"runs", std::move(runs)},
          {"unresolved", r.unresolved}};
}

Json to_json(const taint::ReductionReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j = {{"mode", to_string(row.mode)}, {"perModel", row.perModel}, {"average", row.average}};
    j["change"] = row.mode == taint::Mode::Plain ? Json(nullptr) : Json(taint::format_delta(row.deltaPercent));
    j["deltaPercent"] = row.deltaPercent ? Json(*row.deltaPercent) : Json(nullptr);
    rows.push_back(std::move(j));
  }
  return {{"rows", std::move(rows)}, {"table", r.table()}};
}

namespace {

Json optRatio(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

} // namespace

Json to_json(const mapping::Evaluation& e) {
  return {{"tp", e.tp}, {"fp", e.fp}, {"fn", e.fn}, {"precision", optRatio(e.precision)}, {"recall", optRatio(e.recall)}};
}

Json to_json(const contracts::InjectionReport& r) {
  auto score = [](const contracts::InjectionScore& s) {
    return Json{{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"precision", optRatio(s.precision)},
                {"recall", optRatio(s.recall)}};
  };
  Json outcomes = Json::array();
  for (const auto& o : r.outcomes) {
    Json unexpected = Json::array();
    for (const auto& v : o.unexpected) {
      Json j = {{"kind", to_string(v.kind)}, {"process", v.process}};
      putOpt(j, "contract", v.contract);
      putOpt(j, "outAsset", v.outAsset);
      unexpected.push_back(std::move(j));
    }
    outcomes.push_back({{"process", o.process},
                        {"contract",
                         {{"kind", to_string(o.contract.kind)},
                          {"in", o.contract.inAssets},
                          {"out", o.contract.outAssets}}},
                        {"detected", o.detected},
                        {"unexpected", std::move(unexpected)},
                        {"lostConvergences", o.lost.size()}});
  }
  return {{"outcomes", std::move(outcomes)}, {"crypto", score(r.crypto)}, {"processing", score(r.processing)}};
}

contracts::CryptoList crypto_list_from_json(const Json& j) {
  const Json* arr = &j;
  if (j.is_object()) arr = &member(j, "entries", "crypto list");
  if (!arr->is_array()) throw SchemaError("crypto list entries must be an array");
  std::string text;
  for (const auto& e : *arr) {
    onlyKeys(e, {"capability", "pattern"}, "crypto entry");
    text += str(e, "capability", "crypto entry") + "\t" + str(e, "pattern", "crypto entry") + "\n";
  }
  return contracts::CryptoList::parse(text, "crypto-list");
}

Json to_json(const contracts::CryptoList& list) {
  Json out = Json::array();
  for (const auto& e : list.entries()) out.push_back({{"capability", to_string(e.capability)}, {"pattern", e.pattern.text()}});
  return out;
}

} // namespace flowmap::io

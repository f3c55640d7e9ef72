#include "flowmap/mapping.h"

#include "flowmap/error.h"
#include "flowmap/names.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>

namespace flowmap::mapping {

std::string_view to_string(EntryKind kind) {
  switch (kind) {
  case EntryKind::AssetType: return "ASSET_TYPE";
  case EntryKind::StoreType: return "STORE_TYPE";
  case EntryKind::StoreMethod: return "STORE_METHOD";
  case EntryKind::StoreDefinition: return "STORE_DEFINITION";
  case EntryKind::ProcessName: return "PROCESS_NAME";
  case EntryKind::ProcessSignature: return "PROCESS_SIGNATURE";
  case EntryKind::ProcessDefinition: return "PROCESS_DEFINITION";
  case EntryKind::EntityDefinition: return "ENTITY_DEFINITION";
  }
  return "?";
}

std::string_view to_string(EntryState state) {
  switch (state) {
  case EntryState::Suggested: return "SUGGESTED";
  case EntryState::Accepted: return "ACCEPTED";
  case EntryState::Rejected: return "REJECTED";
  case EntryState::Tolerated: return "TOLERATED";
  case EntryState::UserDefined: return "USER_DEFINED";
  }
  return "?";
}

EntryKind entry_kind_from_string(std::string_view s) {
  for (auto k : {EntryKind::AssetType, EntryKind::StoreType, EntryKind::StoreMethod, EntryKind::StoreDefinition,
                 EntryKind::ProcessName, EntryKind::ProcessSignature, EntryKind::ProcessDefinition,
                 EntryKind::EntityDefinition})
    if (to_string(k) == s) return k;
  throw SchemaError("unknown mapping kind '" + std::string(s) + "'");
}

EntryState entry_state_from_string(std::string_view s) {
  for (auto k : {EntryState::Suggested, EntryState::Accepted, EntryState::Rejected, EntryState::Tolerated,
                 EntryState::UserDefined})
    if (to_string(k) == s) return k;
  throw SchemaError("unknown mapping state '" + std::string(s) + "'");
}

Decision decision_from_string(std::string_view s) {
  if (s == "accept" || s == "ACCEPT") return Decision::Accept;
  if (s == "reject" || s == "REJECT") return Decision::Reject;
  if (s == "tolerate" || s == "TOLERATE") return Decision::Tolerate;
  throw InvalidArgument("unknown decision '" + std::string(s) + "'", "expected accept, reject or tolerate");
}

bool is_confirmed(EntryState s) { return s == EntryState::Accepted || s == EntryState::UserDefined; }

std::string_view to_string(Divergence::Kind kind) {
  return kind == Divergence::Kind::UnmappedMember ? "UNMAPPED_MEMBER" : "UNSPECIFIED_FLOW";
}

DfdRef DfdRef::parse(std::string_view ref) {
  auto slash = ref.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == ref.size())
    throw InvalidArgument("malformed DFD reference '" + std::string(ref) + "'", "expected <model>/<element>");
  return {std::string(ref.substr(0, slash)), std::string(ref.substr(slash + 1))};
}

// ---------------------------------------------------------------------------
// MappingState

MappingState::MappingState(std::vector<dfd::SecDfd> models, std::shared_ptr<const pm::ProgramModel> pm)
    : models_(std::move(models)), pm_(std::move(pm)) {
  if (!pm_) throw InvalidArgument("mapping state needs a program model");
  std::set<std::string> names;
  for (const auto& m : models_)
    if (!names.insert(m.name).second) throw InvalidArgument("duplicate model name '" + m.name + "'");
}

const dfd::SecDfd& MappingState::model(std::string_view name) const {
  for (const auto& m : models_)
    if (m.name == name) return m;
  throw NotFoundError("unknown model '" + std::string(name) + "'");
}

void MappingState::replaceModel(dfd::SecDfd model) {
  for (auto& m : models_)
    if (m.name == model.name) {
      m = std::move(model);
      return;
    }
  throw NotFoundError("unknown model '" + model.name + "'");
}

const MappingEntry* MappingState::find(std::string_view id) const {
  for (const auto& e : entries_)
    if (e.id == id) return &e;
  return nullptr;
}

const MappingEntry* MappingState::findPair(std::string_view dfd, std::string_view pmElement) const {
  for (const auto& e : entries_)
    if (e.dfdElement == dfd && e.pmElement == pmElement) return &e;
  return nullptr;
}

std::vector<const MappingEntry*> MappingState::live(std::string_view dfd, EntryKind kind) const {
  std::vector<const MappingEntry*> out;
  for (const auto& e : entries_)
    if (e.dfdElement == dfd && e.kind == kind && e.state != EntryState::Rejected) out.push_back(&e);
  return out;
}

std::vector<const MappingEntry*> MappingState::confirmed(std::string_view dfd, EntryKind kind) const {
  std::vector<const MappingEntry*> out;
  for (const auto& e : entries_)
    if (e.dfdElement == dfd && e.kind == kind && is_confirmed(e.state)) out.push_back(&e);
  return out;
}

void MappingState::setWeights(ScoreWeights w) {
  if (w.accepted < 0 || w.suggested < 0) throw InvalidArgument("score weights must be non-negative");
  weights_ = w;
}

MappingEntry& MappingState::add(std::string dfd, std::string pmElement, EntryKind kind, EntryState state,
                                double quality, std::vector<std::string> derivedFrom) {
  if (findPair(dfd, pmElement)) throw InvalidArgument("pair already mapped: " + dfd + " -> " + pmElement);
  std::sort(derivedFrom.begin(), derivedFrom.end());
  derivedFrom.erase(std::unique(derivedFrom.begin(), derivedFrom.end()), derivedFrom.end());
  MappingEntry e;
  e.id = "m" + std::to_string(nextId_++);
  e.dfdElement = std::move(dfd);
  e.pmElement = std::move(pmElement);
  e.kind = kind;
  e.state = state;
  e.quality = quality;
  e.derivedFrom = std::move(derivedFrom);
  entries_.push_back(std::move(e));
  return entries_.back();
}

MappingEntry& MappingState::get(std::string_view id) {
  for (auto& e : entries_)
    if (e.id == id) return e;
  throw NotFoundError("unknown mapping entry '" + std::string(id) + "'");
}

void MappingState::erase(const std::set<std::string>& ids) {
  std::erase_if(entries_, [&](const MappingEntry& e) { return ids.count(e.id) > 0; });
  for (auto& e : entries_) std::erase_if(e.derivedFrom, [&](const std::string& d) { return ids.count(d) > 0; });
}

void MappingState::unlink(const std::string& id) {
  for (auto& e : entries_) std::erase(e.derivedFrom, id);
}

void MappingState::restore(std::vector<MappingEntry> entries, int iteration, int nextId, ScoreWeights weights) {
  if (iteration < 0) throw SchemaError("iteration must be non-negative");
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : entries) {
    if (!ids.insert(e.id).second) throw SchemaError("duplicate mapping entry id '" + e.id + "'");
    if (!pairs.insert({e.dfdElement, e.pmElement}).second)
      throw SchemaError("duplicate mapping pair " + e.dfdElement + " -> " + e.pmElement);
  }
  for (const auto& e : entries)
    for (const auto& d : e.derivedFrom)
      if (!ids.count(d)) throw SchemaError("entry '" + e.id + "' derives from unknown entry '" + d + "'");
  entries_ = std::move(entries);
  iteration_ = iteration;
  nextId_ = nextId;
  setWeights(weights);
}

bool MappingState::operator==(const MappingState& o) const {
  return models_ == o.models_ && ((pm_ && o.pm_ && *pm_ == *o.pm_) || pm_ == o.pm_) && entries_ == o.entries_ &&
         iteration_ == o.iteration_ && nextId_ == o.nextId_ && weights_ == o.weights_;
}

DfdElementKind dfd_element_kind(const MappingState& state, std::string_view ref) {
  DfdRef r = DfdRef::parse(ref);
  const dfd::SecDfd& m = state.model(r.model);
  if (const dfd::DfdNode* n = m.findNode(r.element)) {
    switch (n->kind) {
    case dfd::NodeKind::Process: return DfdElementKind::Process;
    case dfd::NodeKind::ExternalEntity: return DfdElementKind::ExternalEntity;
    case dfd::NodeKind::DataStore: return DfdElementKind::DataStore;
    }
  }
  if (m.findAsset(r.element)) return DfdElementKind::Asset;
  throw NotFoundError("unknown DFD element '" + std::string(ref) + "'");
}

// ---------------------------------------------------------------------------
// Discovery

namespace {

bool tryAdd(MappingState& s, std::vector<std::string>& created, const std::string& dfd, const std::string& pmId,
            EntryKind kind, double quality, std::vector<std::string> derivedFrom = {}) {
  if (s.findPair(dfd, pmId)) return false;
  created.push_back(s.add(dfd, pmId, kind, EntryState::Suggested, quality, std::move(derivedFrom)).id);
  return true;
}

std::optional<double> bestOf(std::optional<double> a, std::optional<double> b) {
  if (!a) return b;
  if (!b) return a;
  return std::max(*a, *b);
}

} // namespace

std::vector<std::string> match_names(MappingState& state) {
  std::vector<std::string> created;
  const pm::ProgramModel& pm = state.pm();
  for (const auto& m : state.models()) {
    for (const auto& n : m.nodes) {
      std::string ref = m.name + "/" + n.id;
      if (n.kind == dfd::NodeKind::Process) {
        for (const auto& name : pm.methodNames())
          if (auto q = names_correspond(n.id, name.name)) tryAdd(state, created, ref, name.id, EntryKind::ProcessName, *q);
      } else if (n.kind == dfd::NodeKind::DataStore) {
        for (const auto& t : pm.types())
          if (auto q = names_correspond(n.id, t.simpleName())) tryAdd(state, created, ref, t.id, EntryKind::StoreType, *q);
        for (const auto& name : pm.methodNames())
          if (auto q = names_correspond(n.id, name.name)) tryAdd(state, created, ref, name.id, EntryKind::StoreMethod, *q);
      }
    }
    for (const auto& a : m.assets) {
      std::string ref = m.name + "/" + a.name;
      for (const auto& t : pm.types()) {
        auto q = bestOf(names_correspond(a.valueType, t.simpleName()), names_correspond(a.name, t.simpleName()));
        if (q) tryAdd(state, created, ref, t.id, EntryKind::AssetType, *q);
      }
    }
  }
  return created;
}

std::vector<std::string> extend_to_signatures(MappingState& state) {
  std::vector<std::string> created;
  const pm::ProgramModel& pm = state.pm();
  for (const auto& m : state.models()) {
    // type id -> ASSET_TYPE entry ids, per asset
    std::map<std::string, std::map<std::string, std::vector<std::string>>> assetTypes;
    for (const auto& a : m.assets)
      for (const MappingEntry* e : state.live(m.name + "/" + a.name, EntryKind::AssetType))
        assetTypes[a.name][e->pmElement].push_back(e->id);

    for (const auto& n : m.nodes) {
      if (n.kind != dfd::NodeKind::Process) continue;
      std::string ref = m.name + "/" + n.id;
      auto ins = m.assetsInto(n.id);
      auto outs = m.assetsOutOf(n.id);
      // Copy: adding entries below may reallocate the entry vector.
      std::vector<MappingEntry> nameEntries;
      for (const MappingEntry* e : state.live(ref, EntryKind::ProcessName)) nameEntries.push_back(*e);
      for (const auto& ne : nameEntries) {
        for (const pm::MethodSignature* sig : pm.signaturesNamed(ne.pmElement)) {
          std::vector<std::string> used;
          for (const auto& a : ins)
            for (const auto& p : sig->params)
              if (auto it = assetTypes[a].find(p); it != assetTypes[a].end())
                used.insert(used.end(), it->second.begin(), it->second.end());
          for (const auto& a : outs)
            if (auto it = assetTypes[a].find(sig->returnType); it != assetTypes[a].end())
              used.insert(used.end(), it->second.begin(), it->second.end());
          if (used.empty()) continue;
          used.push_back(ne.id);
          tryAdd(state, created, ref, sig->id, EntryKind::ProcessSignature, ne.quality, std::move(used));
        }
      }
    }
  }
  return created;
}

namespace {

struct Candidate {
  std::string def;
  std::string entry;
  double quality;
};

std::vector<Candidate> candidateDefs(const MappingState& state, const std::string& ref) {
  std::vector<Candidate> out;
  for (const MappingEntry* e : state.live(ref, EntryKind::ProcessSignature))
    for (const pm::MethodDefinition* d : state.pm().definitionsOf(e->pmElement)) out.push_back({d->id, e->id, e->quality});
  for (const MappingEntry* e : state.confirmed(ref, EntryKind::ProcessDefinition))
    out.push_back({e->pmElement, e->id, e->quality});
  return out;
}

// Definitions owning an endpoint reachable along data-flow edges from any
// endpoint of `def`.
std::set<std::string> forwardOwners(const pm::ProgramModel& pm, const std::string& def) {
  std::set<std::string> owners;
  std::set<pm::FlowEndpoint> seen;
  std::deque<pm::FlowEndpoint> work;
  for (const auto& e : pm.endpointsOf(def))
    if (seen.insert(e).second) work.push_back(e);
  while (!work.empty()) {
    pm::FlowEndpoint cur = work.front();
    work.pop_front();
    if (auto o = cur.owner()) owners.insert(*o);
    for (const pm::DataFlowEdge* e : pm.edgesFrom(cur))
      if (seen.insert(e->to).second) work.push_back(e->to);
  }
  return owners;
}

} // namespace

std::vector<std::string> discover_definitions(MappingState& state) {
  std::vector<std::string> created;
  const pm::ProgramModel& pm = state.pm();
  auto link = [&](const std::string& ref, const Candidate& own, const Candidate& other) {
    tryAdd(state, created, ref, own.def, EntryKind::ProcessDefinition, own.quality, {own.entry, other.entry});
  };

  for (const auto& m : state.models()) {
    std::map<std::string, std::vector<Candidate>> cands;
    for (const auto& n : m.nodes)
      if (n.kind == dfd::NodeKind::Process) cands[n.id] = candidateDefs(state, m.name + "/" + n.id);

    // Coupling inside one process: definitions calling each other.
    for (const auto& n : m.nodes) {
      if (n.kind != dfd::NodeKind::Process) continue;
      std::string ref = m.name + "/" + n.id;
      const auto& cs = cands[n.id];
      for (const auto& c1 : cs)
        for (const auto& c2 : cs) {
          if (c1.def == c2.def) continue;
          auto calls = pm.callsFrom(c1.def);
          bool direct = std::any_of(calls.begin(), calls.end(), [&](const pm::CallEdge* c) { return c->callee == c2.def; });
          if (!direct) continue;
          link(ref, c1, c2);
          link(ref, c2, c1);
        }
    }

    // Data paths implementing a DFD flow between two processes.
    std::map<std::string, std::set<std::string>> reach;
    for (const auto& f : m.flows) {
      const dfd::DfdNode* src = m.findNode(f.source);
      const dfd::DfdNode* dst = m.findNode(f.target);
      if (src->kind != dfd::NodeKind::Process || dst->kind != dfd::NodeKind::Process || src == dst) continue;
      for (const auto& c1 : cands[f.source]) {
        auto it = reach.find(c1.def);
        if (it == reach.end()) it = reach.emplace(c1.def, forwardOwners(pm, c1.def)).first;
        for (const auto& c2 : cands[f.target]) {
          if (c1.def == c2.def || !it->second.count(c2.def)) continue;
          link(m.name + "/" + f.source, c1, c2);
          link(m.name + "/" + f.target, c2, c1);
        }
      }
    }
  }
  return created;
}

// ---------------------------------------------------------------------------
// Scores and decisions

void rescore(MappingState& state) {
  std::map<std::string, const MappingEntry*> byId;
  for (const auto& e : state.entries()) byId[e.id] = &e;
  std::map<std::string, double> scores;
  const ScoreWeights& w = state.weights();
  for (const auto& e : state.entries()) {
    std::set<std::string> closure;
    std::vector<std::string> stack(e.derivedFrom.begin(), e.derivedFrom.end());
    while (!stack.empty()) {
      std::string id = stack.back();
      stack.pop_back();
      auto it = byId.find(id);
      if (it == byId.end() || !closure.insert(id).second) continue;
      stack.insert(stack.end(), it->second->derivedFrom.begin(), it->second->derivedFrom.end());
    }
    double s = e.state == EntryState::UserDefined ? 1.0 : e.quality;
    for (const auto& id : closure) {
      EntryState st = byId[id]->state;
      if (is_confirmed(st)) s += w.accepted;
      else if (st != EntryState::Rejected) s += w.suggested;
    }
    scores[e.id] = s;
  }
  for (const auto& [id, s] : scores) state.get(id).score = s;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

constexpr double kScoreEps = 1e-9;

} // namespace

std::vector<MappingEntry> score_and_filter(MappingState& state) {
  rescore(state);
  std::map<std::string, std::vector<const MappingEntry*>> byElement;
  for (const auto& e : state.entries())
    if (e.state != EntryState::Rejected) byElement[e.dfdElement].push_back(&e);
  std::vector<MappingEntry> out;
  for (const auto& [elem, es] : byElement) {
    std::vector<double> scores;
    for (const auto* e : es) scores.push_back(e->score);
    double med = median(scores);
    for (const auto* e : es)
      if (is_confirmed(e->state) || e->score >= med - kScoreEps) out.push_back(*e);
  }
  std::sort(out.begin(), out.end(), [](const MappingEntry& a, const MappingEntry& b) {
    if (a.dfdElement != b.dfdElement) return a.dfdElement < b.dfdElement;
    if (std::abs(a.score - b.score) > kScoreEps) return a.score > b.score;
    return a.pmElement < b.pmElement;
  });
  return out;
}

std::vector<MappingEntry> run_iteration(MappingState& state) {
  match_names(state);
  extend_to_signatures(state);
  discover_definitions(state);
  state.bumpIteration();
  return score_and_filter(state);
}

void decide(MappingState& state, const std::string& entryId, Decision decision) {
  const MappingEntry* found = state.find(entryId);
  if (!found) throw NotFoundError("unknown mapping entry '" + entryId + "'");
  if (found->state == EntryState::Rejected) throw PreconditionError("entry '" + entryId + "' was rejected");
  MappingEntry& e = state.get(entryId);
  switch (decision) {
  case Decision::Accept:
    if (e.state != EntryState::UserDefined) e.state = EntryState::Accepted;
    break;
  case Decision::Tolerate:
    if (is_confirmed(e.state)) throw PreconditionError("entry '" + entryId + "' is already confirmed");
    e.state = EntryState::Tolerated;
    break;
  case Decision::Reject: {
    e.state = EntryState::Rejected;
    // Drop unconfirmed entries derived from the rejected one. Confirmed
    // entries are pinned and shield what was derived from them.
    std::map<std::string, const MappingEntry*> byId;
    for (const auto& x : state.entries()) byId[x.id] = &x;
    std::map<std::string, bool> memo;
    std::function<bool(const std::string&)> dependsOnRejected = [&](const std::string& id) -> bool {
      if (id == entryId) return true;
      auto m = memo.find(id);
      if (m != memo.end()) return m->second;
      memo[id] = false;
      const MappingEntry* x = byId.at(id);
      bool r = false;
      if (!is_confirmed(x->state))
        for (const auto& d : x->derivedFrom)
          if (byId.count(d) && dependsOnRejected(d)) r = true;
      return memo[id] = r;
    };
    std::set<std::string> doomed;
    for (const auto& x : state.entries())
      if (x.id != entryId && !is_confirmed(x.state) && x.state != EntryState::Rejected && dependsOnRejected(x.id))
        doomed.insert(x.id);
    state.erase(doomed);
    state.get(entryId).derivedFrom.clear();
    state.unlink(entryId);
    break;
  }
  }
  rescore(state);
}

std::string map_manually(MappingState& state, const std::string& dfdRef, const std::string& pmElement) {
  DfdElementKind dk = dfd_element_kind(state, dfdRef);
  const pm::ProgramModel& pm = state.pm();
  enum class PmKind { Type, Name, Signature, Definition, Other } pk = PmKind::Other;
  if (pm.type(pmElement)) pk = PmKind::Type;
  else if (pm.methodName(pmElement)) pk = PmKind::Name;
  else if (pm.signature(pmElement)) pk = PmKind::Signature;
  else if (pm.definition(pmElement)) pk = PmKind::Definition;
  else if (!pm.field(pmElement) && !pm.edge(pmElement)) throw NotFoundError("unknown PM element '" + pmElement + "'");

  std::optional<EntryKind> kind;
  switch (dk) {
  case DfdElementKind::Asset:
    if (pk == PmKind::Type) kind = EntryKind::AssetType;
    break;
  case DfdElementKind::DataStore:
    if (pk == PmKind::Type) kind = EntryKind::StoreType;
    if (pk == PmKind::Name) kind = EntryKind::StoreMethod;
    if (pk == PmKind::Definition) kind = EntryKind::StoreDefinition;
    break;
  case DfdElementKind::Process:
    if (pk == PmKind::Name) kind = EntryKind::ProcessName;
    if (pk == PmKind::Signature) kind = EntryKind::ProcessSignature;
    if (pk == PmKind::Definition) kind = EntryKind::ProcessDefinition;
    break;
  case DfdElementKind::ExternalEntity:
    if (pk == PmKind::Definition) kind = EntryKind::EntityDefinition;
    break;
  }
  if (!kind)
    throw InvalidArgument("illegal correspondence " + dfdRef + " -> " + pmElement,
                          "assets map to types; stores to types, method names or definitions; processes to method "
                          "names, signatures or definitions; external entities to definitions");
  std::string id;
  if (const MappingEntry* existing = state.findPair(dfdRef, pmElement)) {
    MappingEntry& e = state.get(existing->id);
    e.state = EntryState::UserDefined;
    e.quality = 1.0;
    id = e.id;
  } else {
    id = state.add(dfdRef, pmElement, *kind, EntryState::UserDefined, 1.0, {}).id;
  }
  rescore(state);
  return id;
}

// ---------------------------------------------------------------------------
// Compliance report

ComplianceReport compliance_report(const MappingState& state) {
  ComplianceReport r;
  for (const auto& e : state.entries())
    if (is_confirmed(e.state)) r.convergences.push_back(e.id);
  std::sort(r.convergences.begin(), r.convergences.end());

  auto hasConfirmed = [&](const std::string& ref) {
    return std::any_of(state.entries().begin(), state.entries().end(),
                       [&](const MappingEntry& e) { return e.dfdElement == ref && is_confirmed(e.state); });
  };
  const pm::ProgramModel& pm = state.pm();
  std::map<std::tuple<Divergence::Kind, std::string, std::optional<std::string>, std::optional<std::string>>,
           std::set<std::string>>
      divs;

  for (const auto& m : state.models()) {
    for (const auto& n : m.nodes)
      if (n.kind != dfd::NodeKind::ExternalEntity && !hasConfirmed(m.name + "/" + n.id))
        r.absences.push_back(m.name + "/" + n.id);
    for (const auto& a : m.assets)
      if (!hasConfirmed(m.name + "/" + a.name)) r.absences.push_back(m.name + "/" + a.name);

    // Definitions confirmed for each node of this model.
    std::map<std::string, std::set<std::string>> defsOf, ownersOf;
    for (const auto& e : state.entries()) {
      if (!is_confirmed(e.state)) continue;
      if (e.kind != EntryKind::ProcessDefinition && e.kind != EntryKind::StoreDefinition &&
          e.kind != EntryKind::EntityDefinition)
        continue;
      DfdRef ref = DfdRef::parse(e.dfdElement);
      if (ref.model != m.name) continue;
      defsOf[ref.element].insert(e.pmElement);
      ownersOf[e.pmElement].insert(ref.element);
    }
    for (const auto& n : m.nodes) {
      if (n.kind != dfd::NodeKind::Process) continue;
      const auto& own = defsOf[n.id];
      for (const auto& e : pm.flows()) {
        if (e.kind == pm::FlowKind::Intra) continue;
        auto from = e.from.owner(), to = e.to.owner();
        if (!from || !to || !own.count(*from) || own.count(*to)) continue;
        auto it = ownersOf.find(*to);
        if (it == ownersOf.end()) {
          divs[{Divergence::Kind::UnmappedMember, m.name + "/" + n.id, std::nullopt, *to}].insert(e.id);
          continue;
        }
        for (const auto& q : it->second) {
          if (q == n.id) continue;
          bool specified = std::any_of(m.flows.begin(), m.flows.end(),
                                       [&](const dfd::DfdFlow& f) { return f.source == n.id && f.target == q; });
          if (!specified)
            divs[{Divergence::Kind::UnspecifiedFlow, m.name + "/" + n.id, m.name + "/" + q, std::nullopt}].insert(e.id);
        }
      }
    }
  }
  std::sort(r.absences.begin(), r.absences.end());
  for (const auto& [key, edges] : divs)
    r.divergences.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                             std::vector<std::string>(edges.begin(), edges.end())});
  return r;
}

Evaluation evaluate_against_ground_truth(const std::vector<MappingEntry>& suggestions, const GroundTruth& gt) {
  std::set<std::pair<std::string, std::string>> s, g;
  for (const auto& e : suggestions)
    if (e.state != EntryState::Rejected) s.insert({e.dfdElement, e.pmElement});
  for (const auto& p : gt) g.insert({p.dfd, p.pm});
  Evaluation ev;
  for (const auto& p : s) (g.count(p) ? ev.tp : ev.fp)++;
  for (const auto& p : g)
    if (!s.count(p)) ev.fn++;
  if (ev.tp + ev.fp) ev.precision = static_cast<double>(ev.tp) / static_cast<double>(ev.tp + ev.fp);
  if (ev.tp + ev.fn) ev.recall = static_cast<double>(ev.tp) / static_cast<double>(ev.tp + ev.fn);
  return ev;
}

} // namespace flowmap::mapping

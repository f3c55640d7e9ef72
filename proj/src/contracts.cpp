#include "flowmap/contracts.h"

#include "flowmap/error.h"

#include <bit>
#include <cctype>
#include <sstream>

namespace flowmap::contracts {

using mapping::DfdRef;
using mapping::EntryKind;
using mapping::MappingState;

std::string_view to_string(Capability c) {
  switch (c) {
  case Capability::Encrypt: return "enc";
  case Capability::Decrypt: return "dec";
  case Capability::Both: return "both";
  }
  return "?";
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
  case ViolationKind::CryptoAbsence: return "CRYPTO_ABSENCE";
  case ViolationKind::AbsenceNotImplemented: return "ABSENCE_NOT_IMPLEMENTED";
  case ViolationKind::DivergenceNoBiunique: return "DIVERGENCE_NO_BIUNIQUE";
  case ViolationKind::DivergenceNotInDfd: return "DIVERGENCE_NOT_IN_DFD";
  }
  return "?";
}

std::string_view to_string(InjectKind k) {
  switch (k) {
  case InjectKind::Encrypt: return "enc";
  case InjectKind::Decrypt: return "dec";
  case InjectKind::Forward: return "fwd";
  case InjectKind::Join: return "join";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Crypto list

CryptoList CryptoList::parse(std::string_view text, const std::string& file) {
  CryptoList list;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::size_t b = 0;
    while (b < raw.size() && (raw[b] == ' ' || raw[b] == '\t')) ++b;
    if (b == raw.size() || raw[b] == '#') continue;
    auto tab = raw.find('\t', b);
    if (tab == std::string_view::npos)
      throw ParseError(file, line, static_cast<int>(raw.size()) + 1, "expected '<capability><TAB><pattern>'");
    std::string_view cap = raw.substr(b, tab - b);
    CryptoEntry e;
    if (cap == "enc") e.capability = Capability::Encrypt;
    else if (cap == "dec") e.capability = Capability::Decrypt;
    else if (cap == "both") e.capability = Capability::Both;
    else throw ParseError(file, line, static_cast<int>(b) + 1, "capability must be enc, dec or both");
    std::size_t ps = tab + 1;
    std::size_t pe = raw.size();
    while (pe > ps && std::isspace(static_cast<unsigned char>(raw[pe - 1]))) --pe;
    try {
      e.pattern = SignaturePattern::parse(raw.substr(ps, pe - ps), file, line);
    } catch (const ParseError& err) {
      throw ParseError(file, line, err.column() + static_cast<int>(ps), "invalid signature pattern '" + std::string(raw.substr(ps, pe - ps)) + "'");
    }
    if (std::find(list.entries_.begin(), list.entries_.end(), e) == list.entries_.end()) list.entries_.push_back(std::move(e));
  }
  return list;
}

std::string CryptoList::print() const {
  std::string out;
  for (const auto& e : entries_) out += std::string(to_string(e.capability)) + "\t" + e.pattern.text() + "\n";
  return out;
}

std::size_t CryptoList::merge(const CryptoList& other) {
  std::size_t added = 0;
  for (const auto& e : other.entries_)
    if (std::find(entries_.begin(), entries_.end(), e) == entries_.end()) {
      entries_.push_back(e);
      ++added;
    }
  return added;
}

bool CryptoList::capable(std::string_view sig, Capability required) const {
  for (const auto& e : entries_)
    if ((e.capability == required || e.capability == Capability::Both) && e.pattern.matches(sig)) return true;
  return false;
}

// ---------------------------------------------------------------------------

void CheckResult::append(CheckResult other) {
  violations.insert(violations.end(), std::make_move_iterator(other.violations.begin()),
                    std::make_move_iterator(other.violations.end()));
  convergences.insert(convergences.end(), std::make_move_iterator(other.convergences.begin()),
                      std::make_move_iterator(other.convergences.end()));
}

void CheckResult::normalize() {
  std::sort(violations.begin(), violations.end());
  violations.erase(std::unique(violations.begin(), violations.end()), violations.end());
  std::sort(convergences.begin(), convergences.end());
  convergences.erase(std::unique(convergences.begin(), convergences.end()), convergences.end());
}

pm::DefSet confirmed_definitions(const MappingState& state, const std::string& ref) {
  pm::DefSet out;
  for (auto kind : {EntryKind::ProcessDefinition, EntryKind::StoreDefinition, EntryKind::EntityDefinition})
    for (const auto* e : state.confirmed(ref, kind)) out.insert(e->pmElement);
  return out;
}

namespace {

const dfd::DfdNode& processNode(const MappingState& state, const std::string& ref) {
  DfdRef r = DfdRef::parse(ref);
  const dfd::DfdNode* n = state.model(r.model).findNode(r.element);
  if (!n || n->kind != dfd::NodeKind::Process) throw NotFoundError("unknown process '" + ref + "'");
  return *n;
}

std::set<std::string> assetTypes(const MappingState& state, const std::string& model, const std::string& asset) {
  std::set<std::string> out;
  for (const auto* e : state.confirmed(model + "/" + asset, EntryKind::AssetType)) out.insert(e->pmElement);
  return out;
}

std::set<std::string> mappedTypes(const MappingState& state, const std::string& model) {
  std::set<std::string> out;
  for (const auto& a : state.model(model).assets) {
    auto t = assetTypes(state, model, a.name);
    out.insert(t.begin(), t.end());
  }
  return out;
}

bool isProcessing(dfd::ContractKind k) { return k == dfd::ContractKind::Forward || k == dfd::ContractKind::Join; }

} // namespace

CheckResult check_crypto(const MappingState& state, const CryptoList& list, const std::string& processRef) {
  const dfd::DfdNode& node = processNode(state, processRef);
  const pm::ProgramModel& pm = state.pm();
  pm::DefSet defs = confirmed_definitions(state, processRef);
  CheckResult r;
  for (std::size_t c = 0; c < node.contracts.size(); ++c) {
    auto kind = node.contracts[c].kind;
    if (kind != dfd::ContractKind::EncryptOrHash && kind != dfd::ContractKind::Decrypt) continue;
    Capability need = kind == dfd::ContractKind::EncryptOrHash ? Capability::Encrypt : Capability::Decrypt;
    std::vector<std::pair<std::string, std::string>> calls;
    for (const auto& d : defs)
      for (const pm::CallEdge* call : pm.callsFrom(d))
        if (list.capable(pm.qualifiedSignature(call->callee), need)) calls.emplace_back(d, call->callee);
    std::sort(calls.begin(), calls.end());
    calls.erase(std::unique(calls.begin(), calls.end()), calls.end());
    if (calls.empty())
      r.violations.push_back({ViolationKind::CryptoAbsence, processRef, c, std::nullopt, std::nullopt,
                              std::vector<std::string>(defs.begin(), defs.end())});
    else
      r.convergences.push_back({processRef, c, std::nullopt, std::nullopt, std::move(calls)});
  }
  return r;
}

CheckResult check_crypto(const MappingState& state, const CryptoList& list) {
  CheckResult r;
  for (const auto& m : state.models())
    for (const auto& n : m.nodes)
      if (n.kind == dfd::NodeKind::Process) r.append(check_crypto(state, list, m.name + "/" + n.id));
  r.normalize();
  return r;
}

std::set<IFlow> extract_iflows(const MappingState& state, const std::string& processRef) {
  processNode(state, processRef);
  pm::DefSet methods = confirmed_definitions(state, processRef);
  if (methods.empty()) throw PreconditionError("process '" + processRef + "' has no confirmed definition");
  const pm::ProgramModel& pm = state.pm();
  std::set<std::string> mapped = mappedTypes(state, DfdRef::parse(processRef).model);
  auto keepMapped = [&](pm::EdgeSet edges) {
    std::erase_if(edges, [&](const std::string& e) { return !mapped.count(pm::communicated_type(pm, e)); });
    return edges;
  };
  pm::EdgeSet in = keepMapped(pm::in_flows(pm, methods));
  pm::EdgeSet out = keepMapped(pm::out_flows(pm, methods));
  std::set<IFlow> result;
  for (const auto& target : out) {
    pm::EdgeSet sources = pm::reachable_bwd(pm, target, in, methods);
    if (!sources.empty()) result.insert({std::set<std::string>(sources.begin(), sources.end()), target});
  }
  return result;
}

std::map<DFlowKey, std::set<IFlow>> match_dflows(const MappingState& state, const std::string& processRef,
                                                 const std::set<IFlow>& iflows) {
  const dfd::DfdNode& node = processNode(state, processRef);
  const std::string model = DfdRef::parse(processRef).model;
  const pm::ProgramModel& pm = state.pm();
  std::map<DFlowKey, std::set<IFlow>> matches;
  for (std::size_t c = 0; c < node.contracts.size(); ++c) {
    const auto& contract = node.contracts[c];
    if (!isProcessing(contract.kind)) continue;
    std::set<std::string> inTypes;
    for (const auto& a : contract.inAssets) {
      auto t = assetTypes(state, model, a);
      inTypes.insert(t.begin(), t.end());
    }
    for (const auto& outAsset : contract.outAssets) {
      std::set<std::string> outTypes = assetTypes(state, model, outAsset);
      std::set<IFlow>& flows = matches[{c, outAsset}];
      for (const auto& i : iflows) {
        if (!outTypes.count(pm::communicated_type(pm, i.target))) continue;
        bool allIn = std::all_of(i.sources.begin(), i.sources.end(),
                                 [&](const std::string& s) { return inTypes.count(pm::communicated_type(pm, s)) > 0; });
        if (allIn) flows.insert(i);
      }
    }
  }
  return matches;
}

CheckResult check_processing_contracts(const MappingState& state, const std::string& processRef,
                                       const std::set<IFlow>& iflows) {
  auto matches = match_dflows(state, processRef, iflows);
  CheckResult r;
  // D-Flows without any candidate are absences; they take no part in the
  // assignment so that one missing implementation does not also void the rest.
  std::map<DFlowKey, std::set<IFlow>> solvable;
  for (const auto& [key, flows] : matches) {
    if (flows.empty())
      r.violations.push_back({ViolationKind::AbsenceNotImplemented, processRef, key.contract, key.outAsset, std::nullopt, {}});
    else
      solvable.emplace(key, flows);
  }
  auto solution = find_biunique(solvable);
  if (!solution) {
    r.violations.push_back({ViolationKind::DivergenceNoBiunique, processRef, std::nullopt, std::nullopt, std::nullopt, {}});
    return r;
  }
  std::set<IFlow> used;
  for (const auto& [key, flow] : *solution) {
    used.insert(flow);
    r.convergences.push_back({processRef, key.contract, key.outAsset, flow, {}});
  }
  std::set<IFlow> leftovers;
  for (const auto& [key, flows] : solvable)
    for (const auto& f : flows)
      if (!used.count(f)) leftovers.insert(f);
  for (const auto& f : leftovers)
    r.violations.push_back({ViolationKind::DivergenceNotInDfd, processRef, std::nullopt, std::nullopt, f, {}});
  return r;
}

CheckResult check_all_processing(const MappingState& state) {
  CheckResult r;
  for (const auto& m : state.models())
    for (const auto& n : m.nodes) {
      if (n.kind != dfd::NodeKind::Process) continue;
      if (std::none_of(n.contracts.begin(), n.contracts.end(), [](const auto& c) { return isProcessing(c.kind); }))
        continue;
      std::string ref = m.name + "/" + n.id;
      if (confirmed_definitions(state, ref).empty()) {
        for (std::size_t c = 0; c < n.contracts.size(); ++c)
          if (isProcessing(n.contracts[c].kind))
            for (const auto& o : n.contracts[c].outAssets)
              r.violations.push_back({ViolationKind::AbsenceNotImplemented, ref, c, o, std::nullopt, {}});
        continue;
      }
      r.append(check_processing_contracts(state, ref, extract_iflows(state, ref)));
    }
  r.normalize();
  return r;
}

// ---------------------------------------------------------------------------
// Injection

std::set<InjectKind> parse_inject_kinds(std::string_view csv) {
  std::set<InjectKind> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto comma = csv.find(',', pos);
    std::string_view k = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    pos = comma == std::string_view::npos ? csv.size() + 1 : comma + 1;
    if (k == "enc") out.insert(InjectKind::Encrypt);
    else if (k == "dec") out.insert(InjectKind::Decrypt);
    else if (k == "fwd") out.insert(InjectKind::Forward);
    else if (k == "join") out.insert(InjectKind::Join);
    else throw InvalidArgument("unknown contract kind '" + std::string(k) + "'", "expected enc, dec, fwd or join");
  }
  return out;
}

namespace {

bool equivalent(const dfd::ProcessContract& existing, const dfd::ProcessContract& c) {
  if (existing.kind != c.kind) return false;
  std::set<std::string> ei(existing.inAssets.begin(), existing.inAssets.end());
  std::set<std::string> ci(c.inAssets.begin(), c.inAssets.end());
  if (ei != ci) return false;
  std::set<std::string> eo(existing.outAssets.begin(), existing.outAssets.end());
  return std::all_of(c.outAssets.begin(), c.outAssets.end(), [&](const std::string& o) { return eo.count(o) > 0; });
}

} // namespace

std::vector<dfd::ProcessContract> enumerate_injectable_contracts(const dfd::SecDfd& model, const std::string& process,
                                                                 const std::set<InjectKind>& kinds) {
  const dfd::DfdNode* node = model.findNode(process);
  if (!node || node->kind != dfd::NodeKind::Process) throw NotFoundError("unknown process '" + process + "'");
  auto ins = model.assetsInto(process);
  auto outs = model.assetsOutOf(process);
  std::vector<dfd::ProcessContract> out;
  auto offer = [&](dfd::ProcessContract c) {
    for (const auto& e : node->contracts)
      if (equivalent(e, c)) return;
    out.push_back(std::move(c));
  };
  auto hasKind = [&](dfd::ContractKind k) {
    return std::any_of(node->contracts.begin(), node->contracts.end(), [&](const auto& c) { return c.kind == k; });
  };
  if (!ins.empty() && !outs.empty()) {
    if (kinds.count(InjectKind::Encrypt) && !hasKind(dfd::ContractKind::EncryptOrHash))
      offer({dfd::ContractKind::EncryptOrHash, ins, outs});
    if (kinds.count(InjectKind::Decrypt) && !hasKind(dfd::ContractKind::Decrypt))
      offer({dfd::ContractKind::Decrypt, ins, outs});
  }
  if (kinds.count(InjectKind::Forward))
    for (const auto& i : ins)
      for (const auto& o : outs) offer({dfd::ContractKind::Forward, {i}, {o}});
  if (kinds.count(InjectKind::Join) && ins.size() >= 2 && ins.size() < 16) {
    std::vector<std::vector<std::string>> subsets;
    for (unsigned mask = 0; mask < (1u << ins.size()); ++mask) {
      if (std::popcount(mask) < 2) continue;
      std::vector<std::string> s;
      for (std::size_t b = 0; b < ins.size(); ++b)
        if (mask & (1u << b)) s.push_back(ins[b]);
      subsets.push_back(std::move(s));
    }
    std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    for (const auto& s : subsets)
      for (const auto& o : outs) offer({dfd::ContractKind::Join, s, {o}});
  }
  return out;
}

namespace {

CheckResult runChecks(const MappingState& state, const CryptoList& list) {
  CheckResult r = check_crypto(state, list);
  r.append(check_all_processing(state));
  r.normalize();
  return r;
}

void finish(InjectionScore& s) {
  if (s.tp + s.fp) s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
  if (s.tp + s.fn) s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
}

} // namespace

InjectionReport run_injection_experiment(const MappingState& state, const CryptoList& list,
                                         const std::set<InjectKind>& kinds) {
  CheckResult baseline = runChecks(state, list);
  if (!baseline.violations.empty())
    throw PreconditionError("the baseline is not compliant: " + std::to_string(baseline.violations.size()) +
                            " violation(s) before injection");
  InjectionReport report;
  for (const auto& m : state.models())
    for (const auto& n : m.nodes) {
      if (n.kind != dfd::NodeKind::Process) continue;
      std::string ref = m.name + "/" + n.id;
      for (const auto& c : enumerate_injectable_contracts(m, n.id, kinds)) {
        dfd::SecDfd edited = m;
        edited.findNode(n.id)->contracts.push_back(c);
        MappingState injected = state;
        injected.replaceModel(std::move(edited));
        CheckResult after = runChecks(injected, list);

        std::size_t idx = n.contracts.size();
        bool crypto = !isProcessing(c.kind);
        auto isExpected = [&](const Violation& v) {
          if (v.process != ref || v.contract != idx) return false;
          if (crypto) return v.kind == ViolationKind::CryptoAbsence;
          return v.kind == ViolationKind::AbsenceNotImplemented && v.outAsset == c.outAssets.front();
        };
        InjectionOutcome o{ref, c, false, {}, {}};
        for (const auto& v : after.violations) {
          if (isExpected(v)) o.detected = true;
          else if (!std::binary_search(baseline.violations.begin(), baseline.violations.end(), v)) o.unexpected.push_back(v);
        }
        for (const auto& cv : baseline.convergences)
          if (!std::binary_search(after.convergences.begin(), after.convergences.end(), cv)) o.lost.push_back(cv);

        InjectionScore& s = crypto ? report.crypto : report.processing;
        (o.detected ? s.tp : s.fn)++;
        s.fp += o.unexpected.size() + o.lost.size();
        report.outcomes.push_back(std::move(o));
      }
    }
  finish(report.crypto);
  finish(report.processing);
  return report;
}

} // namespace flowmap::contracts

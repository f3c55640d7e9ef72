#include "flowmap/taint.h"

#include "flowmap/contracts.h"
#include "flowmap/error.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

namespace flowmap::taint {

using mapping::EntryKind;
using mapping::MappingState;

std::string_view to_string(Mode m) {
  switch (m) {
  case Mode::Plain: return "PLAIN";
  case Mode::PartlyOpt: return "PARTLY_OPT";
  case Mode::FullyOpt: return "FULLY_OPT";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "plain" || s == "PLAIN") return Mode::Plain;
  if (s == "partly" || s == "PARTLY_OPT" || s == "partly_opt") return Mode::PartlyOpt;
  if (s == "fully" || s == "FULLY_OPT" || s == "fully_opt") return Mode::FullyOpt;
  throw InvalidArgument("unknown taint mode '" + std::string(s) + "'", "expected plain, partly or fully");
}

SignatureSet expand_patterns(const pm::ProgramModel& pm, const std::vector<SignaturePattern>& patterns,
                             std::vector<std::string>* unresolved) {
  SignatureSet out;
  for (const auto& p : patterns) {
    bool any = false;
    for (const auto& d : pm.definitions()) {
      std::string sig = pm.qualifiedSignature(d.id);
      if (p.matches(sig)) {
        out.insert(std::move(sig));
        any = true;
      }
    }
    if (!any && unresolved) unresolved->push_back(p.text());
  }
  return out;
}

namespace {

struct AssetCtx {
  const MappingState& state;
  const dfd::SecDfd& model;
  const dfd::Asset& asset;
};

AssetCtx resolveAsset(const MappingState& state, const std::string& assetRef) {
  auto ref = mapping::DfdRef::parse(assetRef);
  const auto& model = state.model(ref.model);
  const auto* asset = model.findAsset(ref.element);
  if (!asset) throw NotFoundError("unknown asset '" + assetRef + "'");
  return {state, model, *asset};
}

std::string refOf(const dfd::SecDfd& model, const std::string& element) { return model.name + "/" + element; }

void addSignatures(const pm::ProgramModel& pm, const pm::DefSet& defs, SignatureSet& out) {
  for (const auto& d : defs) out.insert(pm.qualifiedSignature(d));
}

pm::DefSet mappedDefs(const MappingState& state, const dfd::SecDfd& model, const std::string& element) {
  return contracts::confirmed_definitions(state, refOf(model, element));
}

std::set<std::string> confirmedAssetTypes(const MappingState& state, const dfd::SecDfd& model, const std::string& asset) {
  std::set<std::string> out;
  for (const auto* e : state.confirmed(refOf(model, asset), EntryKind::AssetType)) out.insert(e->pmElement);
  return out;
}

// Definitions of a store's mapped types returning one of `types`.
void storeGetters(const MappingState& state, const dfd::SecDfd& model, const std::string& store,
                  const std::set<std::string>& types, SignatureSet& out) {
  const auto& pm = state.pm();
  for (const auto* e : state.confirmed(refOf(model, store), EntryKind::StoreType)) {
    const auto* t = pm.type(e->pmElement);
    if (!t) continue;
    for (const auto& defId : t->definitions) {
      const auto* sig = pm.signature(pm.definition(defId)->signature);
      if (types.count(sig->returnType)) out.insert(pm.qualifiedSignature(defId));
    }
  }
}

void sourcesOfElement(const AssetCtx& ctx, const std::string& element, const std::set<std::string>& types,
                      SignatureSet& out) {
  const auto& pm = ctx.state.pm();
  const auto* node = ctx.model.findNode(element);
  if (!node) return;
  auto defs = mappedDefs(ctx.state, ctx.model, element);
  switch (node->kind) {
  case dfd::NodeKind::ExternalEntity:
    if (!defs.empty()) {
      addSignatures(pm, defs, out);
    } else {
      for (const auto* f : ctx.model.flowsFrom(element)) {
        if (!f->carries(ctx.asset.name)) continue;
        const auto* reader = ctx.model.findNode(f->target);
        if (reader && reader->kind == dfd::NodeKind::Process)
          addSignatures(pm, mappedDefs(ctx.state, ctx.model, f->target), out);
      }
    }
    break;
  case dfd::NodeKind::DataStore:
    addSignatures(pm, defs, out);
    storeGetters(ctx.state, ctx.model, element, types, out);
    break;
  case dfd::NodeKind::Process:
    addSignatures(pm, defs, out);
    break;
  }
}

bool producedByContract(const dfd::DfdNode& node, const std::string& asset) {
  for (const auto& c : node.contracts)
    if (std::find(c.outAssets.begin(), c.outAssets.end(), asset) != c.outAssets.end()) return true;
  return false;
}

} // namespace

SignatureSet derive_sources(const MappingState& state, const std::string& assetRef) {
  auto ctx = resolveAsset(state, assetRef);
  SignatureSet out;
  const auto* src = ctx.model.findNode(ctx.asset.source);
  if (src && src->kind == dfd::NodeKind::Process && producedByContract(*src, ctx.asset.name)) {
    // Origins found through contracts: a store origin contributes getters for
    // the types of the assets it emits as well as the traced asset's types.
    for (const auto& origin : dfd::trace_asset_origin(ctx.model, ctx.asset)) {
      auto types = confirmedAssetTypes(state, ctx.model, ctx.asset.name);
      for (const auto& a : ctx.model.assets)
        if (a.source == origin) types.merge(confirmedAssetTypes(state, ctx.model, a.name));
      sourcesOfElement(ctx, origin, types, out);
    }
  } else {
    sourcesOfElement(ctx, ctx.asset.source, confirmedAssetTypes(state, ctx.model, ctx.asset.name), out);
  }
  return out;
}

SignatureSet derive_allowed_sinks(const MappingState& state, const std::string& assetRef) {
  auto ctx = resolveAsset(state, assetRef);
  const auto& pm = state.pm();
  SignatureSet out;
  for (const auto& target : ctx.asset.targets) {
    auto defs = mappedDefs(state, ctx.model, target);
    if (!defs.empty()) {
      addSignatures(pm, defs, out);
      continue;
    }
    // Walk back along flows carrying the asset to the nearest mapped elements.
    std::set<std::string> seen{target};
    std::deque<std::string> work{target};
    while (!work.empty()) {
      auto cur = work.front();
      work.pop_front();
      for (const auto* f : ctx.model.flowsInto(cur)) {
        if (!f->carries(ctx.asset.name) || !seen.insert(f->source).second) continue;
        auto prev = mappedDefs(state, ctx.model, f->source);
        if (!prev.empty()) addSignatures(pm, prev, out);
        else work.push_back(f->source);
      }
    }
  }
  return out;
}

SignatureSet derive_zone_sinks(const MappingState& state, const std::string& assetRef) {
  auto ctx = resolveAsset(state, assetRef);
  SignatureSet out;
  for (const auto& z : ctx.model.zones)
    for (const auto& n : z.nodes) addSignatures(state.pm(), mappedDefs(state, ctx.model, n), out);
  return out;
}

TaintConfig build_config(Mode mode, const MappingState& state, const SignatureSet& defaultSources,
                         const SignatureSet& defaultSinks) {
  TaintConfig cfg;
  cfg.mode = mode;
  cfg.defaultSources = defaultSources;
  cfg.defaultSinks = defaultSinks;
  if (mode == Mode::Plain) return cfg;
  for (const auto& model : state.models()) {
    for (const auto& a : model.assets) {
      if (a.label != dfd::Label::High) continue;
      auto ref = refOf(model, a.name);
      AssetPolicy p;
      p.sources = derive_sources(state, ref);
      p.allowedSinks = derive_allowed_sinks(state, ref);
      if (mode == Mode::PartlyOpt) {
        p.sinks = defaultSinks;
      } else {
        auto zone = derive_zone_sinks(state, ref);
        for (const auto& z : zone) p.allowedSinks.erase(z);
        for (const auto& s : defaultSinks)
          if (!p.allowedSinks.count(s)) p.sinks.insert(s);
        p.sinks.insert(zone.begin(), zone.end());
      }
      cfg.perAsset.emplace(std::move(ref), std::move(p));
    }
  }
  return cfg;
}

namespace {

std::map<std::string, std::string> signatureIndex(const pm::ProgramModel& pm) {
  std::map<std::string, std::string> bySig;
  for (const auto& d : pm.definitions()) bySig.emplace(pm.qualifiedSignature(d.id), d.id);
  return bySig;
}

} // namespace

TaintRun run_taint(const pm::ProgramModel& pm, const SignatureSet& sources, const SignatureSet& sinks,
                   std::size_t alarmCap, std::optional<std::string> asset, std::vector<std::string>* unresolved) {
  auto bySig = signatureIndex(pm);
  auto resolve = [&](const SignatureSet& sigs) {
    std::map<std::string, std::string> defs; // def id -> signature
    for (const auto& s : sigs) {
      auto it = bySig.find(s);
      if (it == bySig.end()) {
        if (unresolved) unresolved->push_back(s);
        continue;
      }
      defs.emplace(it->second, s);
    }
    return defs;
  };
  auto srcDefs = resolve(sources);
  auto sinkDefs = resolve(sinks);

  TaintRun run;
  run.asset = asset;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> found;
  for (const auto& [def, sig] : srcDefs) {
    std::deque<pm::FlowEndpoint> work;
    std::map<pm::FlowEndpoint, const pm::DataFlowEdge*> parent; // nullptr for seeds
    auto seed = [&](const pm::FlowEndpoint& e) {
      if (parent.emplace(e, nullptr).second) work.push_back(e);
    };
    for (const auto* e : pm.edgesFrom(pm::FlowEndpoint::returnOf(def)))
      if (e->kind == pm::FlowKind::ReturnFlow) seed(e->to);
    for (const auto& ep : pm.endpointsOf(def))
      if (ep.kind == pm::FlowEndpoint::Kind::Param) seed(ep);

    while (!work.empty()) {
      auto cur = work.front();
      work.pop_front();
      for (const auto* e : pm.edgesFrom(cur)) {
        if (e->kind == pm::FlowKind::ParamPass) {
          auto sink = sinkDefs.find(e->to.ref);
          if (sink != sinkDefs.end() && !found.count({sig, sink->second})) {
            std::vector<std::string> witness{e->id};
            for (auto at = cur; parent.at(at); at = parent.at(at)->from) witness.push_back(parent.at(at)->id);
            std::reverse(witness.begin(), witness.end());
            found.emplace(std::pair{sig, sink->second}, std::move(witness));
          }
        }
        if (parent.emplace(e->to, e).second) work.push_back(e->to);
      }
    }
  }
  for (auto& [key, witness] : found) {
    if (run.alarms.size() == alarmCap) {
      run.truncated = true;
      break;
    }
    run.alarms.push_back({asset, key.first, key.second, std::move(witness)});
  }
  return run;
}

TaintResult run_taint(const pm::ProgramModel& pm, const TaintConfig& config) {
  TaintResult result;
  result.mode = config.mode;
  if (config.mode == Mode::Plain) {
    result.runs.push_back(
        run_taint(pm, config.defaultSources, config.defaultSinks, config.alarmCap, std::nullopt, &result.unresolved));
  } else {
    for (const auto& [asset, policy] : config.perAsset)
      result.runs.push_back(run_taint(pm, policy.sources, policy.sinks, config.alarmCap, asset, &result.unresolved));
  }
  std::sort(result.unresolved.begin(), result.unresolved.end());
  result.unresolved.erase(std::unique(result.unresolved.begin(), result.unresolved.end()), result.unresolved.end());
  return result;
}

std::map<std::string, std::size_t> alarms_per_model(const TaintResult& result, const std::vector<std::string>& models) {
  std::map<std::string, std::set<std::pair<std::string, std::string>>> pairs;
  for (const auto& m : models) pairs[m];
  for (const auto& run : result.runs) {
    for (const auto& a : run.alarms) {
      if (!run.asset) {
        for (auto& [m, set] : pairs) set.emplace(a.source, a.sink);
      } else {
        auto model = mapping::DfdRef::parse(*run.asset).model;
        if (pairs.count(model)) pairs[model].emplace(a.source, a.sink);
      }
    }
  }
  std::map<std::string, std::size_t> out;
  for (const auto& [m, set] : pairs) out[m] = set.size();
  return out;
}

std::string format_delta(std::optional<long> percent) {
  if (!percent) return "n/a";
  if (*percent < 0) return "↓ " + std::to_string(-*percent) + "%";
  if (*percent > 0) return "↑ " + std::to_string(*percent) + "%";
  return "± 0%";
}

ReductionReport compare_configs(const pm::ProgramModel& pm, const std::vector<TaintConfig>& configs,
                                const std::vector<std::string>& models) {
  ReductionReport report;
  std::optional<double> plainAvg;
  for (const auto& cfg : configs) {
    ModeRow row;
    row.mode = cfg.mode;
    row.perModel = alarms_per_model(run_taint(pm, cfg), models);
    double sum = 0;
    for (const auto& [m, n] : row.perModel) sum += static_cast<double>(n);
    row.average = row.perModel.empty() ? 0.0 : sum / static_cast<double>(row.perModel.size());
    if (cfg.mode == Mode::Plain && !plainAvg) plainAvg = row.average;
    report.rows.push_back(std::move(row));
  }
  for (auto& row : report.rows) {
    if (row.mode == Mode::Plain || !plainAvg || *plainAvg == 0.0) continue;
    row.deltaPercent = std::lround((row.average - *plainAvg) / *plainAvg * 100.0);
  }
  return report;
}

std::string ReductionReport::table() const {
  std::vector<std::string> models;
  if (!rows.empty())
    for (const auto& [m, n] : rows.front().perModel) models.push_back(m);
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::size_t w = 12;
  for (const auto& m : models) w = std::max(w, m.size() + 2);
  std::string out = pad("mode", 12);
  for (const auto& m : models) out += pad(m, w);
  out += pad("average", 10) + "change\n";
  for (const auto& row : rows) {
    out += pad(std::string(to_string(row.mode)), 12);
    for (const auto& m : models) {
      auto it = row.perModel.find(m);
      out += pad(it == row.perModel.end() ? "-" : std::to_string(it->second), w);
    }
    char avg[32];
    std::snprintf(avg, sizeof avg, "%.2f", row.average);
    out += pad(avg, 10) + (row.mode == Mode::Plain ? std::string("-") : format_delta(row.deltaPercent)) + "\n";
  }
  return out;
}

} // namespace flowmap::taint

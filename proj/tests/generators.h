#pragma once

#include "flowmap/secdfd.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

// Random SecDFDs for property tests, and an independent label oracle.

namespace testsupport {

using flowmap::dfd::ContractKind;
using flowmap::dfd::Label;
using flowmap::dfd::NodeKind;
using flowmap::dfd::SecDfd;

/// Acyclic model: two source entities, a chain of processes each with at
/// most one contract consuming assets held by earlier nodes, one sink entity.
inline SecDfd randomLabelModel(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  SecDfd m;
  m.name = "random";
  m.nodes.push_back({"E0", NodeKind::ExternalEntity, {}});
  m.nodes.push_back({"E1", NodeKind::ExternalEntity, {}});
  m.nodes.push_back({"Out", NodeKind::ExternalEntity, {}});
  struct Held {
    std::string asset, node;
  };
  std::vector<Held> pool;
  int assetNo = 0;
  auto newAsset = [&](const std::string& source) {
    std::string name = "a" + std::to_string(assetNo++);
    m.assets.push_back({name, "T" + name, pick(0, 1) ? Label::High : Label::Low, source, {"Out"}});
    pool.push_back({name, source});
    return name;
  };
  for (const char* e : {"E0", "E1"})
    for (int k = pick(1, 2); k > 0; --k) newAsset(e);

  int flowNo = 1;
  auto flow = [&](const std::string& from, const std::string& to, const std::string& asset) {
    m.flows.push_back({flowNo++, from, to, {asset}});
  };
  int processes = pick(1, 6);
  for (int p = 0; p < processes; ++p) {
    std::string id = "P" + std::to_string(p);
    m.nodes.push_back({id, NodeKind::Process, {}});
    // Distinct assets among the currently held ones.
    std::vector<Held> choices;
    std::set<std::string> seen;
    std::vector<Held> shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (const auto& h : shuffled)
      if (seen.insert(h.asset).second) choices.push_back(h);
    int kind = pick(0, 4); // forward, join, encrypt, decrypt, none
    if (kind == 1 && choices.size() < 2) kind = 0;
    std::size_t want = kind == 0 || kind == 4 ? 1 : kind == 1 ? static_cast<std::size_t>(pick(2, 3)) : static_cast<std::size_t>(pick(1, 2));
    want = std::min(want, choices.size());
    std::vector<std::string> ins;
    for (std::size_t i = 0; i < want; ++i) {
      flow(choices[i].node, id, choices[i].asset);
      ins.push_back(choices[i].asset);
    }
    std::vector<std::string> outs;
    if (kind == 0 || kind == 4) {
      outs = ins;
      pool.push_back({ins[0], id});
      if (kind == 0) m.nodes.back().contracts.push_back({ContractKind::Forward, ins, outs});
    } else {
      outs = {newAsset(id)};
      ContractKind k = kind == 1 ? ContractKind::Join : kind == 2 ? ContractKind::EncryptOrHash : ContractKind::Decrypt;
      m.nodes.back().contracts.push_back({k, ins, outs});
    }
    for (const auto& o : outs) flow(id, "Out", o);
  }
  return m;
}

/// Labels computed recursively from the contract rules on an acyclic model.
class LabelOracle {
public:
  explicit LabelOracle(const SecDfd& m) : m_(m) {}

  Label flowLabel(int index, const std::string& asset) { return emitted(m_.findFlow(index)->source, asset); }

  Label arriving(const std::string& node, const std::string& asset) {
    bool high = false;
    for (const auto* f : m_.flowsInto(node))
      if (f->carries(asset)) high = high || flowLabel(f->index, asset) == Label::High;
    return high ? Label::High : Label::Low;
  }

  Label emitted(const std::string& node, const std::string& asset) {
    auto key = std::pair{node, asset};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const auto* n = m_.findNode(node);
    for (const auto& c : n->contracts) {
      if (std::find(c.outAssets.begin(), c.outAssets.end(), asset) == c.outAssets.end()) continue;
      if (c.kind == ContractKind::EncryptOrHash) return memo_[key] = Label::Low;
      bool high = false;
      for (const auto& in : c.inAssets) high = high || arriving(node, in) == Label::High;
      return memo_[key] = high ? Label::High : Label::Low;
    }
    bool received = false;
    for (const auto* f : m_.flowsInto(node)) received = received || f->carries(asset);
    Label l = received ? arriving(node, asset) : m_.findAsset(asset)->label;
    if (m_.findAsset(asset)->source == node && m_.findAsset(asset)->label == Label::High) l = Label::High;
    return memo_[key] = l;
  }

private:
  const SecDfd& m_;
  std::map<std::pair<std::string, std::string>, Label> memo_;
};

} // namespace testsupport

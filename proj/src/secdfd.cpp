#include "flowmap/secdfd.h"

#include "flowmap/error.h"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace flowmap::dfd {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
  case NodeKind::Process: return "process";
  case NodeKind::ExternalEntity: return "external";
  case NodeKind::DataStore: return "store";
  }
  return "?";
}

std::string_view to_string(Label label) { return label == Label::High ? "high" : "low"; }

std::string_view to_string(ContractKind kind) {
  switch (kind) {
  case ContractKind::EncryptOrHash: return "encrypt";
  case ContractKind::Decrypt: return "decrypt";
  case ContractKind::Join: return "join";
  case ContractKind::Forward: return "forward";
  }
  return "?";
}

bool DfdFlow::carries(std::string_view asset) const {
  return std::find(assets.begin(), assets.end(), asset) != assets.end();
}

const DfdNode* SecDfd::findNode(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

DfdNode* SecDfd::findNode(std::string_view id) {
  for (auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const Asset* SecDfd::findAsset(std::string_view name) const {
  for (const auto& a : assets)
    if (a.name == name) return &a;
  return nullptr;
}

const DfdFlow* SecDfd::findFlow(int index) const {
  for (const auto& f : flows)
    if (f.index == index) return &f;
  return nullptr;
}

namespace {

std::vector<const DfdFlow*> sortedFlows(const SecDfd& m, const std::function<bool(const DfdFlow&)>& keep) {
  std::vector<const DfdFlow*> out;
  for (const auto& f : m.flows)
    if (keep(f)) out.push_back(&f);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->index < b->index; });
  return out;
}

} // namespace

std::vector<const DfdFlow*> SecDfd::flowsInto(std::string_view node) const {
  return sortedFlows(*this, [&](const DfdFlow& f) { return f.target == node; });
}

std::vector<const DfdFlow*> SecDfd::flowsFrom(std::string_view node) const {
  return sortedFlows(*this, [&](const DfdFlow& f) { return f.source == node; });
}

std::vector<std::string> SecDfd::assetsInto(std::string_view node) const {
  std::set<std::string> out;
  for (const auto* f : flowsInto(node)) out.insert(f->assets.begin(), f->assets.end());
  return {out.begin(), out.end()};
}

std::vector<std::string> SecDfd::assetsOutOf(std::string_view node) const {
  std::set<std::string> out;
  for (const auto* f : flowsFrom(node)) out.insert(f->assets.begin(), f->assets.end());
  return {out.begin(), out.end()};
}

Label LabelAssignment::at(int flow, const std::string& asset) const {
  auto it = entries.find({flow, asset});
  if (it == entries.end())
    throw NotFoundError("no label for asset '" + asset + "' on flow " + std::to_string(flow));
  return it->second;
}

std::optional<std::size_t> first_contract_consuming(const DfdNode& process, std::string_view asset) {
  for (std::size_t i = 0; i < process.contracts.size(); ++i) {
    const auto& in = process.contracts[i].inAssets;
    if (std::find(in.begin(), in.end(), asset) != in.end()) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum Kind { Ident, Int, Punct, End } kind = End;
  std::string text;
  int column = 0;
};

struct Pos {
  int line = 0;
  int column = 0;
};

std::vector<Token> tokenize(std::string_view line, int lineNo, const std::string& file) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    int col = static_cast<int>(i) + 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_' || line[j] == '.'))
        ++j;
      out.push_back({Token::Ident, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      out.push_back({Token::Int, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      out.push_back({Token::Punct, "->", col});
      i += 2;
    } else if (c == ':' || c == ',' || c == '{' || c == '}') {
      out.push_back({Token::Punct, std::string(1, c), col});
      ++i;
    } else {
      throw ParseError(file, lineNo, col, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Token::End, "", static_cast<int>(line.size()) + 1});
  return out;
}

class LineParser {
public:
  LineParser(std::vector<Token> tokens, int line, const std::string& file)
      : tokens_(std::move(tokens)), line_(line), file_(file) {}

  const Token& peek() const { return tokens_[pos_]; }
  bool atEnd() const { return peek().kind == Token::End; }
  Pos here() const { return {line_, peek().column}; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(file_, line_, peek().column, message);
  }

  Token ident(const char* what) {
    if (peek().kind != Token::Ident) fail(std::string("expected ") + what);
    return tokens_[pos_++];
  }

  int integer(const char* what) {
    if (peek().kind != Token::Int) fail(std::string("expected ") + what);
    return std::stoi(tokens_[pos_++].text);
  }

  void punct(const char* p) {
    if (peek().kind != Token::Punct || peek().text != p) fail(std::string("expected '") + p + "'");
    ++pos_;
  }

  bool acceptPunct(const char* p) {
    if (peek().kind == Token::Punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }

  void keyword(const char* kw) {
    if (peek().kind != Token::Ident || peek().text != kw) fail(std::string("expected '") + kw + "'");
    ++pos_;
  }

  std::vector<Token> identList(const char* what) {
    std::vector<Token> out{ident(what)};
    while (acceptPunct(",")) out.push_back(ident(what));
    return out;
  }

  void end() {
    if (!atEnd()) fail("unexpected '" + peek().text + "'");
  }

private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int line_;
  const std::string& file_;
};

struct Ref {
  std::string name;
  Pos pos;
};

// Source positions of every reference, checked once the whole text is read.
struct Positions {
  std::map<std::string, Pos> nodeDecl;
  std::map<std::string, Pos> assetDecl;
  struct FlowRefs {
    Pos decl;
    Ref source, target;
    std::vector<Ref> assets;
  };
  std::vector<FlowRefs> flows;
  struct AssetRefs {
    Ref source;
    std::vector<Ref> targets;
  };
  std::vector<AssetRefs> assets;
  struct ContractRefs {
    Ref process;
    Pos decl;
    std::vector<Ref> in, out;
    ProcessContract contract;
  };
  std::vector<ContractRefs> contracts;
  struct ZoneRefs {
    std::vector<Ref> members;
  };
  std::vector<ZoneRefs> zones;
};

} // namespace

SecDfd parse_secdfd(std::string_view text, const std::string& fileName) {
  SecDfd model;
  Positions pos;
  bool haveModel = false;
  std::set<std::string> zoneNames;

  int lineNo = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    LineParser p(tokenize(line, lineNo, fileName), lineNo, fileName);
    if (p.atEnd()) continue;
    Pos declPos = p.here();
    Token kw = p.ident("declaration keyword");

    if (!haveModel && kw.text != "model")
      throw ParseError(fileName, lineNo, kw.column, "expected 'model <id>' before other declarations");

    if (kw.text == "model") {
      if (haveModel) throw ParseError(fileName, lineNo, kw.column, "duplicate model declaration");
      model.name = p.ident("model name").text;
      p.end();
      haveModel = true;
    } else if (kw.text == "process" || kw.text == "external" || kw.text == "store") {
      Token id = p.ident("node id");
      p.end();
      if (pos.nodeDecl.count(id.text) || pos.assetDecl.count(id.text))
        throw ParseError(fileName, lineNo, id.column, "duplicate identifier '" + id.text + "'");
      pos.nodeDecl[id.text] = {lineNo, id.column};
      NodeKind k = kw.text == "process" ? NodeKind::Process
                   : kw.text == "external" ? NodeKind::ExternalEntity
                                           : NodeKind::DataStore;
      model.nodes.push_back({id.text, k, {}});
    } else if (kw.text == "asset") {
      Token id = p.ident("asset name");
      if (pos.nodeDecl.count(id.text) || pos.assetDecl.count(id.text))
        throw ParseError(fileName, lineNo, id.column, "duplicate identifier '" + id.text + "'");
      p.punct(":");
      Asset a;
      a.name = id.text;
      a.valueType = p.ident("value type").text;
      Token lab = p.ident("'high' or 'low'");
      if (lab.text == "high") a.label = Label::High;
      else if (lab.text == "low") a.label = Label::Low;
      else throw ParseError(fileName, lineNo, lab.column, "expected 'high' or 'low'");
      p.keyword("from");
      Token src = p.ident("source node");
      p.keyword("to");
      auto targets = p.identList("target node");
      p.end();
      a.source = src.text;
      Positions::AssetRefs refs{{src.text, {lineNo, src.column}}, {}};
      for (const auto& t : targets) {
        a.targets.push_back(t.text);
        refs.targets.push_back({t.text, {lineNo, t.column}});
      }
      pos.assetDecl[a.name] = {lineNo, id.column};
      pos.assets.push_back(std::move(refs));
      model.assets.push_back(std::move(a));
    } else if (kw.text == "flow") {
      Pos idxPos = p.here();
      int index = p.integer("flow index");
      for (const auto& f : model.flows)
        if (f.index == index)
          throw ParseError(fileName, idxPos.line, idxPos.column, "duplicate flow index " + std::to_string(index));
      p.punct(":");
      Token src = p.ident("source node");
      p.punct("->");
      Token dst = p.ident("target node");
      p.keyword("carrying");
      auto assets = p.identList("asset name");
      p.end();
      DfdFlow f{index, src.text, dst.text, {}};
      Positions::FlowRefs refs{idxPos, {src.text, {lineNo, src.column}}, {dst.text, {lineNo, dst.column}}, {}};
      for (const auto& a : assets) {
        f.assets.push_back(a.text);
        refs.assets.push_back({a.text, {lineNo, a.column}});
      }
      pos.flows.push_back(std::move(refs));
      model.flows.push_back(std::move(f));
    } else if (kw.text == "contract") {
      Token proc = p.ident("process id");
      Token kind = p.ident("contract kind");
      ProcessContract c;
      if (kind.text == "encrypt" || kind.text == "hash") c.kind = ContractKind::EncryptOrHash;
      else if (kind.text == "decrypt") c.kind = ContractKind::Decrypt;
      else if (kind.text == "forward") c.kind = ContractKind::Forward;
      else if (kind.text == "join") c.kind = ContractKind::Join;
      else throw ParseError(fileName, lineNo, kind.column, "unknown contract kind '" + kind.text + "'");
      p.keyword("in");
      auto in = p.identList("input asset");
      p.keyword("out");
      auto out = p.identList("output asset");
      p.end();
      Positions::ContractRefs refs{{proc.text, {lineNo, proc.column}}, declPos, {}, {}, {}};
      for (const auto& t : in) {
        c.inAssets.push_back(t.text);
        refs.in.push_back({t.text, {lineNo, t.column}});
      }
      for (const auto& t : out) {
        c.outAssets.push_back(t.text);
        refs.out.push_back({t.text, {lineNo, t.column}});
      }
      refs.contract = c;
      pos.contracts.push_back(std::move(refs));
    } else if (kw.text == "zone" || kw.text == "boundary") {
      Token id = p.ident("name");
      p.punct("{");
      std::vector<Ref> members;
      std::vector<Token> raw;
      if (!p.acceptPunct("}")) {
        do {
          const Token& t = p.peek();
          if (t.kind != Token::Ident && t.kind != Token::Int) p.fail("expected zone member");
          raw.push_back(t);
          if (t.kind == Token::Int) p.integer("flow index");
          else p.ident("member");
        } while (p.acceptPunct(","));
        p.punct("}");
      }
      p.end();
      if (kw.text == "boundary") {
        TrustBoundary b{id.text, {}};
        for (const auto& t : raw) b.members.push_back(t.text);
        model.boundaries.push_back(std::move(b));
        continue;
      }
      if (!zoneNames.insert(id.text).second)
        throw ParseError(fileName, lineNo, id.column, "duplicate zone '" + id.text + "'");
      AttackerZone z{id.text, {}, {}};
      Positions::ZoneRefs refs;
      for (const auto& t : raw) {
        if (t.kind == Token::Int) z.flows.push_back(std::stoi(t.text));
        else z.nodes.push_back(t.text);
        refs.members.push_back({t.text, {lineNo, t.column}});
      }
      pos.zones.push_back(std::move(refs));
      model.zones.push_back(std::move(z));
    } else {
      throw ParseError(fileName, lineNo, kw.column, "unknown declaration '" + kw.text + "'");
    }
  }

  if (!haveModel) throw ParseError(fileName, 1, 1, "missing 'model <id>' declaration");

  auto fail = [&](const Ref& r, const std::string& msg) -> void {
    throw ParseError(fileName, r.pos.line, r.pos.column, msg);
  };
  auto needNode = [&](const Ref& r) {
    if (!model.findNode(r.name)) fail(r, "dangling reference to node '" + r.name + "'");
  };
  auto needAsset = [&](const Ref& r) {
    if (!model.findAsset(r.name)) fail(r, "dangling reference to asset '" + r.name + "'");
  };

  for (const auto& a : pos.assets) {
    needNode(a.source);
    for (const auto& t : a.targets) needNode(t);
  }
  for (const auto& f : pos.flows) {
    needNode(f.source);
    needNode(f.target);
    for (const auto& a : f.assets) needAsset(a);
  }
  for (auto& c : pos.contracts) {
    DfdNode* node = model.findNode(c.process.name);
    if (!node) fail(c.process, "dangling reference to node '" + c.process.name + "'");
    if (node->kind != NodeKind::Process) fail(c.process, "contracts are only allowed on processes");
    for (const auto& r : c.in) needAsset(r);
    for (const auto& r : c.out) needAsset(r);
    const auto& k = c.contract;
    Ref at{c.process.name, c.decl};
    if (k.kind == ContractKind::Forward && (k.inAssets.size() != 1 || k.outAssets.size() != 1))
      fail(at, "forward contract needs exactly one input and one output asset");
    if (k.kind == ContractKind::Join && (k.inAssets.size() < 2 || k.outAssets.size() != 1))
      fail(at, "join contract needs at least two input assets and exactly one output asset");
    auto touching = [&](const std::string& asset) {
      for (const auto& f : model.flows)
        if ((f.source == node->id || f.target == node->id) && f.carries(asset)) return true;
      return false;
    };
    for (const auto& r : c.in)
      if (!touching(r.name)) fail(r, "contract asset '" + r.name + "' is not carried by any flow of '" + node->id + "'");
    for (const auto& r : c.out)
      if (!touching(r.name)) fail(r, "contract asset '" + r.name + "' is not carried by any flow of '" + node->id + "'");
    node->contracts.push_back(c.contract);
  }
  for (const auto& z : pos.zones) {
    for (const auto& m : z.members) {
      if (std::isdigit(static_cast<unsigned char>(m.name[0]))) {
        if (!model.findFlow(std::stoi(m.name))) fail(m, "dangling reference to flow " + m.name);
      } else {
        needNode(m);
      }
    }
  }
  return model;
}

std::string print_secdfd(const SecDfd& model) {
  std::ostringstream os;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  os << "model " << model.name << "\n";
  for (const auto& n : model.nodes) os << to_string(n.kind) << " " << n.id << "\n";
  for (const auto& a : model.assets)
    os << "asset " << a.name << " : " << a.valueType << " " << to_string(a.label) << " from " << a.source
       << " to " << join(a.targets) << "\n";
  for (const auto& f : model.flows)
    os << "flow " << f.index << " : " << f.source << " -> " << f.target << " carrying " << join(f.assets) << "\n";
  for (const auto& n : model.nodes)
    for (const auto& c : n.contracts)
      os << "contract " << n.id << " " << to_string(c.kind) << " in " << join(c.inAssets) << " out "
         << join(c.outAssets) << "\n";
  for (const auto& z : model.zones) {
    std::vector<std::string> members = z.nodes;
    for (int f : z.flows) members.push_back(std::to_string(f));
    os << "zone " << z.name << " { ";
    for (std::size_t i = 0; i < members.size(); ++i) os << (i ? ", " : "") << members[i];
    os << (members.empty() ? "}" : " }") << "\n";
  }
  for (const auto& b : model.boundaries) {
    os << "boundary " << b.name << " { ";
    for (std::size_t i = 0; i < b.members.size(); ++i) os << (i ? ", " : "") << b.members[i];
    os << (b.members.empty() ? "}" : " }") << "\n";
  }
  return os.str();
}

void validate(const SecDfd& model) {
  // Round-tripping through the parser applies exactly the same rules.
  try {
    SecDfd reparsed = parse_secdfd(print_secdfd(model), model.name);
    if (!(reparsed == model)) throw InvalidArgument("model '" + model.name + "' is not in canonical form");
  } catch (const ParseError& e) {
    throw InvalidArgument("invalid model '" + model.name + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Label propagation

namespace {

enum class Lvl : int { Unset = -1, Low = 0, High = 1 };

Lvl lvl(Label l) { return l == Label::High ? Lvl::High : Lvl::Low; }
Lvl maxLvl(Lvl a, Lvl b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

} // namespace

LabelAssignment propagate_labels(const SecDfd& model) {
  // Least fixpoint over {unset < low < high}. Which rule produces an asset at
  // a node is decided structurally up front, so every step is monotone and the
  // iteration terminates on cyclic diagrams.
  using Key = std::pair<std::string, std::string>; // (node, asset)

  std::map<Key, std::vector<const DfdFlow*>> incoming;
  for (const auto& f : model.flows)
    for (const auto& a : f.assets) incoming[{f.target, a}].push_back(&f);

  // For every (process, output asset): the contracts producing it and, per
  // contract, the inputs for which that contract is the first consumer.
  struct Producer {
    ContractKind kind;
    std::vector<std::string> inputs;
  };
  std::map<Key, std::vector<Producer>> producers;
  for (const auto& n : model.nodes) {
    if (n.kind != NodeKind::Process) continue;
    for (std::size_t ci = 0; ci < n.contracts.size(); ++ci) {
      const auto& c = n.contracts[ci];
      Producer p{c.kind, {}};
      for (const auto& in : c.inAssets)
        if (first_contract_consuming(n, in) == ci && incoming.count({n.id, in})) p.inputs.push_back(in);
      if (p.inputs.empty()) continue; // contract never fires
      for (const auto& out : c.outAssets) producers[{n.id, out}].push_back(p);
    }
  }

  std::map<std::pair<int, std::string>, Lvl> cur;
  for (const auto& f : model.flows)
    for (const auto& a : f.assets) cur[{f.index, a}] = Lvl::Unset;

  auto arrival = [&](const std::string& node, const std::string& asset) {
    Lvl v = Lvl::Unset;
    auto it = incoming.find({node, asset});
    if (it != incoming.end())
      for (const auto* f : it->second) v = maxLvl(v, cur[{f->index, asset}]);
    return v;
  };

  auto produced = [&](const std::string& node, const std::string& asset) {
    auto it = producers.find({node, asset});
    if (it != producers.end()) {
      Lvl v = Lvl::Unset;
      for (const auto& p : it->second) {
        if (p.kind == ContractKind::EncryptOrHash) {
          v = maxLvl(v, Lvl::Low);
          continue;
        }
        Lvl in = Lvl::Unset;
        for (const auto& x : p.inputs) in = maxLvl(in, arrival(node, x));
        v = maxLvl(v, in);
      }
      return v;
    }
    const Asset* a = model.findAsset(asset);
    bool received = incoming.count({node, asset}) > 0;
    Lvl v = Lvl::Unset;
    if (a && (a->source == node || !received)) v = lvl(a->label);
    if (received) v = maxLvl(v, arrival(node, asset));
    return v;
  };

  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& f : model.flows) {
      for (const auto& a : f.assets) {
        Lvl next = produced(f.source, a);
        Lvl& slot = cur[{f.index, a}];
        if (static_cast<int>(next) > static_cast<int>(slot)) {
          slot = next;
          changed = true;
        }
      }
    }
  }

  LabelAssignment out;
  for (const auto& [key, v] : cur) {
    Label l;
    if (v == Lvl::Unset) {
      const Asset* a = model.findAsset(key.second);
      l = a ? a->label : Label::Low;
    } else {
      l = v == Lvl::High ? Label::High : Label::Low;
    }
    out.entries[key] = l;
  }
  return out;
}

std::vector<DesignLeak> check_design_leaks(const SecDfd& model, const LabelAssignment& labels) {
  std::set<DesignLeak> found;
  for (const auto& z : model.zones) {
    std::set<std::string> nodes(z.nodes.begin(), z.nodes.end());
    std::set<int> flows(z.flows.begin(), z.flows.end());
    for (const auto& f : model.flows) {
      for (const auto& a : f.assets) {
        auto it = labels.entries.find({f.index, a});
        if (it == labels.entries.end() || it->second != Label::High) continue;
        if (nodes.count(f.source)) found.insert({a, z.name, f.source});
        if (nodes.count(f.target)) found.insert({a, z.name, f.target});
        if (flows.count(f.index)) found.insert({a, z.name, "flow:" + std::to_string(f.index)});
      }
    }
  }
  return {found.begin(), found.end()};
}

namespace {

void traceInto(const SecDfd& model, const Asset& asset, std::set<std::string>& visiting,
               std::set<std::string>& out) {
  if (!visiting.insert(asset.name).second) return;
  const DfdNode* src = model.findNode(asset.source);
  if (!src) return;
  if (src->kind != NodeKind::Process) {
    out.insert(src->id);
    return;
  }
  bool produced = false;
  for (const auto& c : src->contracts) {
    if (std::find(c.outAssets.begin(), c.outAssets.end(), asset.name) == c.outAssets.end()) continue;
    produced = true;
    for (const auto& in : c.inAssets)
      if (const Asset* a = model.findAsset(in)) traceInto(model, *a, visiting, out);
  }
  if (!produced) out.insert(src->id);
}

} // namespace

std::set<std::string> trace_asset_origin(const SecDfd& model, const Asset& asset) {
  std::set<std::string> visiting, out;
  traceInto(model, asset, visiting, out);
  if (out.empty()) out.insert(asset.source);
  return out;
}

} // namespace flowmap::dfd

#include "flowmap/frontend.h"

#include "flowmap/error.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace flowmap::pm {

namespace {

// ---------------------------------------------------------------------------
// Lexer

struct Token {
  enum class Kind { Ident, Int, Str, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
public:
  Lexer(const std::string& file, std::string_view text) : file_(file), text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skipTrivia();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
          t.text += advance();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Token::Kind::Int;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) t.text += advance();
      } else if (c == '"') {
        t.kind = Token::Kind::Str;
        advance();
        while (pos_ < text_.size() && text_[pos_] != '"' && text_[pos_] != '\n') {
          if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) advance();
          t.text += advance();
        }
        if (pos_ >= text_.size() || text_[pos_] != '"') throw ParseError(file_, t.line, t.col, "unterminated string literal");
        advance();
      } else if (std::string_view("{}();:,.=+").find(c) != std::string_view::npos) {
        t.kind = Token::Kind::Punct;
        t.text = advance();
      } else {
        throw ParseError(file_, line_, col_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

private:
  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skipTrivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        int l = line_, k = col_;
        advance();
        advance();
        while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= text_.size()) throw ParseError(file_, l, k, "unterminated comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  const std::string& file_;
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// AST

struct Pos {
  int line = 0;
  int col = 0;
};

struct Expr {
  enum class Kind { Name, This, FieldRead, StrLit, IntLit, BoolLit, New, Call, Add };
  Kind kind = Kind::Name;
  std::string name;            // identifier, field, type or method name
  std::unique_ptr<Expr> recv;  // receiver of a call; null means this
  std::vector<Expr> args;      // call arguments, or both operands of Add
  Pos pos;
};

struct Stmt {
  enum class Kind { Let, Assign, FieldAssign, Return, Eval };
  Kind kind = Kind::Eval;
  std::string name;
  std::optional<Expr> value;
  Pos pos;
};

struct ParamAst {
  std::string name;
  std::string type;
  Pos pos;
};

struct MethodAst {
  std::string name;
  std::vector<ParamAst> params;
  std::string returnType;
  Pos returnPos;
  std::optional<std::vector<Stmt>> body;
  Pos pos;
  int endLine = 0;
};

struct FieldAst {
  std::string name;
  std::string type;
  Pos pos;
};

struct TypeAst {
  std::string name;
  std::optional<std::string> extends;
  Pos extendsPos;
  std::vector<FieldAst> fields;
  std::vector<MethodAst> methods;
  Pos pos;
};

struct FileAst {
  std::string path;
  std::string package;
  std::vector<TypeAst> types;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
  Parser(const std::string& file, std::vector<Token> toks) : file_(file), toks_(std::move(toks)) {}

  FileAst parseFile() {
    FileAst f;
    f.path = file_;
    if (isKeyword("package")) {
      next();
      f.package = expectIdent("package name");
      while (isPunct(".")) {
        next();
        f.package += "." + expectIdent("package name");
      }
      expectPunct(";");
    }
    while (peek().kind != Token::Kind::End) f.types.push_back(parseType());
    return f;
  }

private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool isPunct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::Punct && peek(k).text == p;
  }
  bool isKeyword(std::string_view w) const { return peek().kind == Token::Kind::Ident && peek().text == w; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string got = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(file_, t.line, t.col, msg + ", found " + got);
  }

  void expectPunct(std::string_view p) {
    if (!isPunct(p)) fail(peek(), "expected '" + std::string(p) + "'");
    next();
  }
  void expectKeyword(std::string_view w) {
    if (!isKeyword(w)) fail(peek(), "expected '" + std::string(w) + "'");
    next();
  }
  std::string expectIdent(const std::string& what) {
    if (peek().kind != Token::Kind::Ident) fail(peek(), "expected " + what);
    return next().text;
  }
  Pos here() const { return {peek().line, peek().col}; }

  std::string parseTypeName() {
    std::string n = expectIdent("type name");
    while (isPunct(".") && peek(1).kind == Token::Kind::Ident) {
      next();
      n += "." + next().text;
    }
    return n;
  }

  TypeAst parseType() {
    TypeAst t;
    t.pos = here();
    expectKeyword("type");
    t.name = expectIdent("type name");
    if (isKeyword("extends")) {
      next();
      t.extendsPos = here();
      t.extends = parseTypeName();
    }
    expectPunct("{");
    while (!isPunct("}")) {
      if (isKeyword("field")) {
        FieldAst f;
        f.pos = here();
        next();
        f.name = expectIdent("field name");
        expectPunct(":");
        f.type = parseTypeName();
        expectPunct(";");
        t.fields.push_back(std::move(f));
      } else if (isKeyword("def")) {
        t.methods.push_back(parseMethod());
      } else {
        fail(peek(), "expected 'field', 'def' or '}'");
      }
    }
    next();
    return t;
  }

  MethodAst parseMethod() {
    MethodAst m;
    m.pos = here();
    expectKeyword("def");
    m.name = expectIdent("method name");
    expectPunct("(");
    while (!isPunct(")")) {
      if (!m.params.empty()) expectPunct(",");
      ParamAst p;
      p.pos = here();
      p.name = expectIdent("parameter name");
      expectPunct(":");
      p.type = parseTypeName();
      m.params.push_back(std::move(p));
    }
    next();
    expectPunct(":");
    m.returnPos = here();
    m.returnType = parseTypeName();
    if (isPunct(";")) {
      m.endLine = peek().line;
      next();
      return m;
    }
    expectPunct("{");
    m.body.emplace();
    while (!isPunct("}")) m.body->push_back(parseStmt());
    m.endLine = peek().line;
    next();
    return m;
  }

  Stmt parseStmt() {
    Stmt s;
    s.pos = here();
    if (isKeyword("let")) {
      next();
      s.kind = Stmt::Kind::Let;
      s.name = expectIdent("variable name");
      expectPunct("=");
      s.value = parseExpr();
    } else if (isKeyword("return")) {
      next();
      s.kind = Stmt::Kind::Return;
      if (!isPunct(";")) s.value = parseExpr();
    } else if (isKeyword("this") && isPunct(".", 1) && peek(2).kind == Token::Kind::Ident && isPunct("=", 3)) {
      next();
      next();
      s.kind = Stmt::Kind::FieldAssign;
      s.name = next().text;
      next();
      s.value = parseExpr();
    } else if (peek().kind == Token::Kind::Ident && isPunct("=", 1)) {
      s.kind = Stmt::Kind::Assign;
      s.name = next().text;
      next();
      s.value = parseExpr();
    } else {
      s.kind = Stmt::Kind::Eval;
      s.value = parseExpr();
      if (s.value->kind != Expr::Kind::Call) throw ParseError(file_, s.pos.line, s.pos.col, "expression statement must be a call");
    }
    expectPunct(";");
    return s;
  }

  Expr parseExpr() {
    Expr lhs = parsePostfix();
    while (isPunct("+")) {
      Expr add;
      add.kind = Expr::Kind::Add;
      add.pos = here();
      next();
      add.args.push_back(std::move(lhs));
      add.args.push_back(parsePostfix());
      lhs = std::move(add);
    }
    return lhs;
  }

  std::vector<Expr> parseArgs() {
    std::vector<Expr> args;
    expectPunct("(");
    while (!isPunct(")")) {
      if (!args.empty()) expectPunct(",");
      args.push_back(parseExpr());
    }
    next();
    return args;
  }

  Expr parsePostfix() {
    Expr e = parsePrimary();
    while (isPunct(".")) {
      next();
      Pos p = here();
      std::string member = expectIdent("member name");
      if (isPunct("(")) {
        Expr call;
        call.kind = Expr::Kind::Call;
        call.name = member;
        call.pos = p;
        call.recv = std::make_unique<Expr>(std::move(e));
        call.args = parseArgs();
        e = std::move(call);
      } else if (e.kind == Expr::Kind::This) {
        Expr fr;
        fr.kind = Expr::Kind::FieldRead;
        fr.name = member;
        fr.pos = p;
        e = std::move(fr);
      } else {
        throw ParseError(file_, p.line, p.col, "field access is only supported on 'this'");
      }
    }
    return e;
  }

  Expr parsePrimary() {
    Expr e;
    e.pos = here();
    const Token& t = peek();
    if (t.kind == Token::Kind::Str) {
      e.kind = Expr::Kind::StrLit;
      e.name = next().text;
    } else if (t.kind == Token::Kind::Int) {
      e.kind = Expr::Kind::IntLit;
      e.name = next().text;
    } else if (isPunct("(")) {
      next();
      e = parseExpr();
      expectPunct(")");
    } else if (isKeyword("this")) {
      next();
      e.kind = Expr::Kind::This;
    } else if (isKeyword("true") || isKeyword("false")) {
      e.kind = Expr::Kind::BoolLit;
      e.name = next().text;
    } else if (isKeyword("new")) {
      next();
      e.kind = Expr::Kind::New;
      e.name = parseTypeName();
      expectPunct("(");
      expectPunct(")");
    } else if (t.kind == Token::Kind::Ident) {
      e.name = next().text;
      if (isPunct("(")) {
        e.kind = Expr::Kind::Call;
        e.args = parseArgs();
      } else {
        e.kind = Expr::Kind::Name;
      }
    } else {
      fail(t, "expected expression");
    }
    return e;
  }

  const std::string& file_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Resolution and flow generation

std::string typeId(const std::string& qname) { return "type:" + qname; }

struct MethodInfo {
  const MethodAst* ast = nullptr;
  std::string typeQName;
  std::string name;
  std::vector<std::string> params; // type ids
  std::string returnType;          // type id or kVoid
  std::string sigId;
  std::optional<std::string> defId;
};

struct TypeInfo {
  const TypeAst* ast = nullptr;
  const FileAst* file = nullptr;
  std::string qname;
  std::optional<std::string> super; // qualified name
  std::map<std::string, std::string> fieldTypes; // name -> type id
  std::vector<MethodInfo> methods;
  std::vector<std::string> subtypes; // direct
};

class Extractor {
public:
  ProgramModel run(const std::vector<SourceFile>& files) {
    for (const auto& f : files) {
      Lexer lx(f.path, f.text);
      Parser p(f.path, lx.run());
      files_.push_back(p.parseFile());
    }
    declareTypes();
    resolveSupertypes();
    declareMembers();
    for (auto& [q, t] : types_)
      for (auto& m : t.methods)
        if (m.defId) lowerBody(t, m);
    return assemble();
  }

private:
  std::vector<FileAst> files_;
  std::map<std::string, TypeInfo> types_;
  std::set<std::string> methodNames_;
  std::map<std::string, MethodSignature> signatures_;
  std::vector<MethodDefinition> definitions_;
  std::vector<FieldDecl> fields_;
  std::set<CallEdge> calls_;
  std::map<std::tuple<FlowKind, FlowEndpoint, FlowEndpoint>, std::string> edges_;
  std::map<std::string, std::vector<std::string>> localTypes_; // def -> ordinal -> type id

  [[noreturn]] static void fail(const std::string& file, Pos p, const std::string& msg) {
    throw ParseError(file, p.line, p.col, msg);
  }

  static bool isBuiltin(const std::string& n) {
    return std::find(kBuiltinTypes.begin(), kBuiltinTypes.end(), n) != kBuiltinTypes.end();
  }

  void declareTypes() {
    for (const auto& f : files_)
      for (const auto& t : f.types) {
        std::string q = f.package.empty() ? t.name : f.package + "." + t.name;
        if (isBuiltin(q)) fail(f.path, t.pos, "type '" + q + "' clashes with a builtin type");
        if (types_.count(q)) fail(f.path, t.pos, "duplicate type '" + q + "'");
        TypeInfo info;
        info.ast = &t;
        info.file = &f;
        info.qname = q;
        types_.emplace(q, std::move(info));
      }
  }

  // Returns a type id, or kVoid when allowed.
  std::string resolveType(const std::string& name, const FileAst& file, Pos p, bool allowVoid = false) {
    if (name == "void") {
      if (!allowVoid) fail(file.path, p, "'void' is only allowed as a return type");
      return std::string(kVoid);
    }
    if (types_.count(name)) return typeId(name);
    if (!file.package.empty() && types_.count(file.package + "." + name)) return typeId(file.package + "." + name);
    if (isBuiltin(name)) {
      return typeId(name);
    }
    std::vector<std::string> hits;
    for (const auto& [q, t] : types_)
      if (t.ast->name == name) hits.push_back(q);
    if (hits.size() == 1) return typeId(hits.front());
    if (hits.empty()) fail(file.path, p, "unresolved type '" + name + "'");
    fail(file.path, p, "ambiguous type '" + name + "'");
  }

  static std::string qnameOf(const std::string& tid) { return tid.substr(5); }

  void resolveSupertypes() {
    for (auto& [q, t] : types_) {
      if (!t.ast->extends) continue;
      std::string sid = resolveType(*t.ast->extends, *t.file, t.ast->extendsPos);
      std::string sq = qnameOf(sid);
      if (!types_.count(sq)) fail(t.file->path, t.ast->extendsPos, "cannot extend builtin type '" + sq + "'");
      t.super = sq;
      types_.at(sq).subtypes.push_back(q);
    }
    for (const auto& [q, t] : types_) {
      std::set<std::string> seen{q};
      for (auto s = t.super; s; s = types_.at(*s).super)
        if (!seen.insert(*s).second) fail(t.file->path, t.ast->pos, "cyclic inheritance involving '" + q + "'");
    }
  }

  std::string displayType(const std::string& tid) const { return tid == kVoid ? "void" : qnameOf(tid); }

  void declareMembers() {
    for (auto& [q, t] : types_) {
      for (const auto& f : t.ast->fields) {
        if (t.fieldTypes.count(f.name)) fail(t.file->path, f.pos, "duplicate field '" + f.name + "'");
        std::string ft = resolveType(f.type, *t.file, f.pos);
        t.fieldTypes[f.name] = ft;
        fields_.push_back({"field:" + q + "." + f.name, f.name, typeId(q), ft});
      }
      for (const auto& m : t.ast->methods) {
        MethodInfo mi;
        mi.ast = &m;
        mi.typeQName = q;
        mi.name = m.name;
        std::set<std::string> pnames;
        for (const auto& p : m.params) {
          if (!pnames.insert(p.name).second) fail(t.file->path, p.pos, "duplicate parameter '" + p.name + "'");
          mi.params.push_back(resolveType(p.type, *t.file, p.pos));
        }
        mi.returnType = resolveType(m.returnType, *t.file, m.returnPos, true);
        for (const auto& other : t.methods)
          if (other.name == mi.name && other.params == mi.params)
            fail(t.file->path, m.pos, "duplicate method '" + m.name + "' with the same parameter types");
        std::string plist;
        for (std::size_t i = 0; i < mi.params.size(); ++i) plist += (i ? "," : "") + displayType(mi.params[i]);
        mi.sigId = "sig:" + m.name + "(" + plist + "):" + displayType(mi.returnType);
        methodNames_.insert(m.name);
        signatures_.try_emplace(mi.sigId, MethodSignature{mi.sigId, "name:" + m.name, mi.params, mi.returnType});
        if (m.body) {
          mi.defId = "def:" + q + "." + m.name + "(" + plist + "):" + displayType(mi.returnType);
          definitions_.push_back({*mi.defId, mi.sigId, typeId(q), {t.file->path, m.pos.line, m.endLine}});
        }
        t.methods.push_back(std::move(mi));
      }
    }
    // An override must keep the return type of the method it overrides.
    for (const auto& [q, t] : types_)
      for (const auto& m : t.methods)
        for (auto s = t.super; s; s = types_.at(*s).super)
          for (const auto& sm : types_.at(*s).methods)
            if (sm.name == m.name && sm.params == m.params && sm.returnType != m.returnType)
              fail(t.file->path, m.ast->pos, "override of '" + m.name + "' changes the return type");
  }

  bool isSubtype(const std::string& sub, const std::string& sup) const {
    if (sub == sup) return true;
    std::string q = qnameOf(sub);
    auto it = types_.find(q);
    if (it == types_.end()) return false;
    for (auto s = it->second.super; s; s = types_.at(*s).super)
      if (typeId(*s) == sup) return true;
    return false;
  }

  // Nearest visible method declarations for `name` on type q (own first, then
  // inherited ones not hidden by a nearer declaration with equal parameters).
  std::vector<const MethodInfo*> visibleMethods(const std::string& q, const std::string& name) const {
    std::vector<const MethodInfo*> out;
    for (std::optional<std::string> cur = q; cur; cur = types_.at(*cur).super)
      for (const auto& m : types_.at(*cur).methods) {
        if (m.name != name) continue;
        bool hidden = std::any_of(out.begin(), out.end(), [&](const MethodInfo* o) { return o->params == m.params; });
        if (!hidden) out.push_back(&m);
      }
    return out;
  }

  void collectOverrides(const std::string& q, const MethodInfo& m, std::set<std::string>& out) const {
    for (const auto& sub : types_.at(q).subtypes) {
      for (const auto& sm : types_.at(sub).methods)
        if (sm.name == m.name && sm.params == m.params && sm.defId) out.insert(*sm.defId);
      collectOverrides(sub, m, out);
    }
  }

  struct Resolved {
    const MethodInfo* method = nullptr;
    std::set<std::string> targets;
  };

  Resolved resolveCall(const std::string& recvQ, bool dispatch, const Expr& call, const std::vector<std::string>& argTypes,
                       const std::string& file) {
    auto visible = visibleMethods(recvQ, call.name);
    if (visible.empty()) fail(file, call.pos, "unresolved method '" + call.name + "' on type '" + recvQ + "'");
    std::vector<const MethodInfo*> applicable, exact;
    for (const MethodInfo* m : visible) {
      if (m->params.size() != argTypes.size()) continue;
      bool ok = true, same = true;
      for (std::size_t i = 0; i < argTypes.size(); ++i) {
        ok = ok && isSubtype(argTypes[i], m->params[i]);
        same = same && argTypes[i] == m->params[i];
      }
      if (ok) applicable.push_back(m);
      if (ok && same) exact.push_back(m);
    }
    const MethodInfo* chosen = nullptr;
    if (exact.size() == 1) chosen = exact.front();
    else if (exact.empty() && applicable.size() == 1) chosen = applicable.front();
    else if (applicable.empty()) fail(file, call.pos, "no overload of '" + call.name + "' accepts the given arguments");
    else fail(file, call.pos, "ambiguous call to '" + call.name + "'");

    Resolved r;
    r.method = chosen;
    // Nearest definition along the receiver's ancestry, then overrides below it.
    for (std::optional<std::string> cur = recvQ; cur; cur = types_.at(*cur).super) {
      auto& ms = types_.at(*cur).methods;
      auto it = std::find_if(ms.begin(), ms.end(), [&](const MethodInfo& m) {
        return m.name == chosen->name && m.params == chosen->params && m.defId;
      });
      if (it != ms.end()) {
        r.targets.insert(*it->defId);
        break;
      }
    }
    if (dispatch) collectOverrides(recvQ, *chosen, r.targets);
    return r;
  }

  // Per-body lowering state.
  struct Body {
    TypeInfo* type;
    MethodInfo* method;
    std::string def;
    std::map<std::string, std::pair<FlowEndpoint, std::string>> vars; // name -> endpoint, type id
    int site = 0;
  };

  struct Value {
    std::string type; // type id or kVoid
    std::set<FlowEndpoint> sources;
  };

  FlowEndpoint newLocal(Body& b, const std::string& type) {
    auto& lt = localTypes_[b.def];
    lt.push_back(type);
    return FlowEndpoint::local(b.def, static_cast<int>(lt.size()) - 1);
  }

  std::string endpointType(const FlowEndpoint& e) const {
    switch (e.kind) {
    case FlowEndpoint::Kind::Field:
      for (const auto& f : fields_)
        if (f.id == e.ref) return f.type;
      break;
    case FlowEndpoint::Kind::Local: return localTypes_.at(e.ref).at(e.index);
    case FlowEndpoint::Kind::Param:
    case FlowEndpoint::Kind::Return:
      for (const auto& d : definitions_)
        if (d.id == e.ref) {
          const auto& s = signatures_.at(d.signature);
          return e.kind == FlowEndpoint::Kind::Param ? s.params.at(e.index) : s.returnType;
        }
      break;
    }
    return {};
  }

  void addEdge(FlowKind kind, const FlowEndpoint& from, const FlowEndpoint& to, const std::string& type) {
    if (from == to) return;
    edges_.emplace(std::tuple{kind, from, to}, type);
  }

  void requireAssignable(const std::string& from, const std::string& to, const std::string& file, Pos p) {
    if (from == kVoid) fail(file, p, "void value used");
    if (!isSubtype(from, to))
      fail(file, p, "type '" + displayType(from) + "' is not assignable to '" + displayType(to) + "'");
  }

  Value eval(Body& b, const Expr& e) {
    const std::string& file = b.type->file->path;
    switch (e.kind) {
    case Expr::Kind::StrLit: return {typeId("String"), {}};
    case Expr::Kind::IntLit: return {typeId("int"), {}};
    case Expr::Kind::BoolLit: return {typeId("bool"), {}};
    case Expr::Kind::This: return {typeId(b.type->qname), {}};
    case Expr::Kind::New: {
      std::string t = resolveType(e.name, *b.type->file, e.pos);
      return {t, {}};
    }
    case Expr::Kind::Name: {
      auto it = b.vars.find(e.name);
      if (it == b.vars.end()) fail(file, e.pos, "unknown variable '" + e.name + "'");
      return {it->second.second, {it->second.first}};
    }
    case Expr::Kind::FieldRead: {
      auto [owner, ft] = findField(b.type->qname, e.name);
      if (!owner) fail(file, e.pos, "unknown field '" + e.name + "'");
      return {ft, {FlowEndpoint::field("field:" + *owner + "." + e.name)}};
    }
    case Expr::Kind::Add: {
      Value l = eval(b, e.args[0]);
      Value r = eval(b, e.args[1]);
      if (l.type == kVoid || r.type == kVoid) fail(file, e.pos, "void value used");
      l.sources.insert(r.sources.begin(), r.sources.end());
      return l;
    }
    case Expr::Kind::Call: return evalCall(b, e);
    }
    return {};
  }

  std::pair<std::optional<std::string>, std::string> findField(const std::string& q, const std::string& name) const {
    for (std::optional<std::string> cur = q; cur; cur = types_.at(*cur).super) {
      const auto& ft = types_.at(*cur).fieldTypes;
      if (auto it = ft.find(name); it != ft.end()) return {*cur, it->second};
    }
    return {std::nullopt, {}};
  }

  Value evalCall(Body& b, const Expr& e) {
    const std::string& file = b.type->file->path;
    std::string recvQ = b.type->qname;
    bool dispatch = true;
    if (e.recv) {
      if (e.recv->kind == Expr::Kind::Name && !b.vars.count(e.recv->name)) {
        std::string t = resolveType(e.recv->name, *b.type->file, e.recv->pos);
        recvQ = qnameOf(t);
        dispatch = false;
        if (!types_.count(recvQ)) fail(file, e.pos, "unresolved method '" + e.name + "' on builtin type '" + recvQ + "'");
      } else {
        Value rv = eval(b, *e.recv);
        if (rv.type == kVoid) fail(file, e.recv->pos, "void value used as receiver");
        recvQ = qnameOf(rv.type);
        if (!types_.count(recvQ)) fail(file, e.pos, "unresolved method '" + e.name + "' on builtin type '" + recvQ + "'");
      }
    }
    std::vector<Value> args;
    std::vector<std::string> argTypes;
    for (const auto& a : e.args) {
      args.push_back(eval(b, a));
      if (args.back().type == kVoid) fail(file, a.pos, "void value used as argument");
      argTypes.push_back(args.back().type);
    }
    Resolved r = resolveCall(recvQ, dispatch, e, argTypes, file);
    const MethodInfo& m = *r.method;

    // Field reads passed as arguments are first copied into a local.
    for (auto& a : args) {
      std::set<FlowEndpoint> srcs;
      for (const auto& s : a.sources) {
        if (s.kind != FlowEndpoint::Kind::Field) {
          srcs.insert(s);
          continue;
        }
        std::string ft = endpointType(s);
        FlowEndpoint tmp = newLocal(b, ft);
        addEdge(FlowKind::Intra, s, tmp, ft);
        srcs.insert(tmp);
      }
      a.sources = std::move(srcs);
    }

    int site = b.site++;
    for (const auto& target : r.targets) {
      calls_.insert({b.def, target, site});
      for (std::size_t k = 0; k < args.size(); ++k)
        for (const auto& s : args[k].sources)
          addEdge(FlowKind::ParamPass, s, FlowEndpoint::param(target, static_cast<int>(k)), m.params[k]);
    }
    if (m.returnType == kVoid) return {std::string(kVoid), {}};
    FlowEndpoint result = newLocal(b, m.returnType);
    for (const auto& target : r.targets) addEdge(FlowKind::ReturnFlow, FlowEndpoint::returnOf(target), result, m.returnType);
    return {m.returnType, {result}};
  }

  void flowInto(const Value& v, const FlowEndpoint& to) {
    for (const auto& s : v.sources) addEdge(FlowKind::Intra, s, to, endpointType(s));
  }

  void lowerBody(TypeInfo& t, MethodInfo& m) {
    Body b{&t, &m, *m.defId, {}, 0};
    localTypes_[b.def];
    const std::string& file = t.file->path;
    for (std::size_t k = 0; k < m.params.size(); ++k)
      b.vars[m.ast->params[k].name] = {FlowEndpoint::param(b.def, static_cast<int>(k)), m.params[k]};
    for (const auto& s : *m.ast->body) {
      switch (s.kind) {
      case Stmt::Kind::Let: {
        if (b.vars.count(s.name)) fail(file, s.pos, "redeclaration of '" + s.name + "'");
        Value v = eval(b, *s.value);
        if (v.type == kVoid) fail(file, s.value->pos, "void value used");
        FlowEndpoint local = newLocal(b, v.type);
        flowInto(v, local);
        b.vars[s.name] = {local, v.type};
        break;
      }
      case Stmt::Kind::Assign: {
        auto it = b.vars.find(s.name);
        if (it == b.vars.end()) fail(file, s.pos, "unknown variable '" + s.name + "'");
        if (it->second.first.kind != FlowEndpoint::Kind::Local) fail(file, s.pos, "cannot assign to parameter '" + s.name + "'");
        Value v = eval(b, *s.value);
        requireAssignable(v.type, it->second.second, file, s.value->pos);
        flowInto(v, it->second.first);
        break;
      }
      case Stmt::Kind::FieldAssign: {
        auto [owner, ft] = findField(t.qname, s.name);
        if (!owner) fail(file, s.pos, "unknown field '" + s.name + "'");
        Value v = eval(b, *s.value);
        requireAssignable(v.type, ft, file, s.value->pos);
        flowInto(v, FlowEndpoint::field("field:" + *owner + "." + s.name));
        break;
      }
      case Stmt::Kind::Return: {
        if (!s.value) {
          if (m.returnType != kVoid) fail(file, s.pos, "missing return value");
          break;
        }
        if (m.returnType == kVoid) fail(file, s.pos, "void method returns a value");
        Value v = eval(b, *s.value);
        requireAssignable(v.type, m.returnType, file, s.value->pos);
        flowInto(v, FlowEndpoint::returnOf(b.def));
        break;
      }
      case Stmt::Kind::Eval: eval(b, *s.value); break;
      }
    }
  }

  ProgramModel assemble() {
    ProgramParts parts;
    for (const auto& [q, t] : types_) {
      TypeDecl d;
      d.id = typeId(q);
      d.qualifiedName = q;
      if (t.super) d.supertype = typeId(*t.super);
      for (const auto& f : t.ast->fields) d.fields.push_back("field:" + q + "." + f.name);
      for (const auto& m : t.methods)
        if (m.defId) d.definitions.push_back(*m.defId);
      parts.types.push_back(std::move(d));
    }
    for (const auto& n : methodNames_) parts.methodNames.push_back({"name:" + n, n});
    for (const auto& [id, s] : signatures_) parts.signatures.push_back(s);
    parts.definitions = definitions_;
    parts.fields = fields_;
    parts.calls.assign(calls_.begin(), calls_.end());

    // Builtins are materialised only when something refers to them.
    std::set<std::string> referenced;
    auto note = [&](const std::string& tid) {
      if (tid != kVoid) referenced.insert(tid);
    };
    for (const auto& s : parts.signatures) {
      for (const auto& p : s.params) note(p);
      note(s.returnType);
    }
    for (const auto& f : parts.fields) note(f.type);
    for (const auto& [key, type] : edges_) note(type);
    for (const auto& b : kBuiltinTypes)
      if (referenced.count(typeId(b))) parts.types.push_back({typeId(b), b, std::nullopt, {}, {}});

    int n = 0;
    for (const auto& [key, type] : edges_) {
      char id[16];
      std::snprintf(id, sizeof id, "df%05d", ++n);
      parts.flows.push_back({id, std::get<0>(key), std::get<1>(key), std::get<2>(key), type});
    }
    return ProgramModel::build(std::move(parts));
  }
};

} // namespace

ProgramModel extract_pm(const std::vector<SourceFile>& files) {
  Extractor x;
  return x.run(files);
}

std::vector<SourceFile> read_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw NotFoundError("corpus directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".mini") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<SourceFile> out;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    out.push_back({fs::relative(p, dir).generic_string(), ss.str()});
  }
  return out;
}

} // namespace flowmap::pm

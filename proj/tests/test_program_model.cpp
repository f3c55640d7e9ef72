#include "flowmap/error.h"
#include "flowmap/frontend.h"
#include "flowmap/pm_json.h"
#include "flowmap/program_model.h"
#include "flowmap/signature_pattern.h"

#include "support.h"

#include <doctest.h>

#include <algorithm>

using namespace flowmap;
using namespace flowmap::pm;

namespace {

const char* kSnippet = R"(package p;

type A {
  field f: String;
  def id(x: String): String {
    return x;
  }
  def run(s: String): void {
    let y = this.id(s);
    this.f = y;
    B.sink(this.f);
  }
}

type B {
  def sink(v: String): void {
  }
}

type C extends A {
  def id(x: String): String {
    return "c";
  }
}
)";

const std::string kId = "def:p.A.id(String):String";
const std::string kRun = "def:p.A.run(String):void";
const std::string kSink = "def:p.B.sink(String):void";
const std::string kOverride = "def:p.C.id(String):String";

bool hasEdge(const ProgramModel& pm, FlowKind kind, const FlowEndpoint& from, const FlowEndpoint& to) {
  return std::any_of(pm.flows().begin(), pm.flows().end(),
                     [&](const DataFlowEdge& e) { return e.kind == kind && e.from == from && e.to == to; });
}

ParseError extractFailure(const std::string& text) {
  try {
    extract_pm(std::vector<SourceFile>{{"x/Bad.mini", text}});
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a parse error");
  throw std::logic_error("unreachable");
}

} // namespace

TEST_CASE("extraction lowers calls, returns and fields into data-flow edges") {
  auto pm = testsupport::pmFromText(kSnippet, "p/A.mini");
  CHECK(pm->definitions().size() == 4);
  CHECK(pm->flows().size() == 9);
  CHECK(pm->qualifiedSignature(kRun) == "p.A.run(String):void");
  CHECK(pm->definition(kId)->loc == SourceLocation{"p/A.mini", 5, 7});

  auto run0 = FlowEndpoint::param(kRun, 0);
  CHECK(hasEdge(*pm, FlowKind::ParamPass, run0, FlowEndpoint::param(kId, 0)));
  // Dynamic dispatch reaches the override as well.
  CHECK(hasEdge(*pm, FlowKind::ParamPass, run0, FlowEndpoint::param(kOverride, 0)));
  CHECK(hasEdge(*pm, FlowKind::ReturnFlow, FlowEndpoint::returnOf(kId), FlowEndpoint::local(kRun, 0)));
  CHECK(hasEdge(*pm, FlowKind::Intra, FlowEndpoint::param(kId, 0), FlowEndpoint::returnOf(kId)));
  CHECK(hasEdge(*pm, FlowKind::Intra, FlowEndpoint::local(kRun, 1), FlowEndpoint::field("field:p.A.f")));
  // A field argument is copied into a temporary first.
  CHECK(hasEdge(*pm, FlowKind::Intra, FlowEndpoint::field("field:p.A.f"), FlowEndpoint::local(kRun, 2)));
  CHECK(hasEdge(*pm, FlowKind::ParamPass, FlowEndpoint::local(kRun, 2), FlowEndpoint::param(kSink, 0)));
  // The override's constant return carries nothing.
  CHECK(pm->edgesInto(FlowEndpoint::returnOf(kOverride)).empty());

  auto calls = pm->callsFrom(kRun);
  REQUIRE(calls.size() == 3);
  CHECK(calls[0]->site == 0);
  CHECK(pm->typeByQualifiedName("p.C")->supertype == "type:p.A");
  CHECK(pm->typeName(std::string(kVoid)) == "void");
}

TEST_CASE("flow queries over a definition set") {
  auto pm = testsupport::pmFromText(kSnippet, "p/A.mini");
  DefSet run{kRun};
  auto in = in_flows(*pm, run);
  CHECK(in == EdgeSet{"df00004", "df00005"});
  auto out = out_flows(*pm, run);
  CHECK(out == EdgeSet{"df00001", "df00002", "df00003"});
  // The sink argument is reachable from both call results through the field.
  CHECK(reachable_bwd(*pm, "df00003", in, run) == EdgeSet{"df00004", "df00005"});
  CHECK(reachable_bwd(*pm, "df00001", in, run).empty());
  CHECK(communicated_type(*pm, "df00003") == "type:String");
  CHECK_THROWS_AS(in_flows(*pm, DefSet{"def:missing"}), NotFoundError);
}

TEST_CASE("extraction reports source positions") {
  auto e = extractFailure("package x;\ntype T {\n  def m(): Missing {\n    return 1;\n  }\n}\n");
  CHECK(e.file() == "x/Bad.mini");
  CHECK(e.line() == 3);
  e = extractFailure("package x;\ntype T {\n  def m(a: String): int {\n    return a;\n  }\n}\n");
  CHECK(e.line() == 4);
  e = extractFailure("package x;\ntype T {\n  def m(): void {\n    other.call();\n  }\n}\n");
  CHECK(e.line() == 4);
  CHECK_THROWS_AS(extract_pm(std::vector<SourceFile>{{"a.mini", "package x;\ntype T {\n"}}), ParseError);
}

TEST_CASE("program model JSON round-trips byte for byte") {
  for (const char* corpus : {"securestore", "vault"}) {
    CAPTURE(corpus);
    auto pm = extract_pm(testsupport::corpusDir(corpus) / "src");
    std::string bytes = save_pm(pm);
    auto back = load_pm(bytes);
    CHECK(back == pm);
    CHECK(save_pm(back) == bytes);
  }
}

TEST_CASE("load_pm rejects malformed documents") {
  auto pm = testsupport::pmFromText(kSnippet, "p/A.mini");
  auto j = io::parse_json(save_pm(*pm));
  CHECK_THROWS_AS(load_pm("{"), SchemaError);
  CHECK_THROWS_AS(load_pm("[]"), SchemaError);

  auto extra = j;
  extra["extra"] = 1;
  CHECK_THROWS_AS(load_pm(extra.dump()), SchemaError);

  auto missing = j;
  missing.erase("calls");
  CHECK_THROWS_AS(load_pm(missing.dump()), SchemaError);

  auto dangling = j;
  dangling["calls"][0]["callee"] = "def:nowhere";
  CHECK_THROWS_AS(load_pm(dangling.dump()), SchemaError);

  auto wrongType = j;
  wrongType["calls"][0]["site"] = "zero";
  CHECK_THROWS_AS(load_pm(wrongType.dump()), SchemaError);

  auto badKind = j;
  badKind["flows"][0]["kind"] = "SIDEWAYS";
  CHECK_THROWS_AS(load_pm(badKind.dump()), SchemaError);
}

TEST_CASE("endpoint encoding round-trips") {
  for (const auto& e : {FlowEndpoint::param(kRun, 1), FlowEndpoint::returnOf(kId), FlowEndpoint::field("field:p.A.f"),
                        FlowEndpoint::local(kRun, 3)})
    CHECK(FlowEndpoint::decode(e.encode()) == e);
  CHECK(FlowEndpoint::param(kRun, 0).encode() == "param:" + kRun + ":0");
  CHECK_FALSE(FlowEndpoint::field("field:p.A.f").owner());
}

TEST_CASE("signature patterns") {
  auto p = SignaturePattern::parse("*.read*(..):*");
  CHECK(p.matches("storage.SecureCache.read(String):storage.CryptoText"));
  CHECK(p.matches("storage.Console.readPassword():storage.PasswordExt"));
  CHECK_FALSE(p.matches("storage.Blob.content():String"));

  auto exact = SignaturePattern::parse("crypto.Aes.encrypt(String,String):String");
  CHECK(exact.matches("crypto.Aes.encrypt(String,String):String"));
  CHECK_FALSE(exact.matches("crypto.Aes.encrypt(String):String"));

  auto params = SignaturePattern::parse("*.m(*,int):void");
  CHECK(params.matches("a.B.m(String,int):void"));
  CHECK_FALSE(params.matches("a.B.m(int):void"));

  CHECK(glob_match("a*c", "abbbc"));
  CHECK(glob_match("*", ""));
  CHECK_FALSE(glob_match("a*c", "abd"));

  try {
    SignaturePattern::parse("Foo.bar", "list", 4);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 8);
  }
  auto list = parse_pattern_list("# sinks\n\n*.print(..):*\n  *.log(..):* \n");
  REQUIRE(list.size() == 2);
  CHECK(list[1].text() == "*.log(..):*");
}

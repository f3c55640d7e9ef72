#include "flowmap/error.h"
#include "flowmap/io.h"

#include "support.h"

#include <doctest.h>

#include <cctype>

using namespace flowmap;
using namespace flowmap::io;

namespace {

mapping::MappingState iterated(const std::string& corpus, const std::string& model) {
  auto pm = std::make_shared<const pm::ProgramModel>(pm::extract_pm(testsupport::corpusDir(corpus) / "src"));
  mapping::MappingState st({testsupport::loadModel(testsupport::corpusDir(corpus) / (model + ".secdfd"))}, pm);
  mapping::run_iteration(st);
  return st;
}

mapping::MappingState reload(const mapping::MappingState& st, const Json& j) {
  return mapping_state_from_json(j, st.models(), st.pmPtr());
}

} // namespace

TEST_CASE("canonical JSON sorts keys and ends with a newline") {
  Json j = {{"b", 1}, {"a", {{"d", true}, {"c", nullptr}}}};
  CHECK(canonical(j) == "{\n  \"a\": {\n    \"c\": null,\n    \"d\": true\n  },\n  \"b\": 1\n}\n");
  CHECK(canonical(parse_json(canonical(j))) == canonical(j));
  try {
    parse_json("{\"a\": ", "x.json");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("x.json") != std::string::npos);
  }
}

TEST_CASE("stable ids hash the canonical body") {
  // Published FNV-1a 64-bit test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);

  auto id = stable_id("v", {{"k", 1}, {"p", "x"}});
  REQUIRE(id.size() == 17);
  CHECK(id[0] == 'v');
  for (char c : id.substr(1)) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  CHECK(stable_id("v", {{"p", "x"}, {"k", 1}}) == id);
  CHECK(stable_id("v", {{"k", 2}, {"p", "x"}}) != id);
}

TEST_CASE("mapping state survives a JSON round-trip") {
  for (auto [corpus, model] : {std::pair{"securestore", "securestore"}, std::pair{"vault", "vault"}}) {
    CAPTURE(corpus);
    auto st = iterated(corpus, model);
    REQUIRE_FALSE(st.entries().empty());
    mapping::decide(st, st.entries().front().id, mapping::Decision::Accept);
    mapping::decide(st, st.entries().back().id, mapping::Decision::Reject);
    mapping::run_iteration(st);

    auto j = to_json(st);
    auto back = reload(st, j);
    CHECK(back == st);
    CHECK(canonical(to_json(back)) == canonical(j));
    CHECK(back.iteration() == st.iteration());
    CHECK(back.nextId() == st.nextId());
  }
}

TEST_CASE("mapping state loading is strict") {
  auto st = iterated("securestore", "securestore");
  auto good = to_json(st);
  REQUIRE_FALSE(good["entries"].empty());

  auto extra = good;
  extra["surprise"] = 1;
  CHECK_THROWS_AS(reload(st, extra), SchemaError);

  auto noWeights = good;
  noWeights.erase("weights");
  CHECK_THROWS_AS(reload(st, noWeights), SchemaError);

  auto badKind = good;
  badKind["entries"][0]["kind"] = "SOMETHING";
  CHECK_THROWS_AS(reload(st, badKind), SchemaError);

  auto badDfd = good;
  badDfd["entries"][0]["dfd"] = "securestore/Nowhere";
  CHECK_THROWS_AS(reload(st, badDfd), SchemaError);

  auto badPm = good;
  badPm["entries"][0]["pm"] = "def:nothing";
  CHECK_THROWS_AS(reload(st, badPm), SchemaError);

  auto badScore = good;
  badScore["entries"][0]["score"] = "high";
  CHECK_THROWS_AS(reload(st, badScore), SchemaError);

  auto notArray = good;
  notArray["entries"] = Json::object();
  CHECK_THROWS_AS(reload(st, notArray), SchemaError);
}

TEST_CASE("ground truth files parse and print") {
  auto path = testsupport::corpusDir("vault") / "vault.gt.json";
  auto text = testsupport::slurp(path);
  auto gt = parse_ground_truth(text, path.string());
  CHECK(gt.size() == 17);
  CHECK(parse_ground_truth(print_ground_truth(gt)) == gt);
  CHECK(std::find(gt.begin(), gt.end(), mapping::GroundTruthPair{"vault/Compose", "def:notes.Notebook.compose(notes.Title,notes.Body):notes.Note"}) != gt.end());

  CHECK_THROWS_AS(parse_ground_truth("{}"), SchemaError);
  CHECK_THROWS_AS(parse_ground_truth("[{\"dfd\": \"a/b\"}]"), SchemaError);
  CHECK_THROWS_AS(parse_ground_truth("[{\"dfd\": \"a/b\", \"pm\": \"x\", \"note\": 1}]"), SchemaError);

  auto st = testsupport::mappedCorpus("vault", "vault");
  std::size_t confirmed = 0;
  for (const auto& e : st.entries()) confirmed += e.state == mapping::EntryState::UserDefined;
  CHECK(confirmed == 17);
}

TEST_CASE("suggestion view groups entries per DFD element") {
  auto st = iterated("securestore", "securestore");
  auto suggestions = mapping::score_and_filter(st);
  REQUIRE_FALSE(suggestions.empty());
  auto rejected = suggestions.front();
  mapping::decide(st, rejected.id, mapping::Decision::Reject);
  suggestions = mapping::score_and_filter(st);

  auto view = suggestions_view(st, suggestions);
  CHECK(view["iteration"] == st.iteration());
  std::set<std::string> seen;
  std::size_t rows = 0;
  for (const auto& g : view["groups"]) {
    auto element = g["dfdElement"].get<std::string>();
    CHECK(seen.insert(element).second);
    double prev = 1e9;
    for (const auto& row : g["entries"]) {
      ++rows;
      CHECK(row["dfd"] == element);
      CHECK(row["id"] != rejected.id);
      CHECK(row["score"].get<double>() <= prev);
      prev = row["score"].get<double>();
      CHECK_FALSE(row["label"].get<std::string>().empty());
      if (row["pm"].get<std::string>().rfind("def:", 0) == 0) CHECK(row.contains("location"));
    }
  }
  std::size_t live = 0;
  for (const auto& e : suggestions) live += e.state != mapping::EntryState::Rejected;
  CHECK(rows == live);
}

TEST_CASE("finding ids depend on content only") {
  auto st = testsupport::mappedCorpus("securestore", "securestore");
  contracts::Violation v;
  v.kind = contracts::ViolationKind::AbsenceNotImplemented;
  v.process = "securestore/Decrypt_Data";
  v.contract = 0;
  v.outAsset = "secret";
  auto a = to_json(v, st.pm());
  auto b = to_json(v, st.pm());
  CHECK(a["id"] == b["id"]);
  v.outAsset = "password";
  CHECK(to_json(v, st.pm())["id"] != a["id"]);

  taint::TaintAlarm alarm{"m/x", "s", "k", {"df00001"}};
  auto aj = to_json(alarm);
  alarm.witness = {"df00002", "df00003"};
  CHECK(to_json(alarm)["id"] == aj["id"]);
  alarm.asset.reset();
  CHECK(to_json(alarm)["asset"].is_null());
  CHECK(to_json(alarm)["id"] != aj["id"]);

  auto leaks = design_leaks_json("m", {{"x", "Z", "B"}, {"y", "Z", "B"}});
  REQUIRE(leaks.size() == 2);
  CHECK(leaks[0]["id"] != leaks[1]["id"]);
  CHECK(leaks[0]["kind"] == "DESIGN_LEAK");
}

TEST_CASE("crypto lists convert to and from JSON") {
  auto text = testsupport::slurp(testsupport::corpusDir("vault") / "dual.crypto");
  auto list = contracts::CryptoList::parse(text, "dual.crypto");
  auto j = to_json(list);
  REQUIRE(j.is_array());
  CHECK(j.size() == list.entries().size());
  CHECK(to_json(crypto_list_from_json(j)) == j);
  CHECK(to_json(crypto_list_from_json(Json{{"entries", j}})) == j);

  CHECK_THROWS_AS(crypto_list_from_json(Json{{"entries", 3}}), SchemaError);
  CHECK_THROWS_AS(crypto_list_from_json(Json::array({{{"capability", "enc"}}})), SchemaError);
  CHECK_THROWS_AS(crypto_list_from_json(Json::array({{{"capability", "enc"}, {"pattern", "x"}, {"y", 1}}})),
                  SchemaError);
  CHECK_THROWS_AS(crypto_list_from_json(Json::array({{{"capability", "sideways"}, {"pattern", "*.a(..):*"}}})),
                  Error);
}

TEST_CASE("evaluation and reduction reports serialise") {
  mapping::Evaluation e{3, 1, 0, 0.75, 1.0};
  auto j = to_json(e);
  CHECK(j["tp"] == 3);
  CHECK(j["precision"] == 0.75);
  CHECK(to_json(mapping::Evaluation{})["precision"].is_null());

  taint::ReductionReport r;
  r.rows.push_back({taint::Mode::Plain, {{"m", 10}}, 10.0, std::nullopt});
  r.rows.push_back({taint::Mode::FullyOpt, {{"m", 5}}, 5.0, -50});
  auto rj = to_json(r);
  CHECK(rj["rows"][0]["change"].is_null());
  CHECK(rj["rows"][1]["change"] == "↓ 50%");
  CHECK(rj["table"].get<std::string>().find("↓ 50%") != std::string::npos);
}

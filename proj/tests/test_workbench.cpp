#include "flowmap/error.h"
#include "flowmap/workbench.h"

#include "support.h"

#include <doctest.h>

#include <thread>

using namespace flowmap;
using namespace flowmap::service;
using testsupport::TempDir;

namespace {

constexpr std::int64_t kEpoch = 1700000000;

Clock fixedClock() {
  return [] { return kEpoch; };
}

fs::path vaultSrc() { return testsupport::corpusDir("vault") / "src"; }
fs::path vaultModel() { return testsupport::corpusDir("vault") / "vault.secdfd"; }
fs::path storeSrc() { return testsupport::corpusDir("securestore") / "src"; }
fs::path storeModel() { return testsupport::corpusDir("securestore") / "securestore.secdfd"; }

mapping::GroundTruth groundTruth(const std::string& corpus) {
  auto p = testsupport::corpusDir(corpus) / (corpus + ".gt.json");
  return io::parse_ground_truth(testsupport::slurp(p), p.string());
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = testsupport::slurp(e.path());
  return out;
}

// The whole interactive loop on the vault corpus.
std::string fullPipeline(Workbench& wb) {
  auto id = wb.create_session(vaultSrc(), {vaultModel()}).id;
  auto first = wb.suggestions(id);
  auto firstEntry = first["groups"][0]["entries"][0]["id"].get<std::string>();
  wb.decide(id, firstEntry, mapping::Decision::Accept);
  wb.iterate(id);
  wb.apply_ground_truth(id, groundTruth("vault"));
  wb.iterate(id);
  for (auto k : {CheckKind::Contracts, CheckKind::Crypto, CheckKind::Design}) wb.check(id, k);
  for (auto m : {taint::Mode::Plain, taint::Mode::PartlyOpt, taint::Mode::FullyOpt}) wb.check(id, CheckKind::Taint, m);
  wb.inject(id, {contracts::InjectKind::Encrypt, contracts::InjectKind::Forward});
  return id;
}

} // namespace

TEST_CASE("utc formatting and check kinds") {
  CHECK(format_utc(0) == "1970-01-01T00:00:00Z");
  CHECK(format_utc(kEpoch) == "2023-11-14T22:13:20Z");
  for (auto k : {CheckKind::Contracts, CheckKind::Crypto, CheckKind::Design, CheckKind::Taint})
    CHECK(check_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(check_kind_from_string("lint"), InvalidArgument);
}

TEST_CASE("atomic writes replace the whole file") {
  TempDir tmp;
  auto p = tmp.path() / "a" / "b.txt";
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  CHECK(read_file(p) == "two");
  CHECK(std::distance(fs::directory_iterator(p.parent_path()), fs::directory_iterator{}) == 1);
  CHECK_THROWS_AS(read_file(tmp.path() / "missing"), NotFoundError);
}

TEST_CASE("a session persists and reloads") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto info = wb.create_session(storeSrc(), {storeModel()});
  CHECK(info.models == std::vector<std::string>{"securestore"});
  CHECK(info.createdAt == "2023-11-14T22:13:20Z");
  for (const char* f : {"session.json", "pm.json", "map.json", "list.crypto", "list.sources", "list.sinks",
                        "models/securestore.secdfd"})
    CHECK(fs::exists(wb.sessionDir(info.id) / f));

  auto view = wb.suggestions(info.id);
  CHECK_FALSE(view["groups"].empty());
  CHECK(view["iteration"] == 1);

  Workbench again(home.path(), fixedClock());
  CHECK(again.suggestions(info.id) == view);
  auto listed = again.list_sessions();
  REQUIRE(listed.size() == 1);
  CHECK(listed[0].id == info.id);

  auto s = again.load(info.id);
  CHECK_FALSE(s.crypto.entries().empty());
  CHECK_FALSE(s.sources.empty());
  CHECK_FALSE(s.sinks.empty());

  // Identical inputs get a fresh id.
  auto second = wb.create_session(storeSrc(), {storeModel()});
  CHECK(second.id == info.id + "-2");
  CHECK(wb.list_sessions().size() == 2);

  CHECK_THROWS_AS(wb.info("nope"), NotFoundError);
  CHECK_THROWS_AS(wb.info("../etc"), NotFoundError);
}

TEST_CASE("session creation reports every bad input") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto badModel = home.path() / "bad.secdfd";
  write_file_atomic(badModel, "model bad\nprocess P\nflow 1 : P -> Q carrying x\n");
  auto dupe = home.path() / "dupe.secdfd";
  write_file_atomic(dupe, testsupport::slurp(storeModel()));
  try {
    wb.create_session(storeSrc(), {storeModel(), badModel, dupe});
    FAIL("expected failure");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("2 problem") != std::string::npos);
    CHECK(e.detail().find("bad.secdfd") != std::string::npos);
    CHECK(e.detail().find("duplicate model name") != std::string::npos);
  }
  CHECK_THROWS_AS(wb.create_session(home.path() / "nowhere", {storeModel()}), NotFoundError);
  CHECK_THROWS_AS(wb.create_session(storeSrc(), {}), InvalidArgument);
  CHECK(wb.list_sessions().empty());
}

TEST_CASE("decisions survive a restart and failures leave state untouched") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto id = wb.create_session(storeSrc(), {storeModel()}).id;
  auto view = wb.suggestions(id);
  auto entry = view["groups"][0]["entries"][0]["id"].get<std::string>();
  wb.decide(id, entry, mapping::Decision::Accept);

  Workbench again(home.path(), fixedClock());
  auto s = again.load(id);
  REQUIRE(s.state.find(entry));
  CHECK(s.state.find(entry)->state == mapping::EntryState::Accepted);

  auto before = testsupport::slurp(wb.sessionDir(id) / "map.json");
  CHECK_THROWS_AS(wb.decide(id, "e-nope", mapping::Decision::Reject), NotFoundError);
  CHECK_THROWS_AS(wb.map(id, "securestore/Nowhere", "type:storage.Blob"), NotFoundError);
  CHECK_THROWS_AS(wb.map(id, "securestore/Cache", "def:nothing"), Error);
  CHECK(testsupport::slurp(wb.sessionDir(id) / "map.json") == before);

  auto mapped = wb.map(id, "securestore/Cache", "type:storage.SecureCache");
  CHECK(again.load(id).state.find(mapped["entry"].get<std::string>())->state == mapping::EntryState::UserDefined);
}

TEST_CASE("concurrent decisions are all kept") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto id = wb.create_session(storeSrc(), {storeModel()}).id;
  std::vector<std::string> ids;
  auto loaded = wb.load(id);
  for (const auto& e : loaded.state.entries())
    if (e.state == mapping::EntryState::Suggested && e.kind == mapping::EntryKind::ProcessName) ids.push_back(e.id);
  REQUIRE(ids.size() >= 2);

  std::vector<std::thread> threads;
  for (const auto& e : ids) threads.emplace_back([&, e] { wb.decide(id, e, mapping::Decision::Accept); });
  for (auto& t : threads) t.join();

  auto s = wb.load(id);
  for (const auto& e : ids) CHECK(s.state.find(e)->state == mapping::EntryState::Accepted);
}

TEST_CASE("checks dispatch and persist reports") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto id = wb.create_session(vaultSrc(), {vaultModel()}).id;

  // Optimised taint needs confirmed mappings; PLAIN does not.
  CHECK_THROWS_AS(wb.check(id, CheckKind::Taint, taint::Mode::FullyOpt), PreconditionError);
  auto plain = wb.check(id, CheckKind::Taint, taint::Mode::Plain);
  CHECK(plain.findings > 0);
  CHECK(plain.body["summary"]["rows"].size() == 1);

  wb.apply_ground_truth(id, groundTruth("vault"));
  auto contractsRep = wb.check(id, CheckKind::Contracts);
  CHECK(contractsRep.findings == 0);
  CHECK(contractsRep.body["convergences"].size() == 2);
  CHECK(contractsRep.body.contains("compliance"));
  CHECK(wb.check(id, CheckKind::Crypto).findings == 0);
  CHECK(wb.check(id, CheckKind::Design).findings == 0);
  auto fully = wb.check(id, CheckKind::Taint, taint::Mode::FullyOpt);
  CHECK(fully.body["mode"] == "FULLY_OPT");
  CHECK(fully.body["summary"]["rows"].size() == 3);
  for (const char* f : {"contracts", "crypto", "design", "taint"})
    CHECK(fs::exists(wb.sessionDir(id) / "reports" / (std::string(f) + ".json")));

  auto all = wb.violations(id)["violations"];
  CHECK(all.size() == fully.findings);
  for (const auto& v : all) CHECK(v["check"] == "taint");
}

TEST_CASE("an unmapped process shows up as an absence") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto id = wb.create_session(vaultSrc(), {vaultModel()}).id;
  mapping::GroundTruth gt;
  for (const auto& p : groundTruth("vault"))
    if (p.dfd != "vault/Show") gt.push_back(p);
  wb.apply_ground_truth(id, gt);
  auto rep = wb.check(id, CheckKind::Contracts);
  REQUIRE(rep.findings == 1);
  CHECK(rep.body["violations"][0]["kind"] == "ABSENCE_NOT_IMPLEMENTED");
  CHECK(rep.body["violations"][0]["process"] == "vault/Show");
  CHECK(wb.violations(id)["violations"][0]["id"] == rep.body["violations"][0]["id"]);
}

TEST_CASE("crypto list updates merge and persist") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto id = wb.create_session(vaultSrc(), {vaultModel()}).id;
  auto before = wb.load(id).crypto;
  CHECK(wb.update_crypto_list(id, {}) == before);

  auto extra = contracts::CryptoList::parse("both\tcrypto.Aes.encrypt(..):*\n");
  auto merged = wb.update_crypto_list(id, extra);
  CHECK(merged.entries().size() == before.entries().size() + 1);
  CHECK(wb.load(id).crypto == merged);
  CHECK(wb.update_crypto_list(id, extra) == merged);

  try {
    contracts::CryptoList::parse("enc\tcrypto.Aes\n", "update");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("evaluation and injection through the service") {
  TempDir home;
  Workbench wb(home.path(), fixedClock());
  auto id = wb.create_session(vaultSrc(), {vaultModel()}).id;
  auto gt = groundTruth("vault");
  auto initial = wb.evaluate(id, gt);
  CHECK(initial.tp + initial.fn == gt.size());

  wb.apply_ground_truth(id, gt);
  auto e = wb.evaluate(id, gt);
  CHECK(e.tp == gt.size());
  CHECK(e.fn == 0);

  auto all = contracts::parse_inject_kinds("enc,dec,fwd,join");
  auto report = wb.inject(id, all);
  CHECK(report.crypto.tp == 6);
  CHECK(report.crypto.fp == 0);
  CHECK(report.crypto.fn == 0);
  CHECK(report.processing.tp == 8);
  CHECK(report.processing.fp == 0);
  CHECK(report.processing.fn == 0);
  CHECK(fs::exists(wb.sessionDir(id) / "reports" / "inject.json"));

  // A dual-purpose entry hides the decrypt injected into the encrypting process.
  SessionOptions dual;
  dual.crypto = testsupport::corpusDir("vault") / "dual.crypto";
  auto dualId = wb.create_session(vaultSrc(), {vaultModel()}, dual).id;
  wb.apply_ground_truth(dualId, gt);
  auto dualReport = wb.inject(dualId, all);
  CHECK(dualReport.crypto.tp == 5);
  CHECK(dualReport.crypto.fn == 1);

  auto fresh = wb.create_session(storeSrc(), {storeModel()}).id;
  CHECK_THROWS_AS(wb.inject(fresh, all), PreconditionError);
}

TEST_CASE("two independent pipeline runs serialise identically") {
  TempDir a, b;
  Workbench wa(a.path(), fixedClock());
  Workbench wb(b.path(), fixedClock());
  auto ida = fullPipeline(wa);
  auto idb = fullPipeline(wb);
  CHECK(ida == idb);
  auto sa = snapshot(wa.sessionDir(ida));
  auto sb = snapshot(wb.sessionDir(idb));
  CHECK(sa.size() >= 12);
  REQUIRE(sa.size() == sb.size());
  for (const auto& [path, bytes] : sa) {
    CAPTURE(path);
    CHECK(sb.at(path) == bytes);
  }

  // Loading and re-serialising changes nothing.
  auto s = wa.load(ida);
  CHECK(io::canonical(io::to_json(s.state)) == sa.at("map.json"));
}

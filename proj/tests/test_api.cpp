#include "flowmap/api.h"

#include "support.h"

#include <doctest.h>

using namespace flowmap;
using namespace flowmap::service;
using io::Json;
using testsupport::TempDir;

namespace {

struct Fixture {
  TempDir home;
  Workbench wb{home.path(), [] { return std::int64_t{1700000000}; }};
  Api api{wb};

  std::pair<int, Json> call(const std::string& method, const std::string& path, const std::string& body = {}) {
    auto r = api.handle({method, path, body});
    return {r.status, io::parse_json(r.body)};
  }
  std::pair<int, Json> call(const std::string& method, const std::string& path, const Json& body) {
    return call(method, path, body.dump());
  }

  std::string createVault() {
    auto [status, out] = call("POST", "/api/v1/sessions",
                              Json{{"corpus", (testsupport::corpusDir("vault") / "src").string()},
                                   {"models", {(testsupport::corpusDir("vault") / "vault.secdfd").string()}}});
    REQUIRE(status == 201);
    return out["id"].get<std::string>();
  }
};

void checkError(const std::pair<int, Json>& r, int status, const std::string& code) {
  CHECK(r.first == status);
  CHECK(r.second["code"] == code);
  CHECK(r.second["message"].is_string());
  CHECK(r.second["detail"].is_string());
}

} // namespace

TEST_CASE("status codes for error kinds") {
  CHECK(status_for("not_found") == 404);
  CHECK(status_for("invalid_argument") == 400);
  CHECK(status_for("parse_error") == 400);
  CHECK(status_for("schema_error") == 400);
  CHECK(status_for("precondition_failed") == 409);
  CHECK(status_for("io_error") == 500);
}

TEST_CASE("session creation and listing") {
  Fixture f;
  auto [s0, empty] = f.call("GET", "/api/v1/sessions");
  CHECK(s0 == 200);
  CHECK(empty["sessions"].empty());

  auto id = f.createVault();
  auto [s1, list] = f.call("GET", "/api/v1/sessions");
  REQUIRE(list["sessions"].size() == 1);
  CHECK(list["sessions"][0]["id"] == id);

  auto [s2, info] = f.call("GET", "/api/v1/sessions/" + id);
  CHECK(s2 == 200);
  CHECK(info["models"] == Json::array({"vault"}));

  auto [s3, sugg] = f.call("GET", "/api/v1/sessions/" + id + "/suggestions");
  CHECK(s3 == 200);
  CHECK_FALSE(sugg["groups"].empty());

  checkError(f.call("POST", "/api/v1/sessions", Json{{"models", Json::array()}}), 400, "invalid_argument");
  checkError(f.call("POST", "/api/v1/sessions", std::string("{not json")), 400, "schema_error");
  checkError(f.call("POST", "/api/v1/sessions", std::string("[]")), 400, "invalid_argument");
  checkError(f.call("POST", "/api/v1/sessions", Json{{"corpus", "/nonexistent"}, {"models", {"x.secdfd"}}}), 404,
             "not_found");
  checkError(f.call("GET", "/api/v1/sessions/unknown"), 404, "not_found");
  checkError(f.call("GET", "/api/v2/sessions"), 404, "not_found");
  checkError(f.call("DELETE", "/api/v1/sessions/" + id), 404, "not_found");
}

TEST_CASE("decisions, manual mappings and iterations") {
  Fixture f;
  auto id = f.createVault();
  auto base = "/api/v1/sessions/" + id;
  auto [_, sugg] = f.call("GET", base + "/suggestions");
  auto entry = sugg["groups"][0]["entries"][0]["id"].get<std::string>();

  auto [s1, afterAccept] = f.call("POST", base + "/decisions", Json{{"entryId", entry}, {"decision", "accept"}});
  CHECK(s1 == 200);
  bool accepted = false;
  for (const auto& g : afterAccept["groups"])
    for (const auto& row : g["entries"])
      if (row["id"] == entry) accepted = row["state"] == "ACCEPTED";
  CHECK(accepted);

  auto before = f.call("GET", base + "/suggestions").second;
  checkError(f.call("POST", base + "/decisions", Json{{"entryId", "e-missing"}, {"decision", "reject"}}), 404,
             "not_found");
  checkError(f.call("POST", base + "/decisions", Json{{"entryId", entry}, {"decision", "maybe"}}), 400,
             "invalid_argument");
  checkError(f.call("POST", base + "/decisions", Json{{"entryId", 3}}), 400, "invalid_argument");
  CHECK(f.call("GET", base + "/suggestions").second == before);

  auto [s2, mapped] =
      f.call("POST", base + "/mappings", Json{{"dfd", "vault/Keyring"}, {"pm", "type:notes.Keyring"}});
  CHECK(s2 == 200);
  CHECK(mapped["entry"].is_string());

  auto [s3, iterated] = f.call("POST", base + "/iterate");
  CHECK(s3 == 200);
  CHECK(iterated["iteration"] == 2);
}

TEST_CASE("checks and violations") {
  Fixture f;
  auto id = f.createVault();
  auto base = "/api/v1/sessions/" + id;

  checkError(f.call("POST", base + "/checks/taint", Json{{"mode", "fully"}}), 409, "precondition_failed");
  auto [s1, plain] = f.call("POST", base + "/checks/taint");
  CHECK(s1 == 200);
  CHECK(plain["mode"] == "PLAIN");
  CHECK(plain["findings"].get<std::size_t>() == plain["alarms"].size());

  checkError(f.call("POST", base + "/checks/lint"), 400, "invalid_argument");
  checkError(f.call("POST", base + "/checks/taint", Json{{"mode", "sideways"}}), 400, "invalid_argument");

  auto [s2, design] = f.call("POST", base + "/checks/design");
  CHECK(s2 == 200);
  CHECK(design["findings"] == 0);

  // Contracts check with nothing mapped: every contract is absent.
  auto [s3, contracts] = f.call("POST", base + "/checks/contracts");
  CHECK(s3 == 200);
  CHECK(contracts["findings"].get<std::size_t>() > 0);

  auto [s4, all] = f.call("GET", base + "/violations");
  CHECK(s4 == 200);
  std::set<std::string> ids;
  for (const auto& v : all["violations"]) ids.insert(v["id"].get<std::string>());
  for (const auto& v : contracts["violations"]) CHECK(ids.count(v["id"].get<std::string>()));
}

TEST_CASE("crypto list endpoint") {
  Fixture f;
  auto id = f.createVault();
  auto base = "/api/v1/sessions/" + id + "/crypto-list";
  auto [s0, current] = f.call("GET", base);
  CHECK(s0 == 200);
  auto n = current["entries"].size();

  auto [s1, updated] =
      f.call("PUT", base, Json{{"entries", {{{"capability", "both"}, {"pattern", "crypto.Aes.encrypt(..):*"}}}}});
  CHECK(s1 == 200);
  CHECK(updated["entries"].size() == n + 1);
  CHECK(f.call("GET", base).second == updated);

  auto [s2, bad] = f.call("PUT", base, Json{{"entries", {{{"capability", "enc"}, {"pattern", "crypto.Aes"}}}}});
  CHECK(s2 == 400);
  CHECK(bad["code"] == "parse_error");
  CHECK(f.call("GET", base).second == updated);

  auto [s3, empty] = f.call("PUT", base, Json{{"entries", Json::array()}});
  CHECK(s3 == 200);
  CHECK(empty == updated);
}

#include "flowmap/error.h"
#include "flowmap/mapping.h"

#include "support.h"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace flowmap;
using namespace flowmap::mapping;

namespace {

std::shared_ptr<const pm::ProgramModel> securestorePm() {
  static auto pm = std::make_shared<const pm::ProgramModel>(pm::extract_pm(testsupport::corpusDir("securestore") / "src"));
  return pm;
}

MappingState securestoreState(const std::string& model = "securestore") {
  return MappingState({testsupport::loadModel(testsupport::corpusDir("securestore") / (model + ".secdfd"))},
                      securestorePm());
}

std::set<std::string> pmOf(const MappingState& st, const std::string& ref, EntryKind kind) {
  std::set<std::string> out;
  for (const auto* e : st.live(ref, kind)) out.insert(e->pmElement);
  return out;
}

const char* kCoupling = R"(package q;

type W {
  def load(k: String): String {
    return this.fetch(k);
  }
  def fetch(k: String): String {
    return k;
  }
  def show(v: String): void {
  }
  def run(): void {
    let v = this.load("k");
    this.show(v);
  }
}
)";

const char* kCouplingModel = R"(model c
process Loader
process Viewer
asset v : Value low from Loader to Viewer
flow 1 : Loader -> Viewer carrying v
)";

} // namespace

TEST_CASE("name matching on the securestore processes") {
  auto st = securestoreState();
  match_names(st);
  CHECK(pmOf(st, "securestore/Get_Value", EntryKind::ProcessName) == std::set<std::string>{"name:get", "name:getPassword"});
  CHECK(pmOf(st, "securestore/Get_Passwords_External", EntryKind::ProcessName) == std::set<std::string>{"name:getPassword"});
  CHECK(pmOf(st, "securestore/Put_Value", EntryKind::ProcessName) == std::set<std::string>{"name:put"});
  CHECK(pmOf(st, "securestore/Decrypt_Data", EntryKind::ProcessName) == std::set<std::string>{"name:decrypt"});
  CHECK(pmOf(st, "securestore/Cache", EntryKind::StoreType).count("type:storage.SecureCache"));
  CHECK(pmOf(st, "securestore/value", EntryKind::AssetType).count("type:String"));
  // Matching twice adds nothing.
  CHECK(match_names(st).empty());
}

TEST_CASE("signature extension follows the asset types of the process flows") {
  auto st = securestoreState("get_value_excerpt");
  match_names(st);
  REQUIRE(pmOf(st, "excerpt/secret", EntryKind::AssetType).count("type:String"));
  auto created = extend_to_signatures(st);
  auto sigs = pmOf(st, "excerpt/Get_Value", EntryKind::ProcessSignature);
  CHECK(sigs.count("sig:get(String,String):String"));
  CHECK_FALSE(sigs.count("sig:getPassword(String,storage.IPreferencesContainer,bool):storage.PasswordExt"));
  for (const auto& id : created) {
    const auto* e = st.find(id);
    REQUIRE(e);
    // Derived from the name entry and at least one asset-type entry.
    CHECK(e->derivedFrom.size() >= 2);
  }
}

TEST_CASE("definition discovery couples callers and flow endpoints") {
  auto pm = testsupport::pmFromText(kCoupling, "q/W.mini");
  MappingState st({dfd::parse_secdfd(kCouplingModel)}, pm);
  auto load = map_manually(st, "c/Loader", "sig:load(String):String");
  auto fetch = map_manually(st, "c/Loader", "sig:fetch(String):String");
  auto show = map_manually(st, "c/Viewer", "sig:show(String):void");
  discover_definitions(st);
  auto defs = pmOf(st, "c/Loader", EntryKind::ProcessDefinition);
  CHECK(defs == std::set<std::string>{"def:q.W.load(String):String", "def:q.W.fetch(String):String"});
  CHECK(pmOf(st, "c/Viewer", EntryKind::ProcessDefinition) == std::set<std::string>{"def:q.W.show(String):void"});
  const auto* e = st.findPair("c/Viewer", "def:q.W.show(String):void");
  REQUIRE(e);
  CHECK(e->derivedFrom == std::vector<std::string>{load, show});
  (void)fetch;
}

TEST_CASE("scores add the weights of the derivation closure") {
  auto pm = testsupport::pmFromText(kCoupling, "q/W.mini");
  MappingState st({dfd::parse_secdfd(kCouplingModel)}, pm);
  auto& a = st.add("c/Loader", "name:load", EntryKind::ProcessName, EntryState::Suggested, 0.8, {});
  std::string aId = a.id;
  auto& b = st.add("c/Loader", "sig:load(String):String", EntryKind::ProcessSignature, EntryState::Suggested, 0.8, {aId});
  std::string bId = b.id;
  auto& c = st.add("c/Loader", "def:q.W.load(String):String", EntryKind::ProcessDefinition, EntryState::Suggested, 0.8,
                   {bId});
  std::string cId = c.id;
  rescore(st);
  CHECK(st.find(aId)->score == doctest::Approx(0.8));
  CHECK(st.find(bId)->score == doctest::Approx(0.8 + 0.25));
  CHECK(st.find(cId)->score == doctest::Approx(0.8 + 0.25 + 0.25));
  decide(st, aId, Decision::Accept);
  CHECK(st.find(cId)->score == doctest::Approx(0.8 + 0.5 + 0.25));
  decide(st, bId, Decision::Tolerate);
  CHECK(st.find(bId)->state == EntryState::Tolerated);
  CHECK(st.find(cId)->score == doctest::Approx(0.8 + 0.5 + 0.25));
}

TEST_CASE("rejecting removes derived suggestions but keeps confirmed ones") {
  auto pm = testsupport::pmFromText(kCoupling, "q/W.mini");
  MappingState st({dfd::parse_secdfd(kCouplingModel)}, pm);
  std::string root = st.add("c/Loader", "name:load", EntryKind::ProcessName, EntryState::Suggested, 1, {}).id;
  std::string sig = st.add("c/Loader", "sig:load(String):String", EntryKind::ProcessSignature, EntryState::Suggested, 1,
                           {root})
                        .id;
  std::string def = st.add("c/Loader", "def:q.W.load(String):String", EntryKind::ProcessDefinition,
                           EntryState::Suggested, 1, {sig})
                        .id;
  std::string kept = st.add("c/Loader", "sig:fetch(String):String", EntryKind::ProcessSignature, EntryState::Accepted,
                            1, {root})
                         .id;
  std::string below = st.add("c/Loader", "def:q.W.fetch(String):String", EntryKind::ProcessDefinition,
                             EntryState::Suggested, 1, {kept})
                          .id;
  decide(st, root, Decision::Reject);
  CHECK(st.find(root)->state == EntryState::Rejected);
  CHECK_FALSE(st.find(sig));
  CHECK_FALSE(st.find(def));
  REQUIRE(st.find(kept));
  CHECK(st.find(kept)->derivedFrom.empty());
  CHECK(st.find(below));
  CHECK_THROWS_AS(decide(st, root, Decision::Accept), PreconditionError);
  CHECK_THROWS_AS(decide(st, "m999", Decision::Accept), NotFoundError);
  CHECK_THROWS_AS(decide(st, kept, Decision::Tolerate), PreconditionError);
}

TEST_CASE("manual mappings obey the correspondence rules") {
  auto st = securestoreState();
  CHECK_THROWS_AS(map_manually(st, "securestore/value", "name:get"), InvalidArgument);
  CHECK_THROWS_AS(map_manually(st, "securestore/Plugin", "type:String"), InvalidArgument);
  CHECK_THROWS_AS(map_manually(st, "securestore/Get_Value", "def:none"), NotFoundError);
  CHECK_THROWS_AS(map_manually(st, "securestore/Nowhere", "type:String"), NotFoundError);
  auto id = map_manually(st, "securestore/Cache", "name:read");
  CHECK(st.find(id)->kind == EntryKind::StoreMethod);
  CHECK(st.find(id)->state == EntryState::UserDefined);
  // Mapping the same pair again upgrades the entry in place.
  CHECK(map_manually(st, "securestore/Cache", "name:read") == id);
}

TEST_CASE("accepting never lowers a score and rejecting never raises one") {
  std::mt19937 rng(5);
  for (int round = 0; round < 20; ++round) {
    auto st = securestoreState();
    run_iteration(st);
    run_iteration(st);
    for (int step = 0; step < 6; ++step) {
      std::vector<std::string> open;
      for (const auto& e : st.entries())
        if (e.state == EntryState::Suggested) open.push_back(e.id);
      if (open.empty()) break;
      std::string pick = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
      std::map<std::string, double> before;
      for (const auto& e : st.entries()) before[e.id] = e.score;
      bool accept = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
      decide(st, pick, accept ? Decision::Accept : Decision::Reject);
      for (const auto& e : st.entries()) {
        if (!before.count(e.id) || e.id == pick) continue;
        if (accept) CHECK(e.score >= before[e.id] - 1e-12);
        else CHECK(e.score <= before[e.id] + 1e-12);
      }
    }
  }
}

TEST_CASE("median cleanup keeps confirmed entries and at least one per element") {
  auto st = securestoreState();
  run_iteration(st);
  auto first = score_and_filter(st);
  std::set<std::string> elements;
  for (const auto& e : st.entries()) elements.insert(e.dfdElement);
  std::set<std::string> shown;
  for (const auto& e : first) shown.insert(e.dfdElement);
  CHECK(shown == elements);
  auto someEntry = first.front().id;
  decide(st, someEntry, Decision::Accept);
  auto again = score_and_filter(st);
  CHECK(std::any_of(again.begin(), again.end(), [&](const MappingEntry& e) { return e.id == someEntry; }));
  for (std::size_t i = 1; i < again.size(); ++i)
    if (again[i].dfdElement == again[i - 1].dfdElement) CHECK(again[i].score <= again[i - 1].score + 1e-9);
}

TEST_CASE("iterations only add entries") {
  auto st = securestoreState();
  run_iteration(st);
  auto n1 = st.entries().size();
  run_iteration(st);
  CHECK(st.entries().size() >= n1);
  CHECK(st.iteration() == 2);
}

TEST_CASE("compliance report for the securestore ground truth") {
  auto st = testsupport::mappedCorpus("securestore", "securestore");
  auto r = compliance_report(st);
  CHECK(r.convergences.size() == 19);
  CHECK(r.absences == std::vector<std::string>{"securestore/request"});
  for (const auto& d : r.divergences) {
    CHECK_FALSE(d.edges.empty());
    if (d.kind == Divergence::Kind::UnmappedMember) CHECK(d.target);
    else CHECK(d.other);
  }
}

TEST_CASE("evaluation identities on random suggestion and ground-truth pairs") {
  std::mt19937 rng(99);
  std::vector<std::string> dfds{"m/A", "m/B", "m/C", "m/x"};
  std::vector<std::string> pms{"def:a", "def:b", "sig:c", "type:T", "name:n"};
  auto randPair = [&] {
    return std::pair{dfds[std::uniform_int_distribution<std::size_t>(0, dfds.size() - 1)(rng)],
                     pms[std::uniform_int_distribution<std::size_t>(0, pms.size() - 1)(rng)]};
  };
  for (int i = 0; i < 100; ++i) {
    std::vector<MappingEntry> sugg;
    GroundTruth gt;
    int ns = std::uniform_int_distribution<int>(0, 12)(rng);
    int ng = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int k = 0; k < ns; ++k) {
      auto [d, p] = randPair();
      MappingEntry e;
      e.id = "m" + std::to_string(k);
      e.dfdElement = d;
      e.pmElement = p;
      e.state = std::uniform_int_distribution<int>(0, 4)(rng) == 0 ? EntryState::Rejected : EntryState::Suggested;
      sugg.push_back(e);
    }
    for (int k = 0; k < ng; ++k) {
      auto [d, p] = randPair();
      gt.push_back({d, p});
    }
    auto ev = evaluate_against_ground_truth(sugg, gt);

    // Counting oracle over distinct pairs.
    std::set<std::pair<std::string, std::string>> s, g;
    for (const auto& e : sugg)
      if (e.state != EntryState::Rejected) s.insert({e.dfdElement, e.pmElement});
    for (const auto& p : gt) g.insert({p.dfd, p.pm});
    std::size_t both = 0;
    for (const auto& p : s) both += g.count(p);
    CHECK(ev.tp == both);
    CHECK(ev.tp + ev.fn == g.size());
    CHECK(ev.tp + ev.fp == s.size());
    CHECK(ev.precision.has_value() == !s.empty());
    CHECK(ev.recall.has_value() == !g.empty());
    if (ev.precision) CHECK(*ev.precision == doctest::Approx(double(both) / double(s.size())));
  }
}

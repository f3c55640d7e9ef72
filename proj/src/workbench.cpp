#include "flowmap/workbench.h"

#include "flowmap/error.h"
#include "flowmap/frontend.h"
#include "flowmap/pm_json.h"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

namespace flowmap::service {

using io::Json;

Clock default_clock() {
  return [] {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
      char* end = nullptr;
      long long v = std::strtoll(epoch, &end, 10);
      if (end && *end == '\0' && end != epoch) return static_cast<std::int64_t>(v);
    }
    return static_cast<std::int64_t>(std::time(nullptr));
  };
}

std::string format_utc(std::int64_t epochSeconds) {
  std::time_t t = static_cast<std::time_t>(epochSeconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path home_from_env() {
  if (const char* h = std::getenv("FLOWMAP_HOME"); h && *h) return h;
  return fs::current_path() / ".flowmap";
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  fs::create_directories(path.parent_path());
  std::ostringstream tmpName;
  tmpName << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
          << counter++;
  fs::path tmp = path.parent_path() / tmpName.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("io_error", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view to_string(CheckKind k) {
  switch (k) {
  case CheckKind::Contracts: return "contracts";
  case CheckKind::Crypto: return "crypto";
  case CheckKind::Design: return "design";
  case CheckKind::Taint: return "taint";
  }
  return "?";
}

CheckKind check_kind_from_string(std::string_view s) {
  for (auto k : {CheckKind::Contracts, CheckKind::Crypto, CheckKind::Design, CheckKind::Taint})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown check kind '" + std::string(s) + "'", "expected contracts, crypto, design or taint");
}

Json info_json(const SessionInfo& i) {
  return {{"id", i.id}, {"corpus", i.corpus}, {"models", i.models}, {"createdAt", i.createdAt}, {"updatedAt", i.updatedAt}};
}

namespace {

constexpr const char* kCrypto = "list.crypto";
constexpr const char* kSources = "list.sources";
constexpr const char* kSinks = "list.sinks";

bool validId(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') return false;
  return true;
}

std::string patternText(const std::vector<SignaturePattern>& ps) {
  std::string out;
  for (const auto& p : ps) out += p.text() + "\n";
  return out;
}

SessionInfo infoFromJson(const Json& j) {
  try {
    return {j.at("id").get<std::string>(), j.at("corpus").get<std::string>(),
            j.at("models").get<std::vector<std::string>>(), j.at("createdAt").get<std::string>(),
            j.at("updatedAt").get<std::string>()};
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("session.json: ") + e.what());
  }
}

std::optional<std::string> readOptionalList(const std::optional<fs::path>& given, const fs::path& corpus,
                                            const char* ext) {
  if (given) return read_file(*given);
  fs::path fallback = corpus / (std::string("default") + ext);
  if (fs::exists(fallback)) return read_file(fallback);
  return std::nullopt;
}

bool hasConfirmed(const mapping::MappingState& s) {
  for (const auto& e : s.entries())
    if (mapping::is_confirmed(e.state)) return true;
  return false;
}

} // namespace

Workbench::Workbench(fs::path home, Clock clock) : home_(std::move(home)), clock_(std::move(clock)) {}

fs::path Workbench::sessionDir(const std::string& id) const { return home_ / "sessions" / id; }

std::shared_ptr<std::mutex> Workbench::lockFor(const std::string& id) {
  std::lock_guard g(locksMutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

SessionInfo Workbench::create_session(const fs::path& corpus, const std::vector<fs::path>& modelPaths,
                                      const SessionOptions& options) {
  if (!fs::is_directory(corpus)) throw NotFoundError("corpus directory " + corpus.string() + " does not exist");
  std::vector<std::string> problems;
  auto files = pm::read_corpus(corpus);
  std::optional<pm::ProgramModel> pm;
  try {
    pm = pm::extract_pm(files);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  std::vector<dfd::SecDfd> models;
  std::set<std::string> names;
  for (const auto& p : modelPaths) {
    try {
      auto m = dfd::parse_secdfd(read_file(p), p.string());
      if (!names.insert(m.name).second) throw InvalidArgument(p.string() + ": duplicate model name '" + m.name + "'");
      models.push_back(std::move(m));
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  if (modelPaths.empty()) problems.push_back("no SecDFD model given");
  if (!problems.empty()) {
    std::string detail;
    for (const auto& p : problems) detail += p + "\n";
    throw InvalidArgument("session inputs failed to load (" + std::to_string(problems.size()) + " problem(s))", detail);
  }

  auto cryptoText = readOptionalList(options.crypto, corpus, ".crypto");
  auto sourcesText = readOptionalList(options.sources, corpus, ".sources");
  auto sinksText = readOptionalList(options.sinks, corpus, ".sinks");
  contracts::CryptoList crypto = cryptoText ? contracts::CryptoList::parse(*cryptoText, "crypto list") : contracts::CryptoList{};
  auto sources = sourcesText ? parse_pattern_list(*sourcesText, "sources list") : std::vector<SignaturePattern>{};
  auto sinks = sinksText ? parse_pattern_list(*sinksText, "sinks list") : std::vector<SignaturePattern>{};

  std::vector<std::string> modelNames;
  for (const auto& m : models) modelNames.push_back(m.name);
  Session s{{}, mapping::MappingState(models, std::make_shared<const pm::ProgramModel>(std::move(*pm))),
            std::move(crypto), std::move(sources), std::move(sinks)};
  mapping::run_iteration(s.state);

  // The id is derived from the inputs; repeated creation gets a suffix.
  std::string digest;
  for (const auto& f : files) digest += f.path + '\0' + f.text + '\0';
  for (const auto& m : models) digest += dfd::print_secdfd(m) + '\0';
  digest += s.crypto.print() + '\0' + patternText(s.sources) + '\0' + patternText(s.sinks);
  std::string base = io::stable_id("s", Json(digest)).substr(0, 13);

  fs::create_directories(home_ / "sessions");
  std::lock_guard g(locksMutex_);
  std::string id = base;
  for (int n = 2; fs::exists(sessionDir(id)); ++n) id = base + "-" + std::to_string(n);

  std::string now = format_utc(clock_());
  s.info = {id, fs::absolute(corpus).lexically_normal().string(), modelNames, now, now};
  fs::path tmp = home_ / "sessions" / (".tmp-" + id);
  fs::remove_all(tmp);
  write_file_atomic(tmp / "pm.json", pm::save_pm(s.state.pm()));
  for (const auto& m : models) write_file_atomic(tmp / "models" / (m.name + ".secdfd"), dfd::print_secdfd(m));
  write_file_atomic(tmp / "map.json", io::canonical(io::to_json(s.state)));
  write_file_atomic(tmp / kCrypto, s.crypto.print());
  write_file_atomic(tmp / kSources, patternText(s.sources));
  write_file_atomic(tmp / kSinks, patternText(s.sinks));
  write_file_atomic(tmp / "session.json", io::canonical(info_json(s.info)));
  fs::rename(tmp, sessionDir(id));
  return s.info;
}

std::vector<SessionInfo> Workbench::list_sessions() const {
  std::vector<SessionInfo> out;
  fs::path root = home_ / "sessions";
  if (!fs::is_directory(root)) return out;
  for (const auto& d : fs::directory_iterator(root)) {
    auto name = d.path().filename().string();
    if (!d.is_directory() || !validId(name) || !fs::exists(d.path() / "session.json")) continue;
    out.push_back(info(name));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

SessionInfo Workbench::info(const std::string& id) const {
  if (!validId(id) || !fs::exists(sessionDir(id) / "session.json")) throw NotFoundError("unknown session '" + id + "'");
  return infoFromJson(io::parse_json(read_file(sessionDir(id) / "session.json"), "session.json"));
}

Session Workbench::load(const std::string& id) const {
  SessionInfo i = info(id);
  fs::path dir = sessionDir(id);
  auto pm = std::make_shared<const pm::ProgramModel>(pm::load_pm(read_file(dir / "pm.json")));
  std::vector<dfd::SecDfd> models;
  for (const auto& name : i.models) {
    fs::path p = dir / "models" / (name + ".secdfd");
    models.push_back(dfd::parse_secdfd(read_file(p), p.string()));
  }
  auto state = io::mapping_state_from_json(io::parse_json(read_file(dir / "map.json"), "map.json"), std::move(models), pm);
  return {std::move(i), std::move(state), contracts::CryptoList::parse(read_file(dir / kCrypto), kCrypto),
          parse_pattern_list(read_file(dir / kSources), kSources), parse_pattern_list(read_file(dir / kSinks), kSinks)};
}

void Workbench::persist(Session& s) {
  s.info.updatedAt = format_utc(clock_());
  fs::path dir = sessionDir(s.info.id);
  write_file_atomic(dir / "map.json", io::canonical(io::to_json(s.state)));
  write_file_atomic(dir / kCrypto, s.crypto.print());
  write_file_atomic(dir / "session.json", io::canonical(info_json(s.info)));
}

void Workbench::writeReport(const std::string& id, const std::string& name, const Json& body) {
  write_file_atomic(sessionDir(id) / "reports" / (name + ".json"), io::canonical(body));
}

template <class Fn>
auto Workbench::mutate(const std::string& id, Fn&& fn) {
  info(id);
  auto lock = lockFor(id);
  std::lock_guard g(*lock);
  Session s = load(id);
  auto result = fn(s);
  persist(s);
  return result;
}

Json Workbench::suggestions(const std::string& id) const {
  Session s = load(id);
  auto list = mapping::score_and_filter(s.state);
  return io::suggestions_view(s.state, list);
}

Json Workbench::decide(const std::string& id, const std::string& entryId, mapping::Decision decision) {
  return mutate(id, [&](Session& s) {
    mapping::decide(s.state, entryId, decision);
    return io::suggestions_view(s.state, mapping::score_and_filter(s.state));
  });
}

Json Workbench::map(const std::string& id, const std::string& dfdRef, const std::string& pmRef) {
  return mutate(id, [&](Session& s) {
    std::string entry = mapping::map_manually(s.state, dfdRef, pmRef);
    Json out = io::suggestions_view(s.state, mapping::score_and_filter(s.state));
    out["entry"] = entry;
    return out;
  });
}

Json Workbench::apply_ground_truth(const std::string& id, const mapping::GroundTruth& gt) {
  return mutate(id, [&](Session& s) {
    auto ids = io::apply_ground_truth(s.state, gt);
    Json out = io::suggestions_view(s.state, mapping::score_and_filter(s.state));
    out["entries"] = ids;
    return out;
  });
}

Json Workbench::iterate(const std::string& id) {
  return mutate(id, [&](Session& s) { return io::suggestions_view(s.state, mapping::run_iteration(s.state)); });
}

CheckReport Workbench::check(const std::string& id, CheckKind kind, taint::Mode mode) {
  info(id);
  auto lock = lockFor(id);
  std::lock_guard g(*lock);
  Session s = load(id);
  const auto& pm = s.state.pm();
  CheckReport rep;
  rep.kind = kind;
  switch (kind) {
  case CheckKind::Contracts: {
    auto r = contracts::check_all_processing(s.state);
    r.normalize();
    rep.body = io::to_json(r, pm);
    rep.body["compliance"] = io::to_json(mapping::compliance_report(s.state));
    rep.findings = r.violations.size();
    break;
  }
  case CheckKind::Crypto: {
    auto r = contracts::check_crypto(s.state, s.crypto);
    r.normalize();
    rep.body = io::to_json(r, pm);
    rep.findings = r.violations.size();
    break;
  }
  case CheckKind::Design: {
    Json leaks = Json::array();
    for (const auto& m : s.state.models())
      for (auto& l : io::design_leaks_json(m.name, dfd::check_design_leaks(m, dfd::propagate_labels(m))))
        leaks.push_back(std::move(l));
    rep.findings = leaks.size();
    rep.body = {{"leaks", std::move(leaks)}};
    break;
  }
  case CheckKind::Taint: {
    rep.mode = mode;
    bool mapped = hasConfirmed(s.state);
    if (mode != taint::Mode::Plain && !mapped)
      throw PreconditionError("taint mode " + std::string(taint::to_string(mode)) + " needs confirmed mappings");
    std::vector<std::string> unresolved;
    auto sources = taint::expand_patterns(pm, s.sources, &unresolved);
    auto sinks = taint::expand_patterns(pm, s.sinks, &unresolved);
    auto result = taint::run_taint(pm, taint::build_config(mode, s.state, sources, sinks));
    rep.body = io::to_json(result);
    rep.body["unresolvedPatterns"] = unresolved;
    std::vector<taint::TaintConfig> configs{taint::build_config(taint::Mode::Plain, s.state, sources, sinks)};
    if (mapped)
      for (auto m : {taint::Mode::PartlyOpt, taint::Mode::FullyOpt})
        configs.push_back(taint::build_config(m, s.state, sources, sinks));
    std::vector<std::string> names;
    for (const auto& m : s.state.models()) names.push_back(m.name);
    rep.body["summary"] = io::to_json(taint::compare_configs(pm, configs, names));
    rep.findings = rep.body["alarms"].size();
    break;
  }
  }
  rep.body["check"] = to_string(kind);
  if (rep.mode) rep.body["mode"] = taint::to_string(*rep.mode);
  writeReport(id, std::string(to_string(kind)), rep.body);
  return rep;
}

Json Workbench::violations(const std::string& id) const {
  info(id);
  Json out = Json::array();
  for (auto kind : {CheckKind::Contracts, CheckKind::Crypto, CheckKind::Design, CheckKind::Taint}) {
    fs::path p = sessionDir(id) / "reports" / (std::string(to_string(kind)) + ".json");
    if (!fs::exists(p)) continue;
    Json body = io::parse_json(read_file(p), p.string());
    const char* key = kind == CheckKind::Design ? "leaks" : kind == CheckKind::Taint ? "alarms" : "violations";
    for (auto item : body.value(key, Json::array())) {
      item["check"] = to_string(kind);
      out.push_back(std::move(item));
    }
  }
  return {{"violations", std::move(out)}};
}

contracts::CryptoList Workbench::update_crypto_list(const std::string& id, const contracts::CryptoList& entries) {
  if (entries.entries().empty()) return load(id).crypto;
  return mutate(id, [&](Session& s) {
    s.crypto.merge(entries);
    return s.crypto;
  });
}

mapping::Evaluation Workbench::evaluate(const std::string& id, const mapping::GroundTruth& gt) const {
  Session s = load(id);
  return mapping::evaluate_against_ground_truth(mapping::score_and_filter(s.state), gt);
}

contracts::InjectionReport Workbench::inject(const std::string& id, const std::set<contracts::InjectKind>& kinds) {
  Session s = load(id);
  auto report = contracts::run_injection_experiment(s.state, s.crypto, kinds);
  writeReport(id, "inject", io::to_json(report));
  return report;
}

} // namespace flowmap::service

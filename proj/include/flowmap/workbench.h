#pragma once

#include "flowmap/contracts.h"
#include "flowmap/io.h"
#include "flowmap/mapping.h"
#include "flowmap/taint.h"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

// Session lifecycle and persistence. A session is a directory of canonical
// files below <home>/sessions/<id>/:
//   session.json   id, corpus, model names, timestamps
//   pm.json        extracted program model
//   models/        one <name>.secdfd per model
//   map.json       mapping state
//   list.crypto, list.sources, list.sinks
//   reports/       latest report per check kind

namespace flowmap::service {

namespace fs = std::filesystem;

/// Seconds since the epoch.
using Clock = std::function<std::int64_t()>;
/// SOURCE_DATE_EPOCH when set, the system clock otherwise.
Clock default_clock();
/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc(std::int64_t epochSeconds);

/// FLOWMAP_HOME, or ./.flowmap when unset.
fs::path home_from_env();

/// Temp file plus rename, so readers never see a partial file.
void write_file_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

struct SessionInfo {
  std::string id;
  std::string corpus;
  std::vector<std::string> models;
  std::string createdAt;
  std::string updatedAt;
};

io::Json info_json(const SessionInfo& info);

struct Session {
  SessionInfo info;
  mapping::MappingState state;
  contracts::CryptoList crypto;
  std::vector<SignaturePattern> sources;
  std::vector<SignaturePattern> sinks;
};

struct SessionOptions {
  // Default lists; when empty, <corpus>/default.crypto|.sources|.sinks are
  // used if present.
  std::optional<fs::path> crypto, sources, sinks;
};

enum class CheckKind { Contracts, Crypto, Design, Taint };
std::string_view to_string(CheckKind k);
CheckKind check_kind_from_string(std::string_view s);

struct CheckReport {
  CheckKind kind = CheckKind::Contracts;
  std::optional<taint::Mode> mode;
  io::Json body;
  std::size_t findings = 0; // violations, leaks or alarms
};

class Workbench {
public:
  explicit Workbench(fs::path home, Clock clock = default_clock());

  const fs::path& home() const { return home_; }

  /// Extracts the PM, parses the models, runs the first iteration and
  /// persists. Parse failures are collected into one InvalidArgument whose
  /// detail lists every offending file.
  SessionInfo create_session(const fs::path& corpus, const std::vector<fs::path>& models,
                             const SessionOptions& options = {});
  std::vector<SessionInfo> list_sessions() const;
  SessionInfo info(const std::string& id) const;
  Session load(const std::string& id) const;
  fs::path sessionDir(const std::string& id) const;

  io::Json suggestions(const std::string& id) const;
  io::Json decide(const std::string& id, const std::string& entryId, mapping::Decision decision);
  io::Json map(const std::string& id, const std::string& dfdRef, const std::string& pmRef);
  io::Json apply_ground_truth(const std::string& id, const mapping::GroundTruth& gt);
  io::Json iterate(const std::string& id);

  CheckReport check(const std::string& id, CheckKind kind, taint::Mode mode = taint::Mode::Plain);
  /// Findings of the latest report of every check kind.
  io::Json violations(const std::string& id) const;

  /// Adds the entries to the session's crypto list; returns the merged list.
  contracts::CryptoList update_crypto_list(const std::string& id, const contracts::CryptoList& entries);

  mapping::Evaluation evaluate(const std::string& id, const mapping::GroundTruth& gt) const;
  contracts::InjectionReport inject(const std::string& id, const std::set<contracts::InjectKind>& kinds);

private:
  std::shared_ptr<std::mutex> lockFor(const std::string& id);
  /// Serialised load-modify-persist; nothing is written if `fn` throws.
  template <class Fn>
  auto mutate(const std::string& id, Fn&& fn);
  void persist(Session& s);
  void writeReport(const std::string& id, const std::string& name, const io::Json& body);

  fs::path home_;
  Clock clock_;
  std::mutex locksMutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

} // namespace flowmap::service

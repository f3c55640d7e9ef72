#pragma once

#include "flowmap/program_model.h"
#include "flowmap/secdfd.h"

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Correspondences between SecDFD elements and program-model elements:
// heuristic discovery, certainty scores, user decisions and the compliance
// report derived from confirmed correspondences.

namespace flowmap::mapping {

enum class EntryKind {
  AssetType,
  StoreType,
  StoreMethod,
  StoreDefinition,
  ProcessName,
  ProcessSignature,
  ProcessDefinition,
  EntityDefinition,
};

enum class EntryState { Suggested, Accepted, Rejected, Tolerated, UserDefined };
enum class Decision { Accept, Reject, Tolerate };

std::string_view to_string(EntryKind kind);
std::string_view to_string(EntryState state);
EntryKind entry_kind_from_string(std::string_view s);
EntryState entry_state_from_string(std::string_view s);
Decision decision_from_string(std::string_view s);

/// Accepted or user-defined.
bool is_confirmed(EntryState s);

struct MappingEntry {
  std::string id;
  std::string dfdElement; // "<model>/<element>"
  std::string pmElement;  // PM id
  EntryKind kind = EntryKind::ProcessName;
  EntryState state = EntryState::Suggested;
  double quality = 0.0; // name-match quality at the derivation root
  double score = 0.0;
  std::vector<std::string> derivedFrom; // entry ids, sorted

  bool operator==(const MappingEntry&) const = default;
};

struct ScoreWeights {
  double accepted = 0.5;
  double suggested = 0.25;
  bool operator==(const ScoreWeights&) const = default;
};

struct DfdRef {
  std::string model;
  std::string element;
  std::string str() const { return model + "/" + element; }
  static DfdRef parse(std::string_view ref);
};

class MappingState {
public:
  MappingState() = default;
  MappingState(std::vector<dfd::SecDfd> models, std::shared_ptr<const pm::ProgramModel> pm);

  const std::vector<dfd::SecDfd>& models() const { return models_; }
  const pm::ProgramModel& pm() const { return *pm_; }
  std::shared_ptr<const pm::ProgramModel> pmPtr() const { return pm_; }
  const dfd::SecDfd& model(std::string_view name) const;
  /// Swaps in an edited version of an existing model (same name); entries are
  /// kept as they are.
  void replaceModel(dfd::SecDfd model);

  const std::vector<MappingEntry>& entries() const { return entries_; }
  const MappingEntry* find(std::string_view id) const;
  const MappingEntry* findPair(std::string_view dfd, std::string_view pmElement) const;

  /// Entries of a given kind for a DFD element, skipping rejected ones.
  std::vector<const MappingEntry*> live(std::string_view dfd, EntryKind kind) const;
  std::vector<const MappingEntry*> confirmed(std::string_view dfd, EntryKind kind) const;

  int iteration() const { return iteration_; }
  const ScoreWeights& weights() const { return weights_; }
  void setWeights(ScoreWeights w);

  /// Mutators used by the engine operations and by deserialisation.
  MappingEntry& add(std::string dfd, std::string pmElement, EntryKind kind, EntryState state, double quality,
                    std::vector<std::string> derivedFrom);
  MappingEntry& get(std::string_view id);
  void erase(const std::set<std::string>& ids);
  /// Removes `id` from every derivation list.
  void unlink(const std::string& id);
  void bumpIteration() { ++iteration_; }

  /// Structural replacement used when loading from disk.
  void restore(std::vector<MappingEntry> entries, int iteration, int nextId, ScoreWeights weights);
  int nextId() const { return nextId_; }

  bool operator==(const MappingState& o) const;

private:
  std::vector<dfd::SecDfd> models_;
  std::shared_ptr<const pm::ProgramModel> pm_;
  std::vector<MappingEntry> entries_;
  int iteration_ = 0;
  int nextId_ = 1;
  ScoreWeights weights_;
};

/// Kind of a DFD reference within the state; throws NotFoundError.
enum class DfdElementKind { Process, ExternalEntity, DataStore, Asset };
DfdElementKind dfd_element_kind(const MappingState& state, std::string_view ref);

// Discovery steps; each returns the ids of the entries it created.
std::vector<std::string> match_names(MappingState& state);
std::vector<std::string> extend_to_signatures(MappingState& state);
std::vector<std::string> discover_definitions(MappingState& state);

/// Recomputes every entry's score from quality and derivation closure.
void rescore(MappingState& state);

/// Median cleanup per DFD element; confirmed entries always pass. Output is
/// ordered by (dfdElement, score descending, pmElement).
std::vector<MappingEntry> score_and_filter(MappingState& state);

std::vector<MappingEntry> run_iteration(MappingState& state);

void decide(MappingState& state, const std::string& entryId, Decision decision);

/// Adds (or upgrades) a USER_DEFINED entry and returns its id. Throws
/// InvalidArgument for element pairs that cannot correspond.
std::string map_manually(MappingState& state, const std::string& dfdRef, const std::string& pmElement);

struct Divergence {
  enum class Kind { UnmappedMember, UnspecifiedFlow };
  Kind kind = Kind::UnmappedMember;
  std::string element;               // DFD ref whose definitions emit the flow
  std::optional<std::string> other;  // receiving DFD ref (UnspecifiedFlow)
  std::optional<std::string> target; // receiving definition (UnmappedMember)
  std::vector<std::string> edges;    // PM edge ids, sorted

  auto operator<=>(const Divergence&) const = default;
};

std::string_view to_string(Divergence::Kind kind);

struct ComplianceReport {
  std::vector<std::string> convergences; // entry ids
  std::vector<std::string> absences;     // DFD refs
  std::vector<Divergence> divergences;
};

ComplianceReport compliance_report(const MappingState& state);

struct GroundTruthPair {
  std::string dfd;
  std::string pm;
  auto operator<=>(const GroundTruthPair&) const = default;
};
using GroundTruth = std::vector<GroundTruthPair>;

struct Evaluation {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::optional<double> precision, recall; // empty when the denominator is 0
};

Evaluation evaluate_against_ground_truth(const std::vector<MappingEntry>& suggestions, const GroundTruth& gt);

} // namespace flowmap::mapping

#pragma once

#include "flowmap/program_model.h"

#include <filesystem>
#include <string>
#include <vector>

// Extraction of a ProgramModel from the miniature class-based corpus language
// (.mini files).

namespace flowmap::pm {

struct SourceFile {
  std::string path; // as recorded in source locations
  std::string text;
};

/// Builtin value types, available without declaration.
inline const std::vector<std::string> kBuiltinTypes = {"String", "int", "bool"};

/// Parses and resolves all files together; throws ParseError on syntax or
/// resolution problems.
ProgramModel extract_pm(const std::vector<SourceFile>& files);

/// Every *.mini file below `dir`, in path order, with locations relative to it.
std::vector<SourceFile> read_corpus(const std::filesystem::path& dir);

inline ProgramModel extract_pm(const std::filesystem::path& dir) { return extract_pm(read_corpus(dir)); }

} // namespace flowmap::pm

#pragma once

#include "flowmap/frontend.h"
#include "flowmap/io.h"
#include "flowmap/mapping.h"
#include "flowmap/secdfd.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path sourceDir() { return FLOWMAP_SOURCE_DIR; }
inline fs::path corpusDir(const std::string& name) { return sourceDir() / "corpus" / name; }
inline fs::path fixtureDir() { return sourceDir() / "tests" / "fixtures"; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline flowmap::dfd::SecDfd loadModel(const fs::path& p) { return flowmap::dfd::parse_secdfd(slurp(p), p.string()); }

inline std::shared_ptr<const flowmap::pm::ProgramModel> pmFromText(const std::string& text,
                                                                  const std::string& path = "T.mini") {
  return std::make_shared<const flowmap::pm::ProgramModel>(flowmap::pm::extract_pm(std::vector<flowmap::pm::SourceFile>{{path, text}}));
}

/// Mapping state of a corpus with the ground truth confirmed, no iteration run.
inline flowmap::mapping::MappingState mappedCorpus(const std::string& corpus, const std::string& model) {
  auto pm = std::make_shared<const flowmap::pm::ProgramModel>(flowmap::pm::extract_pm(corpusDir(corpus) / "src"));
  flowmap::mapping::MappingState st({loadModel(corpusDir(corpus) / (model + ".secdfd"))}, pm);
  auto gtPath = corpusDir(corpus) / (model + ".gt.json");
  flowmap::io::apply_ground_truth(st, flowmap::io::parse_ground_truth(slurp(gtPath), gtPath.string()));
  return st;
}

/// Fresh directory removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = fs::temp_directory_path() / ("flowmap-test-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

} // namespace testsupport

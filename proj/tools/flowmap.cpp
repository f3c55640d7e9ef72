// flowmap: command-line front end of the workbench service.
// Exit codes: 0 no findings, 2 findings reported, 1 error.

#include "flowmap/api.h"
#include "flowmap/error.h"
#include "flowmap/frontend.h"
#include "flowmap/pm_json.h"
#include "flowmap/workbench.h"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace flowmap;
using service::Workbench;

namespace {

void printSuggestions(const io::Json& view) {
  std::printf("iteration %d\n", view.at("iteration").get<int>());
  for (const auto& g : view.at("groups")) {
    std::printf("%s\n", g.at("dfdElement").get<std::string>().c_str());
    for (const auto& e : g.at("entries")) {
      std::string where;
      if (e.contains("location"))
        where = "  " + e["location"]["file"].get<std::string>() + ":" + std::to_string(e["location"]["line"].get<int>());
      std::printf("  %-6s %-18s %-12s %6.3f  %s%s\n", e["id"].get<std::string>().c_str(),
                  e["kind"].get<std::string>().c_str(), e["state"].get<std::string>().c_str(),
                  e["score"].get<double>(), e["label"].get<std::string>().c_str(), where.c_str());
    }
  }
}

void printJson(const io::Json& j) { std::fputs(io::canonical(j).c_str(), stdout); }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowmap: map security design models to code and check compliance"};
  app.require_subcommand(1);
  std::string home;
  app.add_option("--home", home, "Session root (default: $FLOWMAP_HOME)");

  std::string corpus, out;
  auto* extract = app.add_subcommand("extract", "Extract the program model of a corpus");
  extract->add_option("corpus", corpus, "Corpus directory")->required();
  extract->add_option("-o,--output", out, "Output file (default: stdout)");

  auto* session = app.add_subcommand("session", "Manage sessions");
  session->require_subcommand(1);
  std::vector<std::string> modelFiles;
  std::string cryptoFile, sourcesFile, sinksFile;
  auto* sessionNew = session->add_subcommand("new", "Create a session and run the first iteration");
  sessionNew->add_option("corpus", corpus, "Corpus directory")->required();
  sessionNew->add_option("models", modelFiles, "SecDFD files")->required();
  sessionNew->add_option("--crypto", cryptoFile, "Crypto list file");
  sessionNew->add_option("--sources", sourcesFile, "Default taint sources");
  sessionNew->add_option("--sinks", sinksFile, "Default taint sinks");
  auto* sessionList = session->add_subcommand("list", "List sessions");

  std::string sid, entryId, decision, dfdRef, pmRef, gtFile, kind, mode = "plain", kinds = "enc,dec,fwd,join";
  bool asJson = false;
  auto* suggest = app.add_subcommand("suggest", "Show the current suggestions");
  suggest->add_option("session", sid)->required();
  suggest->add_flag("--json", asJson, "Print JSON");

  auto* decide = app.add_subcommand("decide", "Accept, reject or tolerate a suggestion");
  decide->add_option("session", sid)->required();
  decide->add_option("entry", entryId)->required();
  decide->add_option("decision", decision, "accept|reject|tolerate")->required();

  auto* map = app.add_subcommand("map", "Define a mapping manually");
  map->add_option("session", sid)->required();
  map->add_option("dfd", dfdRef, "DFD element, <model>/<element>");
  map->add_option("pm", pmRef, "PM element id");
  map->add_option("--ground-truth", gtFile, "Map every pair of a ground-truth file");

  auto* iterate = app.add_subcommand("iterate", "Run the next mapping iteration");
  iterate->add_option("session", sid)->required();

  auto* check = app.add_subcommand("check", "Run a compliance check");
  check->add_option("session", sid)->required();
  check->add_option("kind", kind, "contracts|crypto|design|taint")->required();
  check->add_option("--mode", mode, "Taint mode: plain|partly|fully");

  auto* eval = app.add_subcommand("eval", "Score suggestions against a ground truth");
  eval->add_option("session", sid)->required();
  eval->add_option("--ground-truth", gtFile)->required();

  auto* inject = app.add_subcommand("inject", "Contract injection experiment");
  inject->add_option("session", sid)->required();
  inject->add_option("--kinds", kinds, "Subset of enc,dec,fwd,join");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*extract) {
      std::string text = pm::save_pm(pm::extract_pm(std::filesystem::path(corpus)));
      if (out.empty()) std::fputs(text.c_str(), stdout);
      else service::write_file_atomic(out, text);
      return 0;
    }
    Workbench wb(home.empty() ? service::home_from_env() : std::filesystem::path(home));
    if (*sessionNew) {
      service::SessionOptions opts;
      if (!cryptoFile.empty()) opts.crypto = cryptoFile;
      if (!sourcesFile.empty()) opts.sources = sourcesFile;
      if (!sinksFile.empty()) opts.sinks = sinksFile;
      std::vector<std::filesystem::path> models(modelFiles.begin(), modelFiles.end());
      std::printf("%s\n", wb.create_session(corpus, models, opts).id.c_str());
      return 0;
    }
    if (*sessionList) {
      for (const auto& s : wb.list_sessions())
        std::printf("%s  %s  %s\n", s.id.c_str(), s.updatedAt.c_str(), s.corpus.c_str());
      return 0;
    }
    if (*suggest) {
      auto view = wb.suggestions(sid);
      asJson ? printJson(view) : printSuggestions(view);
      return 0;
    }
    if (*decide) {
      printSuggestions(wb.decide(sid, entryId, mapping::decision_from_string(decision)));
      return 0;
    }
    if (*map) {
      if (!gtFile.empty()) {
        if (!dfdRef.empty()) throw InvalidArgument("give either a pair or --ground-truth, not both");
        wb.apply_ground_truth(sid, io::parse_ground_truth(service::read_file(gtFile), gtFile));
      } else {
        if (dfdRef.empty() || pmRef.empty()) throw InvalidArgument("map needs <dfd> <pm> or --ground-truth");
        std::printf("%s\n", wb.map(sid, dfdRef, pmRef).at("entry").get<std::string>().c_str());
      }
      return 0;
    }
    if (*iterate) {
      printSuggestions(wb.iterate(sid));
      return 0;
    }
    if (*check) {
      auto rep = wb.check(sid, service::check_kind_from_string(kind), taint::mode_from_string(mode));
      printJson(rep.body);
      return rep.findings ? 2 : 0;
    }
    if (*eval) {
      printJson(io::to_json(wb.evaluate(sid, io::parse_ground_truth(service::read_file(gtFile), gtFile))));
      return 0;
    }
    if (*inject) {
      printJson(io::to_json(wb.inject(sid, contracts::parse_inject_kinds(kinds))));
      return 0;
    }
    if (*serve) {
      service::serve(wb, host, port);
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
    if (!e.detail().empty()) std::fprintf(stderr, "%s%s", e.detail().c_str(), e.detail().back() == '\n' ? "" : "\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

#include "flowmap/names.h"

#include <algorithm>
#include <cctype>

namespace flowmap::mapping {

std::vector<std::string> split_name(std::string_view name) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(name[i]);
    if (c == '_' || c == '-' || c == '.' || std::isspace(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      unsigned char prev = static_cast<unsigned char>(name[i - 1]);
      bool digitEdge = std::isdigit(prev) != std::isdigit(c);
      bool caseEdge = std::islower(prev) && std::isupper(c);
      if (digitEdge || caseEdge) flush();
    }
    cur += static_cast<char>(std::tolower(c));
  }
  flush();
  return words;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t word_tolerance(std::size_t maxLen) {
  if (maxLen <= 4) return 0;
  if (maxLen <= 8) return 1;
  return 2;
}

bool words_equivalent(std::string_view w1, std::string_view w2) {
  return levenshtein(w1, w2) <= word_tolerance(std::max(w1.size(), w2.size()));
}

WordPairing pair_words(const std::vector<std::string>& w1, const std::vector<std::string>& w2) {
  WordPairing out;
  std::vector<bool> used(w2.size(), false);
  double distSum = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    std::optional<std::size_t> best;
    std::size_t bestDist = 0;
    for (std::size_t j = 0; j < w2.size(); ++j) {
      if (used[j]) continue;
      std::size_t d = levenshtein(w1[i], w2[j]);
      if (d > word_tolerance(std::max(w1[i].size(), w2[j].size()))) continue;
      if (!best || d < bestDist) {
        best = j;
        bestDist = d;
      }
    }
    if (!best) continue;
    used[*best] = true;
    out.pairs.emplace_back(i, *best);
    distSum += static_cast<double>(bestDist) / static_cast<double>(std::max(w1[i].size(), w2[*best].size()));
  }
  if (!out.pairs.empty()) out.meanNormalizedDistance = distSum / static_cast<double>(out.pairs.size());
  return out;
}

std::optional<double> names_correspond(std::string_view n1, std::string_view n2) {
  auto w1 = split_name(n1);
  auto w2 = split_name(n2);
  if (w1.empty() || w2.empty()) return std::nullopt;
  WordPairing p = pair_words(w1, w2);
  std::size_t m = p.pairs.size();
  if (m == 0 || 2 * m < std::max(w1.size(), w2.size())) return std::nullopt;
  double coverage = 2.0 * static_cast<double>(m) / static_cast<double>(w1.size() + w2.size());
  return coverage * (1.0 - p.meanNormalizedDistance);
}

} // namespace flowmap::mapping

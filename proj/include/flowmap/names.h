#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Fuzzy identifier comparison used by the name-matching step.

namespace flowmap::mapping {

/// Splits at '_', '-', '.', whitespace, letter/digit boundaries and
/// lower-to-upper case transitions; words are lower-cased.
std::vector<std::string> split_name(std::string_view name);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// Edit distance tolerated between two words whose longer one has `maxLen`
/// characters: 0 up to 4, 1 up to 8, 2 beyond.
std::size_t word_tolerance(std::size_t maxLen);

bool words_equivalent(std::string_view w1, std::string_view w2);

struct WordPairing {
  std::vector<std::pair<std::size_t, std::size_t>> pairs; // indices into W1, W2
  double meanNormalizedDistance = 0.0;                    // over pairs; 0 if none
};

/// Greedy pairing: each word of W1 in order takes the unpaired equivalent word
/// of W2 with the smallest distance (earliest on ties).
WordPairing pair_words(const std::vector<std::string>& w1, const std::vector<std::string>& w2);

/// Quality in [0,1] when the names correspond, i.e. when at least half of the
/// words of the longer name are paired.
std::optional<double> names_correspond(std::string_view n1, std::string_view n2);

} // namespace flowmap::mapping

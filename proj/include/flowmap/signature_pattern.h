#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Glob patterns over qualified method signatures "pkg.Type.method(P1,P2):R".

namespace flowmap {

class SignaturePattern {
public:
  /// Grammar: `<type>.<method>(<params>):<return>` where every part may use
  /// `*` wildcards and `<params>` may be `..` (or a lone `*`) for any list.
  /// Throws ParseError with the 1-based column of the problem.
  static SignaturePattern parse(std::string_view text, const std::string& file = {}, int line = 1);

  bool matches(std::string_view qualifiedSignature) const;
  const std::string& text() const { return text_; }

  bool operator==(const SignaturePattern& o) const { return text_ == o.text_; }
  bool operator<(const SignaturePattern& o) const { return text_ < o.text_; }

private:
  std::string text_;
  std::string owner_;  // "<type>.<method>" glob
  std::optional<std::vector<std::string>> params_; // nullopt: any list
  std::string ret_;
};

/// '*' matches any (possibly empty) character sequence.
bool glob_match(std::string_view pattern, std::string_view text);

/// Lines of a pattern list file: blank lines and '#' comments are skipped.
std::vector<SignaturePattern> parse_pattern_list(std::string_view text, const std::string& file = {});

} // namespace flowmap

#include "flowmap/signature_pattern.h"

#include "flowmap/error.h"

#include <cctype>

namespace flowmap {

bool glob_match(std::string_view p, std::string_view t) {
  std::size_t pi = 0, ti = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (ti < t.size()) {
    if (pi < p.size() && p[pi] == '*') {
      star = pi++;
      mark = ti;
    } else if (pi < p.size() && p[pi] == t[ti]) {
      ++pi;
      ++ti;
    } else if (star != std::string_view::npos) {
      pi = star + 1;
      ti = ++mark;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi] == '*') ++pi;
  return pi == p.size();
}

namespace {

struct SigParts {
  std::string owner;
  std::vector<std::string> params;
  std::string ret;
};

bool splitSignature(std::string_view sig, SigParts& out) {
  auto open = sig.find('(');
  auto close = sig.find(')', open == std::string_view::npos ? 0 : open);
  if (open == std::string_view::npos || close == std::string_view::npos || close + 1 >= sig.size() ||
      sig[close + 1] != ':')
    return false;
  out.owner = std::string(sig.substr(0, open));
  out.ret = std::string(sig.substr(close + 2));
  out.params.clear();
  std::string_view ps = sig.substr(open + 1, close - open - 1);
  if (ps.empty()) return true;
  std::size_t start = 0;
  for (;;) {
    auto comma = ps.find(',', start);
    out.params.emplace_back(ps.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

bool validChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '*' || c == '[' || c == ']'; }

} // namespace

SignaturePattern SignaturePattern::parse(std::string_view text, const std::string& file, int line) {
  auto fail = [&](std::size_t col, const std::string& msg) -> SignaturePattern {
    throw ParseError(file, line, static_cast<int>(col) + 1, msg + " in pattern '" + std::string(text) + "'");
  };
  if (text.empty()) return fail(0, "empty signature pattern");
  auto open = text.find('(');
  if (open == std::string_view::npos) return fail(text.size(), "expected '('");
  auto close = text.find(')', open);
  if (close == std::string_view::npos) return fail(text.size(), "expected ')'");
  if (close + 1 >= text.size() || text[close + 1] != ':') return fail(close + 1, "expected ':' after ')'");
  if (close + 2 >= text.size()) return fail(close + 2, "expected a return type");

  std::string_view owner = text.substr(0, open);
  auto dot = owner.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return fail(0, "expected '<type>.<method>'");
  if (dot + 1 == owner.size()) return fail(dot + 1, "expected a method name");
  for (std::size_t i = 0; i < owner.size(); ++i)
    if (!validChar(owner[i])) return fail(i, std::string("unexpected character '") + owner[i] + "'");
  for (std::size_t i = close + 2; i < text.size(); ++i)
    if (!validChar(text[i]) || text[i] == '(' || text[i] == ')') return fail(i, std::string("unexpected character '") + text[i] + "'");

  SignaturePattern p;
  p.text_ = std::string(text);
  p.owner_ = std::string(owner);
  p.ret_ = std::string(text.substr(close + 2));
  std::string_view ps = text.substr(open + 1, close - open - 1);
  if (ps == ".." || ps == "*") return p;
  p.params_.emplace();
  if (ps.empty()) return p;
  std::size_t start = 0;
  for (;;) {
    auto comma = ps.find(',', start);
    std::string_view one = ps.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (one.empty()) return fail(open + 1 + start, "empty parameter type");
    for (std::size_t i = 0; i < one.size(); ++i)
      if (!validChar(one[i])) return fail(open + 1 + start + i, std::string("unexpected character '") + one[i] + "'");
    p.params_->emplace_back(one);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return p;
}

bool SignaturePattern::matches(std::string_view sig) const {
  SigParts parts;
  if (!splitSignature(sig, parts)) return false;
  if (!glob_match(owner_, parts.owner) || !glob_match(ret_, parts.ret)) return false;
  if (!params_) return true;
  if (params_->size() != parts.params.size()) return false;
  for (std::size_t i = 0; i < parts.params.size(); ++i)
    if (!glob_match((*params_)[i], parts.params[i])) return false;
  return true;
}

std::vector<SignaturePattern> parse_pattern_list(std::string_view text, const std::string& file) {
  std::vector<SignaturePattern> out;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    std::size_t b = 0, e = raw.size();
    while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string_view s = raw.substr(b, e - b);
    if (s.empty() || s.front() == '#') continue;
    out.push_back(SignaturePattern::parse(s, file, line));
  }
  return out;
}

} // namespace flowmap

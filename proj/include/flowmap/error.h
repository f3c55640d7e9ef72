#pragma once

#include <stdexcept>
#include <string>

namespace flowmap {

/// Base error for everything the workbench reports to a caller. The code is a
/// short machine-readable category used by the CLI exit logic and the HTTP
/// error body.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

  const std::string& code() const { return code_; }
  const std::string& detail() const { return detail_; }

private:
  std::string code_;
  std::string detail_;
};

/// Syntax or validation failure in a text input, with a 1-based position.
class ParseError : public Error {
public:
  ParseError(std::string file, int line, int column, const std::string& message)
      : Error("parse_error", format(file, line, column, message), file),
        file_(std::move(file)), line_(line), column_(column) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }
  int column() const { return column_; }

private:
  static std::string format(const std::string& file, int line, int column,
                            const std::string& message) {
    std::string where = file.empty() ? "<input>" : file;
    return where + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }

  std::string file_;
  int line_;
  int column_;
};

class NotFoundError : public Error {
public:
  explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& message, std::string detail = {})
      : Error("invalid_argument", message, std::move(detail)) {}
};

class SchemaError : public Error {
public:
  explicit SchemaError(const std::string& message) : Error("schema_error", message) {}
};

class PreconditionError : public Error {
public:
  explicit PreconditionError(const std::string& message) : Error("precondition_failed", message) {}
};

} // namespace flowmap

#ifndef BAGTAG_ERRORS_H_
#define BAGTAG_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bagtag {

// Base class for all recoverable errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed column input. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ParseError(line, what, "") {}
  // `where` prefixes the message, e.g. a file path.
  ParseError(std::size_t line, const std::string& what, const std::string& where)
      : Error(where + (where.empty() ? "" : ": ") + "line " + std::to_string(line) + ": " + what),
        line_(line),
        detail_(what) {}
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Model, ensemble, or session file that cannot be loaded.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace bagtag

#endif  // BAGTAG_ERRORS_H_

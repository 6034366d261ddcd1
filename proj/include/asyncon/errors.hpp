#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asyncon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed topology text. `line` and `column` are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(locate(what, line, column)), detail_(what), line_(line), column_(column) {}

  /// Message without the location suffix.
  const std::string& detail() const noexcept { return detail_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string locate(const std::string& what, std::size_t line,
                            std::size_t column) {
    std::string msg = what;
    if (line > 0) {
      msg += " (row " + std::to_string(line);
      if (column > 0) msg += ", column " + std::to_string(column);
      msg += ")";
    }
    return msg;
  }

  std::string detail_;
  std::size_t line_;
  std::size_t column_;
};

/// An operation was called on input that violates its structural contract.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

enum class NonConvergenceKind { kOscillation, kSlowConvergence };

/// An iterative procedure gave up. `lower`/`upper` bracket the quantity when
/// the procedure produces one (spectral radius); otherwise both are NaN.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, NonConvergenceKind kind,
                      double lower, double upper)
      : Error(what), kind_(kind), lower_(lower), upper_(upper) {}

  NonConvergenceKind kind() const noexcept { return kind_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  NonConvergenceKind kind_;
  double lower_;
  double upper_;
};

}  // namespace asyncon

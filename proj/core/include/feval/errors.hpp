#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace feval {

// Base class for every error raised by the library. The CLI prints what()
// and exits nonzero.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file or in-memory dataset violates its schema or invariants.
// `row` is the 1-based data row (header excluded) when the problem is
// attributable to a single row.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::optional<std::size_t> row = std::nullopt,
                  std::string column = {});

  std::optional<std::size_t> row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::optional<std::size_t> row_;
  std::string column_;
};

// Argument outside the mathematical domain of an operation
// (e.g. a Brier score with a prediction of 1.3).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An iterative fit stopped at its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_iterate)
      : Error(what), last_iterate_(last_iterate) {}
  double last_iterate() const { return last_iterate_; }

 private:
  double last_iterate_;
};

}  // namespace feval

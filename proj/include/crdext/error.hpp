#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crdext {

enum class ErrorKind {
  Io,
  SchemaMismatch,
  Parse,
  Syntax,
  Validation,
  UnsupportedQuery,
  EmptyColumn,
  NotConjunctive,
  MismatchedFromOrSelect,
  DnfBlowup,
  UnsupportedNegation,
  UnsupportedJoin,
  Estimator,
  Featurization,
  Domain,
  EmptyDataset,
  NonFiniteLoss,
  VersionMismatch,
  DimMismatch,
  Config,
  Gen,
  Capability,
  Overflow,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Byte offsets into the parsed text; start <= end <= text.size().
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const SourceSpan&) const = default;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, SourceSpan span)
      : Error(ErrorKind::Syntax,
              what + " at [" + std::to_string(span.start) + "," + std::to_string(span.end) + ")"),
        span_(span) {}

  SourceSpan span() const noexcept { return span_; }

 private:
  SourceSpan span_;
};

/// CSV cell that is not an integer. Rows are 1-based data rows (header excluded).
class CsvParseError : public Error {
 public:
  CsvParseError(const std::string& file, std::size_t row, std::string column, const std::string& cell)
      : Error(ErrorKind::Parse, file + ": row " + std::to_string(row) + ", column '" + column +
                                    "': not an integer: '" + cell + "'"),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace crdext

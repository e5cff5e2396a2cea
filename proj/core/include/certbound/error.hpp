#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace certbound {

/// Coarse failure classes. The CLI maps these onto exit codes and the
/// machine-readable `error[<category>]` prefix.
enum class ErrorCategory { Parse, Domain, Budget, Certification, Numerical, Usage };

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message) : Error(ErrorCategory::Domain, message) {}
};

}  // namespace certbound

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace condconf {

/// Machine-readable error categories. The CLI maps each to a distinct exit code.
enum class ErrorCategory {
  validation = 2,
  degenerate_design = 3,
  singular_basis = 4,
  unbounded_cutoff = 5,
  contract = 6,
  insufficient_data = 7,
  parse = 8,
  schema = 9,
  io = 10,
  numerical = 11,
};

std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message);
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define CONDCONF_DEFINE_ERROR(Name, Category)                       \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(Category, message) {} \
  };

CONDCONF_DEFINE_ERROR(ValidationError, ErrorCategory::validation)
CONDCONF_DEFINE_ERROR(DegenerateDesignError, ErrorCategory::degenerate_design)
CONDCONF_DEFINE_ERROR(SingularBasisError, ErrorCategory::singular_basis)
CONDCONF_DEFINE_ERROR(UnboundedCutoffError, ErrorCategory::unbounded_cutoff)
CONDCONF_DEFINE_ERROR(ContractError, ErrorCategory::contract)
CONDCONF_DEFINE_ERROR(InsufficientDataError, ErrorCategory::insufficient_data)
CONDCONF_DEFINE_ERROR(SchemaError, ErrorCategory::schema)
CONDCONF_DEFINE_ERROR(IoError, ErrorCategory::io)
CONDCONF_DEFINE_ERROR(NumericalError, ErrorCategory::numerical)

#undef CONDCONF_DEFINE_ERROR

/// Parse failure in a line-oriented input; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace condconf

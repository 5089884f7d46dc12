#include "condconf/errors.hpp"

namespace condconf {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::degenerate_design: return "degenerate_design";
    case ErrorCategory::singular_basis: return "singular_basis";
    case ErrorCategory::unbounded_cutoff: return "unbounded_cutoff";
    case ErrorCategory::contract: return "contract";
    case ErrorCategory::insufficient_data: return "insufficient_data";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::io: return "io";
    case ErrorCategory::numerical: return "numerical";
  }
  return "unknown";
}

Error::Error(ErrorCategory category, const std::string& message)
    : std::runtime_error(message), category_(category) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorCategory::parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

}  // namespace condconf

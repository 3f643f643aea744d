#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace shadowflow {

/// Base of every error raised by the library. Callers that only care about
/// "numerical failure vs bad input" can catch this and inspect `kind()`.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SHADOWFLOW_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

// Conformal factor h fell to or below the configured floor.
SHADOWFLOW_DEFINE_ERROR(MetricSingular)
SHADOWFLOW_DEFINE_ERROR(UnsupportedDimension)
SHADOWFLOW_DEFINE_ERROR(InvalidArgument)
SHADOWFLOW_DEFINE_ERROR(StepSizeUnderflow)
SHADOWFLOW_DEFINE_ERROR(DegenerateFastMotion)
SHADOWFLOW_DEFINE_ERROR(EmptyOverlap)
SHADOWFLOW_DEFINE_ERROR(InsufficientData)
SHADOWFLOW_DEFINE_ERROR(OriginSingular)
SHADOWFLOW_DEFINE_ERROR(BranchMismatch)
SHADOWFLOW_DEFINE_ERROR(DomainError)
SHADOWFLOW_DEFINE_ERROR(GridTooCoarse)
SHADOWFLOW_DEFINE_ERROR(SolverNoConvergence)
SHADOWFLOW_DEFINE_ERROR(BandIdentificationAmbiguous)

#undef SHADOWFLOW_DEFINE_ERROR

namespace detail {
/// Six significant digits for messages; std::to_string rounds small values to 0.
inline std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}
}  // namespace detail

/// Config text could not be tokenized; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error("ParseError", "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Config parsed but a field is unknown or out of range.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error("ValidationError", field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace shadowflow

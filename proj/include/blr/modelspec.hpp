#pragma once

// Declarative description of the affine-mean Normal regression model
//
//   a     ~ prior           (slope)
//   b     ~ prior           (intercept, b >= 0)
//   sigma ~ prior           (noise scale, sigma > 0)
//   Y     ~ Normal(a * X + b, sigma)
//
// and its text format, one statement per line, '#' starts a comment:
//
//   param a ~ Normal(0, 1)
//   param b ~ HalfNormal(1)
//   param sigma ~ HalfNormal(1)
//   likelihood Y ~ Normal(a * X + b, sigma)
//
// The slope takes a Normal prior; intercept and noise scale take HalfNormal
// priors, because both are sampled on the log scale and need positive support.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "blr/error.hpp"

namespace blr {

enum class DistributionKind { Normal, HalfNormal };

struct DistributionSpec {
  DistributionKind kind = DistributionKind::Normal;
  double location = 0.0;  // Normal only; always 0 for HalfNormal
  double scale = 1.0;

  static DistributionSpec normal(double location, double scale);
  static DistributionSpec half_normal(double scale);

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

struct ModelSpec {
  DistributionSpec slope_prior;
  DistributionSpec intercept_prior;
  DistributionSpec noise_prior;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// a ~ Normal(0, 1), b ~ HalfNormal(1), sigma ~ HalfNormal(1).
ModelSpec default_model();

// Throws DomainError when a scale is non-positive or non-finite, or when a
// prior's support does not match its parameter.
void validate(const ModelSpec& spec);

enum class SpecErrorCode {
  Syntax,
  UnknownStatement,
  UnknownParameter,
  UnknownDistribution,
  WrongArity,
  BadNumber,
  NonPositiveScale,
  UnsupportedPrior,
  DuplicateParameter,
  MissingParameter,
  BadLikelihood,
  DuplicateLikelihood,
  MissingLikelihood,
};

std::string_view to_string(SpecErrorCode code);

// Line and column are 1-based byte positions. Errors about something absent
// (missing parameter or likelihood) point one line past the end of input.
class SpecParseError : public Error {
 public:
  SpecParseError(SpecErrorCode code, std::size_t line, std::size_t column, const std::string& detail);

  SpecErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  SpecErrorCode code_;
  std::size_t line_;
  std::size_t column_;
};

ModelSpec parse_model_spec(std::string_view text);
ModelSpec load_model_spec(const std::filesystem::path& path);

// Canonical four-line text; numbers in shortest round-trip form.
std::string format_model_spec(const ModelSpec& spec);

}  // namespace blr

#pragma once

// Log densities of the regression model and their gradients.
//
// Sampling happens in unconstrained coordinates z = (a, log b, log sigma).
// The log posterior in z is
//
//   log p(Y | a, b, sigma) + log p(a) + log p(b) + log p(sigma) + z_b + z_sigma
//
// where the last two terms are the log-Jacobian of the exp transforms. The
// evidence p(Y) is constant in z and omitted.

#include <array>
#include <limits>

#include "blr/corpus.hpp"
#include "blr/modelspec.hpp"

namespace blr {

// Zero probability. Samplers reject any state with this value.
inline constexpr double kImpossible = -std::numeric_limits<double>::infinity();

// -1/2 log(2 pi sigma^2) - (x - mu)^2 / (2 sigma^2). Throws DomainError if sigma <= 0.
double log_density_normal(double x, double mu, double sigma);

// log 2 + log_density_normal(x, 0, scale) for x >= 0, kImpossible below 0.
double log_density_half_normal(double x, double scale);

double log_density(const DistributionSpec& dist, double x);

struct ParamVector {
  double a = 0.0;
  double b = 1.0;      // >= 0
  double sigma = 1.0;  // > 0

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

struct UnconstrainedVector {
  double a = 0.0;
  double log_b = 0.0;
  double log_sigma = 0.0;

  friend bool operator==(const UnconstrainedVector&, const UnconstrainedVector&) = default;
};

// Throws DomainError when b or sigma is not strictly positive and finite.
UnconstrainedVector to_unconstrained(const ParamVector& p);
ParamVector to_constrained(const UnconstrainedVector& z);

double log_prior(const ParamVector& p, const ModelSpec& spec);

// Sum of per-point Normal log densities. Throws DataError on empty data.
double log_likelihood(const ParamVector& p, const Dataset& data);

inline double log_jacobian(const UnconstrainedVector& z) { return z.log_b + z.log_sigma; }

// log_prior + log_likelihood + log_jacobian, or kImpossible if the
// transformed point is degenerate (sigma underflows) or the sum is not finite.
double log_posterior_unconstrained(const UnconstrainedVector& z, const ModelSpec& spec, const Dataset& data);

// d/dz of log_posterior_unconstrained, ordered (a, log b, log sigma).
std::array<double, 3> grad_log_posterior_unconstrained(const UnconstrainedVector& z, const ModelSpec& spec,
                                                       const Dataset& data);

// Value and gradient in one pass over the data.
double log_posterior_and_gradient(const UnconstrainedVector& z, const ModelSpec& spec, const Dataset& data,
                                  std::array<double, 3>& grad);

}  // namespace blr

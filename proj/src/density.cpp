#include "blr/density.hpp"

#include <cmath>
#include <numbers>

namespace blr {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

// d/dx log p(x) for the prior, on the constrained scale.
double prior_score(const DistributionSpec& d, double x) {
  const double loc = d.kind == DistributionKind::Normal ? d.location : 0.0;
  return -(x - loc) / (d.scale * d.scale);
}

}  // namespace

double log_density_normal(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("normal scale must be positive");
  const double r = (x - mu) / sigma;
  return -kHalfLog2Pi - std::log(sigma) - 0.5 * r * r;
}

double log_density_half_normal(double x, double scale) {
  if (!(scale > 0.0)) throw DomainError("half-normal scale must be positive");
  if (x < 0.0) return kImpossible;
  return std::numbers::ln2 + log_density_normal(x, 0.0, scale);
}

double log_density(const DistributionSpec& dist, double x) {
  return dist.kind == DistributionKind::Normal ? log_density_normal(x, dist.location, dist.scale)
                                               : log_density_half_normal(x, dist.scale);
}

UnconstrainedVector to_unconstrained(const ParamVector& p) {
  if (!positive_finite(p.b)) throw DomainError("intercept must be strictly positive to transform");
  if (!positive_finite(p.sigma)) throw DomainError("sigma must be strictly positive to transform");
  return {p.a, std::log(p.b), std::log(p.sigma)};
}

ParamVector to_constrained(const UnconstrainedVector& z) {
  return {z.a, std::exp(z.log_b), std::exp(z.log_sigma)};
}

double log_prior(const ParamVector& p, const ModelSpec& spec) {
  return log_density(spec.slope_prior, p.a) + log_density(spec.intercept_prior, p.b) +
         log_density(spec.noise_prior, p.sigma);
}

double log_likelihood(const ParamVector& p, const Dataset& data) {
  if (data.empty()) throw DataError("likelihood needs at least one observation");
  double sum = 0.0;
  for (const auto& pt : data.points) sum += log_density_normal(pt.y, p.a * pt.x + p.b, p.sigma);
  return sum;
}

double log_posterior_unconstrained(const UnconstrainedVector& z, const ModelSpec& spec, const Dataset& data) {
  if (data.empty()) throw DataError("posterior needs at least one observation");
  const ParamVector p = to_constrained(z);
  if (!positive_finite(p.sigma) || !std::isfinite(p.b)) return kImpossible;
  const double lp = log_prior(p, spec) + log_likelihood(p, data) + log_jacobian(z);
  return std::isfinite(lp) ? lp : kImpossible;
}

double log_posterior_and_gradient(const UnconstrainedVector& z, const ModelSpec& spec, const Dataset& data,
                                  std::array<double, 3>& grad) {
  if (data.empty()) throw DataError("posterior needs at least one observation");
  grad = {0.0, 0.0, 0.0};
  const ParamVector p = to_constrained(z);
  if (!positive_finite(p.sigma) || !std::isfinite(p.b)) return kImpossible;

  const double inv_var = 1.0 / (p.sigma * p.sigma);
  double ll = 0.0;
  double sum_rx = 0.0;
  double sum_r = 0.0;
  double sum_r2 = 0.0;
  for (const auto& pt : data.points) {
    const double r = pt.y - (p.a * pt.x + p.b);
    ll += log_density_normal(pt.y, p.a * pt.x + p.b, p.sigma);
    sum_rx += r * pt.x;
    sum_r += r;
    sum_r2 += r * r;
  }
  const double m = static_cast<double>(data.size());

  // Likelihood scores on the constrained scale.
  const double dll_da = sum_rx * inv_var;
  const double dll_db = sum_r * inv_var;
  const double dll_dsigma = -m / p.sigma + sum_r2 * inv_var / p.sigma;

  // Chain rule through b = exp(z_b), sigma = exp(z_sigma); +1 from each Jacobian term.
  grad[0] = dll_da + prior_score(spec.slope_prior, p.a);
  grad[1] = (dll_db + prior_score(spec.intercept_prior, p.b)) * p.b + 1.0;
  grad[2] = (dll_dsigma + prior_score(spec.noise_prior, p.sigma)) * p.sigma + 1.0;

  const double lp = log_prior(p, spec) + ll + log_jacobian(z);
  if (!std::isfinite(lp)) {
    grad = {0.0, 0.0, 0.0};
    return kImpossible;
  }
  return lp;
}

std::array<double, 3> grad_log_posterior_unconstrained(const UnconstrainedVector& z, const ModelSpec& spec,
                                                       const Dataset& data) {
  std::array<double, 3> grad{};
  log_posterior_and_gradient(z, spec, data, grad);
  return grad;
}

}  // namespace blr

#pragma once

// Posterior diagnostics and summaries, line ensembles, posterior predictive
// draws, prior-sampling evidence estimates and the exact Normal-Normal
// conjugate model used to check the samplers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blr/corpus.hpp"
#include "blr/modelspec.hpp"
#include "blr/sampler.hpp"

namespace blr {

// Gelman-Rubin potential scale reduction over 2 * n_chains half-chains (the
// middle draw of an odd-length chain is dropped). Needs n_draws >= 4; throws
// DataError when every half-chain has zero variance.
double split_rhat(const Chains& chains, std::string_view param);
double split_rhat(std::span<const std::vector<double>> chains);

// Multi-chain effective sample size with Geyer's initial positive (and
// monotone) sequence truncation. Anticorrelated chains may exceed the number
// of draws. Same preconditions as split_rhat.
double ess(const Chains& chains, std::string_view param);
double ess(std::span<const std::vector<double>> chains);

// Type-7 quantile: linear interpolation between order statistics at (n - 1) p.
double quantile_sorted(std::span<const double> sorted, double p);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  // Absent when the diagnostic is undefined (fewer than 4 draws, zero variance).
  std::optional<double> rhat;
  std::optional<double> ess;  // capped at total draws
};

struct Summary {
  std::vector<ParameterSummary> params;
  std::size_t total_draws = 0;

  // Throws DataError for an unknown name.
  const ParameterSummary& at(std::string_view name) const;
};

Summary summarize(const Chains& chains);

struct RegressionLine {
  double slope = 0.0;
  double intercept = 0.0;

  friend bool operator==(const RegressionLine&, const RegressionLine&) = default;
};

struct LineEnsemble {
  std::vector<RegressionLine> lines;
};

// Indices floor(i * total / n), i = 0..n-1, into the pooled chain-major
// draw sequence. Throws DataError unless 1 <= n <= total.
std::vector<std::size_t> thinning_indices(std::size_t total, std::size_t n);

// Needs parameters named "a" and "b".
LineEnsemble draw_line_ensemble(const Chains& chains, std::size_t n);

// y ~ Normal(a x + b, sigma) for each thinned draw (a, b, sigma).
std::vector<double> posterior_predictive(const Chains& chains, double x, std::size_t n, std::uint64_t seed);

// A model whose evidence can be estimated by sampling its prior.
class EvidenceModel {
 public:
  virtual ~EvidenceModel() = default;
  virtual std::size_t dimension() const = 0;
  virtual void draw_prior(Rng& rng, std::span<double> theta) const = 0;
  virtual double log_likelihood(std::span<const double> theta) const = 0;
};

class RegressionEvidenceModel final : public EvidenceModel {
 public:
  RegressionEvidenceModel(ModelSpec spec, Dataset data);
  std::size_t dimension() const override { return 3; }
  void draw_prior(Rng& rng, std::span<double> theta) const override;
  double log_likelihood(std::span<const double> theta) const override;

 private:
  ModelSpec spec_;
  Dataset data_;
};

struct EvidenceEstimate {
  double log_evidence = 0.0;
  double mc_standard_error = 0.0;  // delta-method error of the log-mean-exp
  std::size_t n_prior_samples = 0;
};

// Prior draws are generated in fixed blocks with per-block generators, so
// the estimate does not depend on the number of threads.
inline constexpr std::size_t kEvidenceBlock = 4096;

// log mean_j p(Y | theta_j), theta_j ~ prior. Needs n >= 100; throws DataError
// when every likelihood term is zero.
EvidenceEstimate estimate_evidence(const EvidenceModel& model, std::size_t n_prior_samples, std::uint64_t seed,
                                   Execution exec = Execution::Parallel);
EvidenceEstimate estimate_evidence(const ModelSpec& spec, const Dataset& data, std::size_t n_prior_samples,
                                   std::uint64_t seed, Execution exec = Execution::Parallel);

// exp(log evidence 1 - log evidence 2). Throws DomainError on non-finite input.
double bayes_factor(const EvidenceEstimate& e1, const EvidenceEstimate& e2);
double log_bayes_factor(const EvidenceEstimate& e1, const EvidenceEstimate& e2);

// Normal belief about an unknown mean observed with known noise.
struct ConjugateNormalState {
  double mean = 0.0;
  double variance = 1.0;

  friend bool operator==(const ConjugateNormalState&, const ConjugateNormalState&) = default;
};

// Precision-weighted update with one observation. Throws DomainError if
// obs_sd <= 0 or the prior variance is negative.
ConjugateNormalState conjugate_update(const ConjugateNormalState& prior, double y, double obs_sd);
// Left fold of conjugate_update.
ConjugateNormalState sequential_update(const ConjugateNormalState& prior, std::span<const double> ys, double obs_sd);
// Closed form from the sufficient statistics (n, sum y).
ConjugateNormalState batch_update(const ConjugateNormalState& prior, std::span<const double> ys, double obs_sd);

// log p(ys) with the mean integrated out.
double conjugate_log_marginal(const ConjugateNormalState& prior, std::span<const double> ys, double obs_sd);

// mu ~ Normal(prior), y_i ~ Normal(mu, obs_sd): exact posterior and evidence
// are known, so sampler and evidence output can be checked against them.
class ConjugateNormalModel final : public Target, public EvidenceModel {
 public:
  ConjugateNormalModel(ConjugateNormalState prior, std::vector<double> ys, double obs_sd);

  std::size_t dimension() const override { return 1; }
  std::vector<std::string> parameter_names() const override { return {"mu"}; }
  double log_density(std::span<const double> z) const override;
  double log_density_and_gradient(std::span<const double> z, std::span<double> grad) const override;
  void draw_initial(Rng& rng, std::span<double> z) const override;
  void to_constrained(std::span<const double> z, std::span<double> theta) const override;

  void draw_prior(Rng& rng, std::span<double> theta) const override;
  double log_likelihood(std::span<const double> theta) const override;

  ConjugateNormalState posterior() const;
  double log_marginal() const;

 private:
  ConjugateNormalState prior_;
  std::vector<double> ys_;
  double obs_sd_;
};

}  // namespace blr

#pragma once

// MCMC samplers: random-walk Metropolis and fixed-length HMC with
// dual-averaging step-size adaptation during warmup.
//
// Every chain owns an std::mt19937_64 seeded with (mix(seed) XOR chain index), so
// a chain's draws do not depend on how chains are scheduled. run with
// Execution::Parallel (OpenMP over chains) or Execution::Serial (the
// reference loop); both produce bit-identical Chains.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blr/corpus.hpp"
#include "blr/modelspec.hpp"

namespace blr {

using Rng = std::mt19937_64;

// A log density on unconstrained R^d plus the map back to the reported
// (constrained) parameters.
class Target {
 public:
  virtual ~Target() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;

  // kImpossible for zero-density states.
  virtual double log_density(std::span<const double> z) const = 0;
  virtual double log_density_and_gradient(std::span<const double> z, std::span<double> grad) const = 0;

  // Initial state for a chain, drawn from the prior.
  virtual void draw_initial(Rng& rng, std::span<double> z) const = 0;
  virtual void to_constrained(std::span<const double> z, std::span<double> theta) const = 0;
};

// Posterior of the affine-mean Normal regression, parameters (a, b, sigma).
class RegressionTarget final : public Target {
 public:
  RegressionTarget(ModelSpec spec, Dataset data);

  std::size_t dimension() const override { return 3; }
  std::vector<std::string> parameter_names() const override { return {"a", "b", "sigma"}; }
  double log_density(std::span<const double> z) const override;
  double log_density_and_gradient(std::span<const double> z, std::span<double> grad) const override;
  void draw_initial(Rng& rng, std::span<double> z) const override;
  void to_constrained(std::span<const double> z, std::span<double> theta) const override;

  const ModelSpec& spec() const noexcept { return spec_; }
  const Dataset& data() const noexcept { return data_; }

 private:
  ModelSpec spec_;
  Dataset data_;
};

enum class Algorithm { RWM, HMC };
enum class Execution { Parallel, Serial };

std::string_view to_string(Algorithm algorithm);

struct SamplerConfig {
  std::size_t n_chains = 4;
  std::size_t n_draws = 4000;  // retained per chain
  std::size_t n_warmup = 1000;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::HMC;
  double rwm_step = 0.1;
  double hmc_step = 0.1;  // initial value; adapted during warmup
  std::size_t hmc_leapfrog = 20;
  double target_accept = 0.8;
  // Each HMC iteration scales the step by U(1 - jitter, 1 + jitter); keeps
  // a fixed trajectory length from locking onto a period of the target.
  double hmc_jitter = 0.1;

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

// Throws DomainError on violated invariants.
void validate(const SamplerConfig& cfg);

// |H(end) - H(start)| above this marks a divergent transition.
inline constexpr double kDivergenceThreshold = 1000.0;

struct ChainStats {
  double accept_rate = 0.0;        // post-warmup
  std::size_t divergences = 0;     // post-warmup
  std::size_t warmup_divergences = 0;
  double step_size = 0.0;          // final (adapted) step for HMC, rwm_step for RWM
  std::uint64_t rng_stream = 0;    // seed the chain's generator was built from

  friend bool operator==(const ChainStats&, const ChainStats&) = default;
};

// Draws stored on the constrained scale, laid out [chain][draw][param].
class Chains {
 public:
  Chains(std::vector<std::string> names, std::size_t n_chains, std::size_t n_draws, std::vector<double> draws,
         std::vector<ChainStats> stats, SamplerConfig config);

  std::size_t n_chains() const noexcept { return n_chains_; }
  std::size_t n_draws() const noexcept { return n_draws_; }
  std::size_t n_params() const noexcept { return names_.size(); }
  std::size_t total_draws() const noexcept { return n_chains_ * n_draws_; }

  const std::vector<std::string>& parameter_names() const noexcept { return names_; }
  // Throws DataError for an unknown name.
  std::size_t param_index(std::string_view name) const;

  double at(std::size_t chain, std::size_t draw, std::size_t param) const {
    return draws_[(chain * n_draws_ + draw) * n_params() + param];
  }
  // One draw as a contiguous parameter vector.
  std::span<const double> draw(std::size_t chain, std::size_t draw) const {
    return {draws_.data() + (chain * n_draws_ + draw) * n_params(), n_params()};
  }
  // Pooled index i = chain * n_draws + draw.
  std::span<const double> pooled_draw(std::size_t i) const {
    return {draws_.data() + i * n_params(), n_params()};
  }

  std::vector<double> chain_values(std::size_t chain, std::size_t param) const;
  std::vector<double> pooled_values(std::size_t param) const;

  const std::vector<double>& raw() const noexcept { return draws_; }
  const std::vector<ChainStats>& stats() const noexcept { return stats_; }
  const SamplerConfig& config() const noexcept { return config_; }

  // More than 10% of retained HMC transitions diverged in some chain.
  bool divergence_warning() const;

  friend bool operator==(const Chains&, const Chains&) = default;

 private:
  std::vector<std::string> names_;
  std::size_t n_chains_;
  std::size_t n_draws_;
  std::vector<double> draws_;
  std::vector<ChainStats> stats_;
  SamplerConfig config_;
};

Chains sample_rwm(const Target& target, const SamplerConfig& cfg, Execution exec = Execution::Parallel);
Chains sample_hmc(const Target& target, const SamplerConfig& cfg, Execution exec = Execution::Parallel);
// Dispatches on cfg.algorithm.
Chains sample(const Target& target, const SamplerConfig& cfg, Execution exec = Execution::Parallel);

Chains sample_rwm(const ModelSpec& spec, const Dataset& data, const SamplerConfig& cfg,
                  Execution exec = Execution::Parallel);
Chains sample_hmc(const ModelSpec& spec, const Dataset& data, const SamplerConfig& cfg,
                  Execution exec = Execution::Parallel);

}  // namespace blr

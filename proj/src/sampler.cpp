#include "blr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "blr/density.hpp"
#include "mix64.hpp"

namespace blr {

namespace {

constexpr int kMaxInitAttempts = 100;

// Dual averaging constants (Nesterov / Hoffman-Gelman defaults).
constexpr double kDaGamma = 0.05;
constexpr double kDaT0 = 10.0;
constexpr double kDaKappa = 0.75;

UnconstrainedVector as_z(std::span<const double> z) { return {z[0], z[1], z[2]}; }

// The user seed is hashed before the chain index is XORed in; with a raw
// seed ^ chain, seeds 0..3 would share one set of four streams.
std::uint64_t stream_seed(std::uint64_t seed, std::size_t chain) {
  return detail::mix64(seed) ^ static_cast<std::uint64_t>(chain);
}

double initialize(const Target& target, Rng& rng, std::span<double> z) {
  for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
    target.draw_initial(rng, z);
    const double lp = target.log_density(z);
    if (std::isfinite(lp)) return lp;
  }
  throw Error("could not find an initial point with finite log density after " +
              std::to_string(kMaxInitAttempts) + " attempts");
}

struct ChainOutput {
  std::span<double> draws;  // n_draws * dim, constrained scale
  ChainStats stats;
};

void store(const Target& target, std::span<const double> z, std::span<double> out) {
  target.to_constrained(z, out);
}

void run_rwm_chain(const Target& target, const SamplerConfig& cfg, std::size_t chain, ChainOutput& out) {
  const std::size_t dim = target.dimension();
  out.stats.rng_stream = stream_seed(cfg.seed, chain);
  Rng rng(out.stats.rng_stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> z(dim), proposal(dim);
  double lp = initialize(target, rng, z);

  std::size_t accepted = 0;
  const std::size_t total = cfg.n_warmup + cfg.n_draws;
  for (std::size_t iter = 0; iter < total; ++iter) {
    for (std::size_t k = 0; k < dim; ++k) proposal[k] = z[k] + cfg.rwm_step * normal(rng);
    const double lp_new = target.log_density(proposal);
    const double u = uniform(rng);
    const bool accept = std::isfinite(lp_new) && std::log(u) < lp_new - lp;
    if (accept) {
      z.swap(proposal);
      lp = lp_new;
    }
    if (iter >= cfg.n_warmup) {
      const std::size_t d = iter - cfg.n_warmup;
      if (accept) ++accepted;
      store(target, z, out.draws.subspan(d * dim, dim));
    }
  }
  out.stats.accept_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_draws);
  out.stats.step_size = cfg.rwm_step;
}

struct Trajectory {
  double log_density;
  double energy_change;  // H(end) - H(start)
  bool divergent;
};

// L leapfrog steps from (z, p); z, p, grad are updated in place.
Trajectory leapfrog(const Target& target, std::vector<double>& z, std::vector<double>& p, std::vector<double>& grad,
                    double lp, double step, std::size_t steps) {
  const std::size_t dim = z.size();
  double kinetic0 = 0.0;
  for (double v : p) kinetic0 += 0.5 * v * v;
  const double h0 = -lp + kinetic0;

  double lp_new = lp;
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < dim; ++k) p[k] += 0.5 * step * grad[k];
    for (std::size_t k = 0; k < dim; ++k) z[k] += step * p[k];
    lp_new = target.log_density_and_gradient(z, grad);
    if (!std::isfinite(lp_new)) return {kImpossible, std::numeric_limits<double>::infinity(), true};
    for (std::size_t k = 0; k < dim; ++k) p[k] += 0.5 * step * grad[k];
  }
  double kinetic1 = 0.0;
  for (double v : p) kinetic1 += 0.5 * v * v;
  const double dh = (-lp_new + kinetic1) - h0;
  const bool divergent = !std::isfinite(dh) || std::abs(dh) > kDivergenceThreshold;
  return {lp_new, dh, divergent};
}

void run_hmc_chain(const Target& target, const SamplerConfig& cfg, std::size_t chain, ChainOutput& out) {
  const std::size_t dim = target.dimension();
  out.stats.rng_stream = stream_seed(cfg.seed, chain);
  Rng rng(out.stats.rng_stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> z(dim), grad(dim);
  initialize(target, rng, z);
  double lp = target.log_density_and_gradient(z, grad);

  std::vector<double> z_prop(dim), p(dim), grad_prop(dim);

  double step = cfg.hmc_step;
  const double mu = std::log(10.0 * cfg.hmc_step);
  double h_bar = 0.0;
  double log_step_bar = 0.0;

  std::size_t accepted = 0;
  const std::size_t total = cfg.n_warmup + cfg.n_draws;
  for (std::size_t iter = 0; iter < total; ++iter) {
    const bool warmup = iter < cfg.n_warmup;
    for (std::size_t k = 0; k < dim; ++k) p[k] = normal(rng);
    const double jitter = 1.0 + cfg.hmc_jitter * (2.0 * uniform(rng) - 1.0);

    z_prop = z;
    grad_prop = grad;
    const Trajectory t = leapfrog(target, z_prop, p, grad_prop, lp, step * jitter, cfg.hmc_leapfrog);
    const double u = uniform(rng);

    double accept_prob = 0.0;
    bool accept = false;
    if (t.divergent) {
      if (warmup) {
        ++out.stats.warmup_divergences;
      } else {
        ++out.stats.divergences;
      }
    } else {
      accept_prob = std::min(1.0, std::exp(-t.energy_change));
      accept = std::log(u) < -t.energy_change;
    }
    if (accept) {
      z.swap(z_prop);
      grad.swap(grad_prop);
      lp = t.log_density;
    }

    if (warmup) {
      const double m = static_cast<double>(iter + 1);
      h_bar = (1.0 - 1.0 / (m + kDaT0)) * h_bar + (cfg.target_accept - accept_prob) / (m + kDaT0);
      const double log_step = mu - std::sqrt(m) / kDaGamma * h_bar;
      const double eta = std::pow(m, -kDaKappa);
      log_step_bar = eta * log_step + (1.0 - eta) * log_step_bar;
      step = std::exp(log_step);
      if (iter + 1 == cfg.n_warmup) step = std::exp(log_step_bar);
    } else {
      const std::size_t d = iter - cfg.n_warmup;
      if (accept) ++accepted;
      store(target, z, out.draws.subspan(d * dim, dim));
    }
  }
  out.stats.accept_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_draws);
  out.stats.step_size = step;
}

using ChainKernel = void (*)(const Target&, const SamplerConfig&, std::size_t, ChainOutput&);

Chains run_chains(const Target& target, const SamplerConfig& cfg, Execution exec, ChainKernel kernel) {
  validate(cfg);
  const std::size_t dim = target.dimension();
  const std::size_t per_chain = cfg.n_draws * dim;
  std::vector<double> draws(cfg.n_chains * per_chain);
  std::vector<ChainOutput> outputs(cfg.n_chains);
  for (std::size_t c = 0; c < cfg.n_chains; ++c) {
    outputs[c].draws = std::span<double>(draws).subspan(c * per_chain, per_chain);
  }
  std::vector<std::exception_ptr> errors(cfg.n_chains);

  const auto n = static_cast<std::ptrdiff_t>(cfg.n_chains);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static, 1)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      try {
        kernel(target, cfg, static_cast<std::size_t>(c), outputs[static_cast<std::size_t>(c)]);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      try {
        kernel(target, cfg, static_cast<std::size_t>(c), outputs[static_cast<std::size_t>(c)]);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ChainStats> stats;
  stats.reserve(cfg.n_chains);
  for (const auto& o : outputs) stats.push_back(o.stats);
  return Chains(target.parameter_names(), cfg.n_chains, cfg.n_draws, std::move(draws), std::move(stats), cfg);
}

}  // namespace

RegressionTarget::RegressionTarget(ModelSpec spec, Dataset data) : spec_(spec), data_(std::move(data)) {
  validate(spec_);
  if (data_.empty()) throw DataError("sampling needs at least one observation");
}

double RegressionTarget::log_density(std::span<const double> z) const {
  return log_posterior_unconstrained(as_z(z), spec_, data_);
}

double RegressionTarget::log_density_and_gradient(std::span<const double> z, std::span<double> grad) const {
  std::array<double, 3> g{};
  const double lp = log_posterior_and_gradient(as_z(z), spec_, data_, g);
  std::copy(g.begin(), g.end(), grad.begin());
  return lp;
}

void RegressionTarget::draw_initial(Rng& rng, std::span<double> z) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = spec_.slope_prior.location + spec_.slope_prior.scale * normal(rng);
  const double b = spec_.intercept_prior.scale * std::abs(normal(rng));
  const double sigma = spec_.noise_prior.scale * std::abs(normal(rng));
  z[0] = a;
  z[1] = std::log(b);
  z[2] = std::log(sigma);
}

void RegressionTarget::to_constrained(std::span<const double> z, std::span<double> theta) const {
  const ParamVector p = blr::to_constrained(as_z(z));
  theta[0] = p.a;
  theta[1] = p.b;
  theta[2] = p.sigma;
}

std::string_view to_string(Algorithm algorithm) { return algorithm == Algorithm::HMC ? "hmc" : "rwm"; }

void validate(const SamplerConfig& cfg) {
  if (cfg.n_chains < 1) throw DomainError("need at least one chain");
  if (cfg.n_draws < 1) throw DomainError("need at least one draw per chain");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0))
    throw DomainError("target acceptance must lie in (0, 1)");
  if (!(cfg.rwm_step > 0.0) || !std::isfinite(cfg.rwm_step)) throw DomainError("RWM step must be positive");
  if (!(cfg.hmc_step > 0.0) || !std::isfinite(cfg.hmc_step)) throw DomainError("HMC step must be positive");
  if (cfg.hmc_leapfrog < 1) throw DomainError("HMC needs at least one leapfrog step");
  if (!(cfg.hmc_jitter >= 0.0 && cfg.hmc_jitter < 1.0)) throw DomainError("HMC jitter must lie in [0, 1)");
}

Chains::Chains(std::vector<std::string> names, std::size_t n_chains, std::size_t n_draws, std::vector<double> draws,
               std::vector<ChainStats> stats, SamplerConfig config)
    : names_(std::move(names)),
      n_chains_(n_chains),
      n_draws_(n_draws),
      draws_(std::move(draws)),
      stats_(std::move(stats)),
      config_(config) {
  if (names_.empty()) throw DataError("chains need at least one parameter");
  if (draws_.size() != n_chains_ * n_draws_ * names_.size()) throw DataError("draw array has the wrong size");
  if (stats_.size() != n_chains_) throw DataError("need one stats record per chain");
}

std::size_t Chains::param_index(std::string_view name) const {
  for (std::size_t k = 0; k < names_.size(); ++k) {
    if (names_[k] == name) return k;
  }
  throw DataError("unknown parameter '" + std::string(name) + "'");
}

std::vector<double> Chains::chain_values(std::size_t chain, std::size_t param) const {
  std::vector<double> out(n_draws_);
  for (std::size_t d = 0; d < n_draws_; ++d) out[d] = at(chain, d, param);
  return out;
}

std::vector<double> Chains::pooled_values(std::size_t param) const {
  std::vector<double> out(total_draws());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = draws_[i * n_params() + param];
  return out;
}

bool Chains::divergence_warning() const {
  return std::any_of(stats_.begin(), stats_.end(), [this](const ChainStats& s) {
    return static_cast<double>(s.divergences) > 0.1 * static_cast<double>(n_draws_);
  });
}

Chains sample_rwm(const Target& target, const SamplerConfig& cfg, Execution exec) {
  return run_chains(target, cfg, exec, run_rwm_chain);
}

Chains sample_hmc(const Target& target, const SamplerConfig& cfg, Execution exec) {
  return run_chains(target, cfg, exec, run_hmc_chain);
}

Chains sample(const Target& target, const SamplerConfig& cfg, Execution exec) {
  return cfg.algorithm == Algorithm::HMC ? sample_hmc(target, cfg, exec) : sample_rwm(target, cfg, exec);
}

Chains sample_rwm(const ModelSpec& spec, const Dataset& data, const SamplerConfig& cfg, Execution exec) {
  return sample_rwm(RegressionTarget(spec, data), cfg, exec);
}

Chains sample_hmc(const ModelSpec& spec, const Dataset& data, const SamplerConfig& cfg, Execution exec) {
  return sample_hmc(RegressionTarget(spec, data), cfg, exec);
}

}  // namespace blr

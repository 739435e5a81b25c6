#include "blr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "blr/density.hpp"
#include "mix64.hpp"

namespace blr {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// n - 1 denominator.
double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

std::vector<std::vector<double>> per_chain(const Chains& chains, std::string_view param) {
  const std::size_t k = chains.param_index(param);
  std::vector<std::vector<double>> out;
  out.reserve(chains.n_chains());
  for (std::size_t c = 0; c < chains.n_chains(); ++c) out.push_back(chains.chain_values(c, k));
  return out;
}

void check_diagnostic_input(std::span<const std::vector<double>> chains) {
  if (chains.empty()) throw DataError("diagnostics need at least one chain");
  const std::size_t n = chains.front().size();
  if (n < 4) throw DataError("diagnostics need at least 4 draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw DataError("all chains must have the same length");
  }
}

// Biased (1/n) autocovariance at lag t.
double autocovariance(std::span<const double> x, double mean, std::size_t lag) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(n);
}


}  // namespace

double split_rhat(std::span<const std::vector<double>> chains) {
  check_diagnostic_input(chains);
  const std::size_t n = chains.front().size();
  const std::size_t half = n / 2;
  std::vector<std::span<const double>> groups;
  for (const auto& c : chains) {
    groups.emplace_back(c.data(), half);
    groups.emplace_back(c.data() + (n - half), half);
  }
  const double len = static_cast<double>(half);
  std::vector<double> means, vars;
  for (auto g : groups) {
    means.push_back(mean_of(g));
    vars.push_back(variance_of(g));
  }
  const double w = mean_of(vars);
  if (!(w > 0.0)) throw DataError("split R-hat is undefined: zero within-chain variance");
  const double b_over_n = variance_of(means);
  const double var_plus = (len - 1.0) / len * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double split_rhat(const Chains& chains, std::string_view param) {
  const auto values = per_chain(chains, param);
  return split_rhat(values);
}

double ess(std::span<const std::vector<double>> chains) {
  check_diagnostic_input(chains);
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  const double nd = static_cast<double>(n);

  std::vector<double> chain_mean(m);
  std::vector<double> chain_var(m);
  for (std::size_t c = 0; c < m; ++c) {
    chain_mean[c] = mean_of(chains[c]);
    chain_var[c] = autocovariance(chains[c], chain_mean[c], 0) * nd / (nd - 1.0);
  }
  const double mean_var = mean_of(chain_var);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += variance_of(chain_mean);
  if (!(mean_var > 0.0) || !(var_plus > 0.0)) throw DataError("ESS is undefined: zero within-chain variance");

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov += autocovariance(chains[c], chain_mean[c], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (mean_var - acov) / var_plus;
  };

  std::vector<double> rho_hat(n, 0.0);
  rho_hat[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = rho(1);
  rho_hat[1] = rho_odd;

  std::size_t t = 1;
  while (t + 5 < n && std::isfinite(rho_even + rho_odd) && rho_even + rho_odd > 0.0) {
    rho_even = rho(t + 1);
    rho_odd = rho(t + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho_hat[t + 1] = rho_even;
      rho_hat[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0) rho_hat[max_t + 1] = rho_even;

  // Enforce monotone decrease of the paired sums.
  for (std::size_t s = 1; s + 3 <= max_t; s += 2) {
    if (rho_hat[s + 1] + rho_hat[s + 2] > rho_hat[s - 1] + rho_hat[s]) {
      rho_hat[s + 1] = (rho_hat[s - 1] + rho_hat[s]) / 2.0;
      rho_hat[s + 2] = rho_hat[s + 1];
    }
  }

  const double total = static_cast<double>(m) * nd;
  double tau = -1.0 + 2.0 * std::accumulate(rho_hat.begin(), rho_hat.begin() + static_cast<std::ptrdiff_t>(max_t), 0.0) +
               rho_hat[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

double ess(const Chains& chains, std::string_view param) {
  const auto values = per_chain(chains, param);
  return ess(values);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

const ParameterSummary& Summary::at(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  throw DataError("summary has no parameter '" + std::string(name) + "'");
}

Summary summarize(const Chains& chains) {
  if (chains.total_draws() == 0) throw DataError("cannot summarize empty chains");
  Summary out;
  out.total_draws = chains.total_draws();
  const auto total = static_cast<double>(chains.total_draws());
  for (std::size_t k = 0; k < chains.n_params(); ++k) {
    ParameterSummary s;
    s.name = chains.parameter_names()[k];
    auto values = chains.pooled_values(k);
    s.mean = mean_of(values);
    s.sd = values.size() > 1 ? std::sqrt(variance_of(values)) : 0.0;
    std::sort(values.begin(), values.end());
    s.q025 = quantile_sorted(values, 0.025);
    s.q50 = quantile_sorted(values, 0.5);
    s.q975 = quantile_sorted(values, 0.975);
    if (chains.n_draws() >= 4) {
      try {
        s.rhat = split_rhat(chains, s.name);
        s.ess = std::min(ess(chains, s.name), total);
      } catch (const DataError&) {
        s.rhat.reset();
        s.ess.reset();
      }
    }
    out.params.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> thinning_indices(std::size_t total, std::size_t n) {
  if (n == 0) throw DataError("ensemble size must be >= 1");
  if (n > total) {
    throw DataError("ensemble size " + std::to_string(n) + " exceeds the " + std::to_string(total) +
                    " available draws");
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    // i * total fits easily in 64 bits for any realistic draw count.
    idx[i] = i * total / n;
  }
  return idx;
}

LineEnsemble draw_line_ensemble(const Chains& chains, std::size_t n) {
  const std::size_t ka = chains.param_index("a");
  const std::size_t kb = chains.param_index("b");
  LineEnsemble out;
  for (std::size_t i : thinning_indices(chains.total_draws(), n)) {
    const auto d = chains.pooled_draw(i);
    out.lines.push_back({d[ka], d[kb]});
  }
  return out;
}

std::vector<double> posterior_predictive(const Chains& chains, double x, std::size_t n, std::uint64_t seed) {
  const std::size_t ka = chains.param_index("a");
  const std::size_t kb = chains.param_index("b");
  const std::size_t ks = chains.param_index("sigma");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i : thinning_indices(chains.total_draws(), n)) {
    const auto d = chains.pooled_draw(i);
    out.push_back(d[ka] * x + d[kb] + d[ks] * normal(rng));
  }
  return out;
}

RegressionEvidenceModel::RegressionEvidenceModel(ModelSpec spec, Dataset data)
    : spec_(spec), data_(std::move(data)) {
  validate(spec_);
  if (data_.empty()) throw DataError("evidence needs at least one observation");
}

void RegressionEvidenceModel::draw_prior(Rng& rng, std::span<double> theta) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  theta[0] = spec_.slope_prior.location + spec_.slope_prior.scale * normal(rng);
  theta[1] = spec_.intercept_prior.scale * std::abs(normal(rng));
  theta[2] = spec_.noise_prior.scale * std::abs(normal(rng));
}

double RegressionEvidenceModel::log_likelihood(std::span<const double> theta) const {
  if (!(theta[2] > 0.0)) return kImpossible;
  return blr::log_likelihood({theta[0], theta[1], theta[2]}, data_);
}

EvidenceEstimate estimate_evidence(const EvidenceModel& model, std::size_t n_prior_samples, std::uint64_t seed,
                                   Execution exec) {
  if (n_prior_samples < 100) throw DataError("evidence estimation needs at least 100 prior samples");
  const std::size_t dim = model.dimension();
  const std::size_t n_blocks = (n_prior_samples + kEvidenceBlock - 1) / kEvidenceBlock;
  std::vector<double> ll(n_prior_samples);
  std::vector<std::exception_ptr> errors(n_blocks);

  auto run_block = [&](std::size_t block) {
    try {
      Rng rng(detail::mix64(seed ^ detail::mix64(block)));
      std::vector<double> theta(dim);
      const std::size_t begin = block * kEvidenceBlock;
      const std::size_t end = std::min(begin + kEvidenceBlock, n_prior_samples);
      for (std::size_t j = begin; j < end; ++j) {
        model.draw_prior(rng, theta);
        ll[j] = model.log_likelihood(theta);
      }
    } catch (...) {
      errors[block] = std::current_exception();
    }
  };

  const auto nb = static_cast<std::ptrdiff_t>(n_blocks);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) run_block(static_cast<std::size_t>(b));
  } else {
    for (std::ptrdiff_t b = 0; b < nb; ++b) run_block(static_cast<std::size_t>(b));
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Fixed-order reduction keeps the result independent of thread count.
  double max_ll = kImpossible;
  for (double v : ll) {
    if (std::isfinite(v)) max_ll = std::max(max_ll, v);
  }
  if (!std::isfinite(max_ll)) throw DataError("degenerate evidence: every prior draw has zero likelihood");

  const auto n = static_cast<double>(n_prior_samples);
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  for (double v : ll) {
    const double w = std::isfinite(v) ? std::exp(v - max_ll) : 0.0;
    sum_w += w;
    sum_w2 += w * w;
  }
  const double mean_w = sum_w / n;
  const double var_w = std::max(0.0, (sum_w2 - n * mean_w * mean_w) / (n - 1.0));

  EvidenceEstimate out;
  out.log_evidence = max_ll + std::log(mean_w);
  out.mc_standard_error = std::sqrt(var_w / n) / mean_w;
  out.n_prior_samples = n_prior_samples;
  return out;
}

EvidenceEstimate estimate_evidence(const ModelSpec& spec, const Dataset& data, std::size_t n_prior_samples,
                                   std::uint64_t seed, Execution exec) {
  return estimate_evidence(RegressionEvidenceModel(spec, data), n_prior_samples, seed, exec);
}

double log_bayes_factor(const EvidenceEstimate& e1, const EvidenceEstimate& e2) {
  if (!std::isfinite(e1.log_evidence) || !std::isfinite(e2.log_evidence))
    throw DomainError("Bayes factor needs finite log evidences");
  return e1.log_evidence - e2.log_evidence;
}

double bayes_factor(const EvidenceEstimate& e1, const EvidenceEstimate& e2) {
  return std::exp(log_bayes_factor(e1, e2));
}

ConjugateNormalState conjugate_update(const ConjugateNormalState& prior, double y, double obs_sd) {
  if (!(obs_sd > 0.0)) throw DomainError("observation sd must be positive");
  if (!(prior.variance >= 0.0)) throw DomainError("prior variance must be non-negative");
  if (prior.variance == 0.0) return prior;
  const double prior_precision = 1.0 / prior.variance;
  const double obs_precision = 1.0 / (obs_sd * obs_sd);
  const double precision = prior_precision + obs_precision;
  return {(prior_precision * prior.mean + obs_precision * y) / precision, 1.0 / precision};
}

ConjugateNormalState sequential_update(const ConjugateNormalState& prior, std::span<const double> ys, double obs_sd) {
  if (!(obs_sd > 0.0)) throw DomainError("observation sd must be positive");
  ConjugateNormalState state = prior;
  for (double y : ys) state = conjugate_update(state, y, obs_sd);
  return state;
}

ConjugateNormalState batch_update(const ConjugateNormalState& prior, std::span<const double> ys, double obs_sd) {
  if (!(obs_sd > 0.0)) throw DomainError("observation sd must be positive");
  if (!(prior.variance >= 0.0)) throw DomainError("prior variance must be non-negative");
  if (ys.empty() || prior.variance == 0.0) return prior;
  const double prior_precision = 1.0 / prior.variance;
  const double obs_precision = 1.0 / (obs_sd * obs_sd);
  const double sum_y = std::accumulate(ys.begin(), ys.end(), 0.0);
  const double precision = prior_precision + static_cast<double>(ys.size()) * obs_precision;
  return {(prior_precision * prior.mean + obs_precision * sum_y) / precision, 1.0 / precision};
}

double conjugate_log_marginal(const ConjugateNormalState& prior, std::span<const double> ys, double obs_sd) {
  // Chain rule over one-step predictives y_k | y_<k ~ Normal(m, v + obs_sd^2).
  ConjugateNormalState state = prior;
  double total = 0.0;
  for (double y : ys) {
    total += log_density_normal(y, state.mean, std::sqrt(state.variance + obs_sd * obs_sd));
    state = conjugate_update(state, y, obs_sd);
  }
  return total;
}

ConjugateNormalModel::ConjugateNormalModel(ConjugateNormalState prior, std::vector<double> ys, double obs_sd)
    : prior_(prior), ys_(std::move(ys)), obs_sd_(obs_sd) {
  if (!(prior_.variance > 0.0)) throw DomainError("conjugate prior variance must be positive");
  if (!(obs_sd_ > 0.0)) throw DomainError("observation sd must be positive");
}

double ConjugateNormalModel::log_density(std::span<const double> z) const {
  const double lp = log_density_normal(z[0], prior_.mean, std::sqrt(prior_.variance)) + log_likelihood(z);
  return std::isfinite(lp) ? lp : kImpossible;
}

double ConjugateNormalModel::log_density_and_gradient(std::span<const double> z, std::span<double> grad) const {
  const double mu = z[0];
  double g = -(mu - prior_.mean) / prior_.variance;
  for (double y : ys_) g += (y - mu) / (obs_sd_ * obs_sd_);
  grad[0] = g;
  return log_density(z);
}

void ConjugateNormalModel::draw_initial(Rng& rng, std::span<double> z) const { draw_prior(rng, z); }

void ConjugateNormalModel::to_constrained(std::span<const double> z, std::span<double> theta) const {
  theta[0] = z[0];
}

void ConjugateNormalModel::draw_prior(Rng& rng, std::span<double> theta) const {
  std::normal_distribution<double> normal(prior_.mean, std::sqrt(prior_.variance));
  theta[0] = normal(rng);
}

double ConjugateNormalModel::log_likelihood(std::span<const double> theta) const {
  double ll = 0.0;
  for (double y : ys_) ll += log_density_normal(y, theta[0], obs_sd_);
  return ll;
}

ConjugateNormalState ConjugateNormalModel::posterior() const { return batch_update(prior_, ys_, obs_sd_); }

double ConjugateNormalModel::log_marginal() const { return conjugate_log_marginal(prior_, ys_, obs_sd_); }

}  // namespace blr

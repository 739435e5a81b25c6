#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "blr/density.hpp"
#include "blr/inference.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace blr;

namespace {

std::vector<std::vector<double>> iid_chains(std::size_t m, std::size_t n, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> out(m, std::vector<double>(n));
  for (std::size_t c = 0; c < m; ++c)
    for (auto& v : out[c]) v = n01(rng) + shift * static_cast<double>(c);
  return out;
}

// Chains of (a, b, sigma) built from explicit values.
Chains make_chains(std::size_t m, std::size_t n, auto fill) {
  std::vector<double> raw(m * n * 3);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t i = 0; i < n; ++i) fill(c, i, std::span<double>(raw.data() + (c * n + i) * 3, 3));
  return Chains({"a", "b", "sigma"}, m, n, std::move(raw), std::vector<ChainStats>(m), SamplerConfig{});
}

// Independent brute-force split-R-hat: literal halves, textbook formulas.
double oracle_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    halves.emplace_back(c.begin(), c.begin() + h);
    halves.emplace_back(c.end() - h, c.end());
  }
  const double n = halves[0].size(), m = halves.size();
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    const double mu = std::accumulate(h.begin(), h.end(), 0.0) / n;
    double ss = 0;
    for (double v : h) ss += (v - mu) * (v - mu);
    means.push_back(mu);
    vars.push_back(ss / (n - 1));
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  return std::sqrt(((n - 1) / n * w + b / n) / w);
}

}  // namespace

TEST_CASE("split R-hat on iid, displaced and constant chains") {
  const auto iid = iid_chains(4, 4000, 1);
  const double r = split_rhat(iid);
  CHECK(r >= 0.99);
  CHECK(r <= 1.01);
  CHECK(r == doctest::Approx(oracle_rhat(iid)).epsilon(1e-12));

  const auto displaced = iid_chains(2, 4000, 2, 10.0);
  CHECK(split_rhat(displaced) > 3.0);
  CHECK(split_rhat(displaced) == doctest::Approx(oracle_rhat(displaced)).epsilon(1e-12));

  const std::vector<std::vector<double>> constant(4, std::vector<double>(100, 2.0));
  CHECK_THROWS_AS(split_rhat(constant), DataError);
  CHECK_THROWS_AS(ess(constant), DataError);
  const std::vector<std::vector<double>> too_short(2, std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(split_rhat(too_short), DataError);
}

TEST_CASE("odd-length chains drop the middle draw") {
  auto odd = iid_chains(3, 1001, 5);
  CHECK(split_rhat(odd) == doctest::Approx(oracle_rhat(odd)).epsilon(1e-12));
}

TEST_CASE("ESS of iid draws is close to the draw count") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto iid = iid_chains(4, 4000, seed);
    const double e = ess(iid);
    CHECK(e >= 0.8 * 16000);
    CHECK(e <= 1.2 * 16000);
  }
}

TEST_CASE("ESS of an AR(1) process matches the analytic value") {
  const double rho = 0.9;
  const std::size_t m = 4, n = 20000;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> chains(m, std::vector<double>(n));
  for (auto& c : chains) {
    double x = n01(rng) / std::sqrt(1 - rho * rho);
    for (auto& v : c) v = x = rho * x + n01(rng);
  }
  const double expected = m * n * (1 - rho) / (1 + rho);
  CHECK(std::abs(ess(chains) / expected - 1.0) < 0.3);
}

TEST_CASE("alternating chains are super-efficient, summary caps ESS") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.01);
  const std::size_t n = 1000;
  std::vector<std::vector<double>> chains(4, std::vector<double>(n));
  for (auto& c : chains)
    for (std::size_t i = 0; i < n; ++i) c[i] = (i % 2 ? 1.0 : -1.0) + noise(rng);
  CHECK(ess(chains) >= 4.0 * n);

  const Chains ch = make_chains(4, n, [&](std::size_t c, std::size_t i, std::span<double> d) {
    d[0] = chains[c][i];
    d[1] = 1.0 + chains[c][i] * 0.1;
    d[2] = 1.0 + 0.1 * noise(rng);
  });
  const Summary s = summarize(ch);
  CHECK(*s.at("a").ess <= 4.0 * n);
}

TEST_CASE("quantiles interpolate linearly") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.025) == doctest::Approx(1.075));
  CHECK_THROWS_AS(quantile_sorted(std::vector<double>{}, 0.5), DataError);
}

TEST_CASE("summary of constant chains") {
  const Chains ch = make_chains(2, 10, [](std::size_t, std::size_t, std::span<double> d) {
    d[0] = 3.5;
    d[1] = 1.0;
    d[2] = 0.5;
  });
  const Summary s = summarize(ch);
  CHECK(s.total_draws == 20);
  const auto& a = s.at("a");
  CHECK(a.mean == 3.5);
  CHECK(a.sd == 0.0);
  CHECK(a.q025 == 3.5);
  CHECK(a.q50 == 3.5);
  CHECK(a.q975 == 3.5);
  CHECK_FALSE(a.rhat.has_value());
  CHECK_FALSE(a.ess.has_value());
  CHECK_THROWS_AS(s.at("c"), DataError);
}

TEST_CASE("summary invariants on sampled chains") {
  SamplerConfig cfg;
  cfg.n_draws = 1000;
  cfg.n_warmup = 500;
  cfg.seed = 4;
  const Chains ch = sample_hmc(default_model(), test::reference_points(), cfg);
  const Summary s = summarize(ch);
  for (const auto& p : s.params) {
    CHECK(p.q025 <= p.q50);
    CHECK(p.q50 <= p.q975);
    CHECK(*p.rhat > 0);
    CHECK(*p.ess <= s.total_draws);
  }
}

TEST_CASE("line ensemble thins evenly and copies draws verbatim") {
  const auto idx = thinning_indices(16000, 500);
  REQUIRE(idx.size() == 500);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 32);
  CHECK(idx[2] == 64);
  CHECK(idx.back() == 15968);
  std::vector<std::size_t> all(7);
  std::iota(all.begin(), all.end(), 0);
  CHECK(thinning_indices(7, 7) == all);
  CHECK_THROWS_WITH_AS(thinning_indices(10, 0), "ensemble size must be >= 1", DataError);
  CHECK_THROWS_AS(thinning_indices(10, 11), DataError);

  const Chains ch = make_chains(3, 5, [](std::size_t c, std::size_t i, std::span<double> d) {
    d[0] = 10.0 * c + i;
    d[1] = 100.0 + d[0];
    d[2] = 1.0;
  });
  const LineEnsemble all_lines = draw_line_ensemble(ch, 15);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(all_lines.lines[i].slope == ch.pooled_draw(i)[0]);
    CHECK(all_lines.lines[i].intercept == ch.pooled_draw(i)[1]);
  }
  const LineEnsemble some = draw_line_ensemble(ch, 4);
  CHECK(some.lines.size() == 4);
  CHECK(some.lines[1] == RegressionLine{3, 103});
}

TEST_CASE("posterior predictive") {
  SUBCASE("degenerate noise collapses onto the line") {
    const Chains ch = make_chains(2, 50, [](std::size_t, std::size_t, std::span<double> d) {
      d[0] = 2;
      d[1] = 1;
      d[2] = 1e-12;
    });
    for (double y : posterior_predictive(ch, 3.0, 100, 5)) CHECK(y == doctest::Approx(7.0).epsilon(1e-10));
  }
  SUBCASE("mean matches the thinned line mean and is reproducible") {
    SamplerConfig cfg;
    cfg.n_draws = 2000;
    cfg.n_warmup = 500;
    cfg.seed = 2;
    const Chains ch = sample_hmc(default_model(), test::reference_points(), cfg);
    const double x = 200.0;
    const std::size_t n = 8000;
    const auto ys = posterior_predictive(ch, x, n, 77);
    CHECK(ys == posterior_predictive(ch, x, n, 77));
    CHECK(ys != posterior_predictive(ch, x, n, 78));
    double mean_line = 0, mean_var = 0;
    for (std::size_t i : thinning_indices(ch.total_draws(), n)) {
      const auto d = ch.pooled_draw(i);
      mean_line += d[0] * x + d[1];
      mean_var += d[2] * d[2];
    }
    mean_line /= n;
    mean_var /= n;
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    CHECK(std::abs(mean_y - mean_line) < 3 * std::sqrt(mean_var / n));
    CHECK_THROWS_AS(posterior_predictive(ch, x, ch.total_draws() + 1, 1), DataError);
  }
}

TEST_CASE("evidence of a single conjugate observation") {
  const ConjugateNormalModel model({0.0, 1.0}, {2.0}, 1.0);
  CHECK(model.log_marginal() == doctest::Approx(-2.2655121234846454).epsilon(1e-14));
  const EvidenceEstimate e = estimate_evidence(model, 100000, 11);
  CHECK(e.n_prior_samples == 100000);
  CHECK(std::isfinite(e.mc_standard_error));
  CHECK(e.mc_standard_error > 0);
  CHECK(std::abs(e.log_evidence - model.log_marginal()) < 3 * e.mc_standard_error);
  CHECK_THROWS_AS(estimate_evidence(model, 99, 1), DataError);
}

TEST_CASE("evidence is thread-count independent and deterministic") {
  const ConjugateNormalModel model({0.0, 1.0}, {0.3, -1.2, 0.8}, 1.0);
  for (std::size_t n : {100u, 4096u, 4097u, 50000u}) {
    const auto par = estimate_evidence(model, n, 3, Execution::Parallel);
    const auto ser = estimate_evidence(model, n, 3, Execution::Serial);
    CHECK(par.log_evidence == ser.log_evidence);
    CHECK(par.mc_standard_error == ser.mc_standard_error);
  }
  const auto r = estimate_evidence(default_model(), test::reference_points(), 20000, 1);
  CHECK(r.log_evidence == estimate_evidence(default_model(), test::reference_points(), 20000, 1).log_evidence);
  CHECK(std::isfinite(r.log_evidence));
}

TEST_CASE("doubling the prior sample count shrinks the error by about 1/sqrt 2") {
  const ConjugateNormalModel model({0.0, 1.0}, {2.0}, 1.0);
  double ratio_sum = 0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const double se1 = estimate_evidence(model, 20000, 100 + rep).mc_standard_error;
    const double se2 = estimate_evidence(model, 40000, 200 + rep).mc_standard_error;
    ratio_sum += se2 / se1;
  }
  CHECK(std::abs(ratio_sum / 10 / (1 / std::sqrt(2.0)) - 1.0) < 0.2);
}

TEST_CASE("degenerate evidence") {
  struct Nowhere final : EvidenceModel {
    std::size_t dimension() const override { return 1; }
    void draw_prior(Rng&, std::span<double> t) const override { t[0] = 0; }
    double log_likelihood(std::span<const double>) const override { return kImpossible; }
  };
  CHECK_THROWS_AS(estimate_evidence(Nowhere{}, 1000, 1), DataError);
}

TEST_CASE("Bayes factor identities") {
  const EvidenceEstimate e1{-1.0, 0.01, 100}, e2{-2.0, 0.01, 100};
  CHECK(bayes_factor(e1, e1) == 1.0);
  CHECK(bayes_factor(e1, e2) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(log_bayes_factor(e1, e2) + log_bayes_factor(e2, e1) == 0.0);
  const EvidenceEstimate bad{std::nan(""), 0.0, 100};
  CHECK_THROWS_AS(bayes_factor(bad, e1), DomainError);
  CHECK_THROWS_AS(log_bayes_factor(e1, EvidenceEstimate{kImpossible, 0.0, 100}), DomainError);
}

TEST_CASE("conjugate update examples") {
  const ConjugateNormalState prior{0.0, 1.0};
  const auto post = conjugate_update(prior, 2.0, 1.0);
  CHECK(post.mean == 1.0);
  CHECK(post.variance == 0.5);
  const auto vague = conjugate_update(prior, 2.0, 1e9);
  CHECK(std::abs(vague.mean - prior.mean) < 1e-8);
  const auto dogmatic = conjugate_update({0.3, 1e-300}, 50.0, 1.0);
  CHECK(dogmatic.mean == doctest::Approx(0.3));
  CHECK(conjugate_update({0.3, 0.0}, 50.0, 1.0) == ConjugateNormalState{0.3, 0.0});
  CHECK_THROWS_AS(conjugate_update(prior, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(conjugate_update(prior, 1.0, -2.0), DomainError);
  CHECK(sequential_update(prior, std::vector<double>{}, 1.0) == prior);
}

TEST_CASE("sequential updating equals the batch update and ignores order") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> pos(0.2, 3.0);
  std::uniform_int_distribution<int> len(0, 30);
  for (int trial = 0; trial < 1000; ++trial) {
    const ConjugateNormalState prior{2 * n01(rng), pos(rng)};
    const double sd = pos(rng);
    std::vector<double> ys(len(rng));
    for (auto& y : ys) y = prior.mean + 3 * n01(rng);
    const auto seq = sequential_update(prior, ys, sd);
    const auto batch = batch_update(prior, ys, sd);
    CHECK(std::abs(seq.mean - batch.mean) < 1e-12);
    CHECK(std::abs(seq.variance - batch.variance) < 1e-12);
    std::shuffle(ys.begin(), ys.end(), rng);
    const auto perm = sequential_update(prior, ys, sd);
    CHECK(std::abs(perm.mean - seq.mean) < 1e-12);
    CHECK(std::abs(perm.variance - seq.variance) < 1e-12);
  }
}

TEST_CASE("conjugate marginal is the product of predictive densities") {
  const ConjugateNormalState prior{0.5, 2.0};
  const std::vector<double> ys{1.0, -0.5, 2.5};
  const double sd = 0.7;
  // Joint Gaussian oracle: ys ~ N(mu0 1, sd^2 I + tau^2 11').
  const double s2 = sd * sd, t2 = prior.variance;
  const double n = 3;
  double sum_r = 0, sum_r2 = 0;
  for (double y : ys) {
    sum_r += y - prior.mean;
    sum_r2 += (y - prior.mean) * (y - prior.mean);
  }
  const double logdet = (n - 1) * std::log(s2) + std::log(s2 + n * t2);
  const double quad = (sum_r2 - t2 * sum_r * sum_r / (s2 + n * t2)) / s2;
  const double expected = -0.5 * (n * std::log(2 * std::numbers::pi) + logdet + quad);
  CHECK(conjugate_log_marginal(prior, ys, sd) == doctest::Approx(expected).epsilon(1e-13));
}

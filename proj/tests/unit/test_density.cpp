#include <cmath>
#include <numbers>
#include <random>

#include "blr/density.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace blr;

namespace {

double simpson(auto f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

// Independent restatement of the log posterior in z for the oracle checks.
double oracle_log_post(const UnconstrainedVector& z, const Dataset& data) {
  const double b = std::exp(z.log_b), sigma = std::exp(z.log_sigma);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = -half_log_2pi - 0.5 * z.a * z.a;
  lp += std::log(2.0) - half_log_2pi - 0.5 * b * b;
  lp += std::log(2.0) - half_log_2pi - 0.5 * sigma * sigma;
  for (const auto& p : data.points) {
    const double r = p.y - (z.a * p.x + b);
    lp += -half_log_2pi - std::log(sigma) - 0.5 * r * r / (sigma * sigma);
  }
  return lp + z.log_b + z.log_sigma;
}

}  // namespace

TEST_CASE("closed-form density values") {
  CHECK(log_density_normal(0, 0, 1) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(log_density_normal(2, 0, std::sqrt(2.0)) == doctest::Approx(-2.2655121234846454).epsilon(1e-14));
  CHECK(log_density_half_normal(0, 1) == doctest::Approx(-0.225791352645).epsilon(1e-11));
  CHECK(log_density_half_normal(-1e-300, 1) == kImpossible);
  CHECK_THROWS_AS(log_density_normal(0, 0, 0), DomainError);
  CHECK(log_density(DistributionSpec::normal(1, 2), 3) == doctest::Approx(log_density_normal(3, 1, 2)));
  CHECK(log_density(DistributionSpec::half_normal(2), 3) ==
        doctest::Approx(std::log(2.0) + log_density_normal(3, 0, 2)));
}

TEST_CASE("densities integrate to one") {
  const double normal = simpson([](double x) { return std::exp(log_density_normal(x, 0.7, 1.3)); }, -15, 15);
  CHECK(normal == doctest::Approx(1.0).epsilon(1e-9));
  const double half = simpson([](double x) { return std::exp(log_density_half_normal(x, 0.8)); }, 0, 12);
  CHECK(half == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single observation at the origin, unit priors") {
  const Dataset d{{{"p", 0, 0}}};
  const double lp = log_posterior_unconstrained({0, 0, 0}, default_model(), d);
  CHECK(lp == doctest::Approx(-3.7894597716987999).epsilon(1e-14));
}

TEST_CASE("log posterior is the sum of its parts") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const Dataset data = test::reference_points();
  const ModelSpec spec = default_model();
  for (int i = 0; i < 100; ++i) {
    const UnconstrainedVector z{n01(rng) * 0.1, n01(rng), n01(rng) + 1.0};
    const ParamVector p = to_constrained(z);
    const double parts = log_prior(p, spec) + log_likelihood(p, data) + log_jacobian(z);
    CHECK(log_posterior_unconstrained(z, spec, data) == doctest::Approx(parts).epsilon(1e-14));
    CHECK(log_posterior_unconstrained(z, spec, data) == doctest::Approx(oracle_log_post(z, data)).epsilon(1e-12));
  }
}

TEST_CASE("likelihood is additive over observations") {
  const Dataset all = test::reference_points();
  const ParamVector p{0.02, 4.0, 1.5};
  double sum = 0.0;
  for (const auto& pt : all.points) sum += log_likelihood(p, Dataset{{pt}});
  CHECK(log_likelihood(p, all) == doctest::Approx(sum).epsilon(1e-14));
  CHECK_THROWS_AS(log_likelihood(p, Dataset{}), DataError);
}

TEST_CASE("transforms round trip and reject the boundary") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 1000; ++i) {
    const UnconstrainedVector z{n01(rng), 3 * n01(rng), 3 * n01(rng)};
    const UnconstrainedVector back = to_unconstrained(to_constrained(z));
    CHECK(back.a == z.a);
    CHECK(back.log_b == doctest::Approx(z.log_b).epsilon(1e-14));
    CHECK(back.log_sigma == doctest::Approx(z.log_sigma).epsilon(1e-14));
    const ParamVector p = to_constrained(z);
    CHECK(p.b > 0);
    CHECK(p.sigma > 0);
  }
  CHECK_THROWS_AS(to_unconstrained({0, 0, 1}), DomainError);
  CHECK_THROWS_AS(to_unconstrained({0, 1, 0}), DomainError);
  CHECK_THROWS_AS(to_unconstrained({0, 1, -1}), DomainError);
}

TEST_CASE("degenerate states are impossible rather than NaN") {
  const Dataset data = test::reference_points();
  CHECK(log_posterior_unconstrained({0, 0, -1000}, default_model(), data) == kImpossible);
  CHECK(log_posterior_unconstrained({0, 1000, 0}, default_model(), data) == kImpossible);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  const Dataset data = test::reference_points();
  for (const ModelSpec& spec :
       {default_model(), load_model_spec(test::data_dir() / "wide_slope.spec")}) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const UnconstrainedVector z{n01(rng) * 0.05, n01(rng) + 1.0, n01(rng) + 0.5};
      const auto g = grad_log_posterior_unconstrained(z, spec, data);
      for (int k = 0; k < 3; ++k) {
        const double h = 1e-5;
        UnconstrainedVector up = z, dn = z;
        (k == 0 ? up.a : k == 1 ? up.log_b : up.log_sigma) += h;
        (k == 0 ? dn.a : k == 1 ? dn.log_b : dn.log_sigma) -= h;
        const double fd =
            (log_posterior_unconstrained(up, spec, data) - log_posterior_unconstrained(dn, spec, data)) / (2 * h);
        worst = std::max(worst, std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1.0}));
      }
      std::array<double, 3> g2{};
      const double v = log_posterior_and_gradient(z, spec, data, g2);
      CHECK(v == doctest::Approx(log_posterior_unconstrained(z, spec, data)).epsilon(1e-14));
      CHECK(g2 == g);
    }
    CHECK(worst < 1e-6);
  }
}

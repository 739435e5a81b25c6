#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "blr/classic.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace blr;

namespace {

Dataset random_dataset(std::mt19937_64& rng, std::size_t m) {
  std::normal_distribution<double> n01;
  Dataset d;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = 3 * n01(rng);
    d.points.push_back({"p" + std::to_string(i), x, 0.7 * x - 1.2 + n01(rng)});
  }
  return d;
}

}  // namespace

TEST_CASE("exact line is recovered exactly") {
  const Dataset d{{{"p", 0, 1}, {"q", 1, 3}, {"r", 2, 5}}};
  const OlsFit f = ols_fit(d);
  CHECK(f.slope == 2.0);
  CHECK(f.intercept == 1.0);
  CHECK(f.lse == 0.0);
  CHECK(f.residuals == std::vector<double>{0, 0, 0});
}

TEST_CASE("three reference points match exact rational values and the grid oracle") {
  const Dataset d = test::reference_points();
  const OlsFit f = ols_fit(d);
  // 288/38257 and 210007/38257, worked out in exact arithmetic.
  CHECK(f.slope == doctest::Approx(0.0075280340852654417).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(5.4893744935567348).epsilon(1e-14));
  CHECK(f.lse == doctest::Approx(0.55461745562903519).epsilon(1e-12));
  const auto [a, b] = test::ols_grid_oracle(d);
  CHECK(std::abs(f.slope - a) < 1e-10);
  CHECK(std::abs(f.intercept - b) < 1e-10);
}

TEST_CASE("residuals are fitted minus observed and sum to zero") {
  const Dataset d = test::reference_points();
  const OlsFit f = ols_fit(d);
  REQUIRE(f.residuals.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(f.residuals[i] == doctest::Approx(f.slope * d.points[i].x + f.intercept - d.points[i].y).epsilon(1e-14));
  CHECK(std::abs(std::accumulate(f.residuals.begin(), f.residuals.end(), 0.0)) < 1e-12);
  CHECK(lse(d, f.slope, f.intercept) == doctest::Approx(f.lse).epsilon(1e-14));
}

TEST_CASE("lse examples") {
  CHECK(lse(Dataset{{{"p", 0, 1}, {"q", 1, 3}, {"r", 2, 5}}}, 2, 1) == 0.0);
  CHECK(lse(Dataset{{{"p", 0, 3}}}, 0, 0) == 9.0);
}

TEST_CASE("normal equations hold for the residuals") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset d = random_dataset(rng, 2 + trial % 30);
    if (trial % 2) d = test::reference_points();
    const OlsFit f = ols_fit(d);
    double max_y = 0, sum_r = 0, sum_rx = 0, sum_r2 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      max_y = std::max(max_y, std::abs(d.points[i].y));
      sum_r += f.residuals[i];
      sum_rx += f.residuals[i] * d.points[i].x;
      sum_r2 += f.residuals[i] * f.residuals[i];
    }
    const double tol = 1e-9 * static_cast<double>(d.size()) * max_y;
    CHECK(std::abs(sum_r) <= tol);
    CHECK(std::abs(sum_rx) <= tol);
    CHECK(f.lse == sum_r2);
  }
}

TEST_CASE("ols_fit is a minimizer of the squared error") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> magnitude(-4, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = trial == 0 ? test::reference_points() : random_dataset(rng, 2 + trial);
    const OlsFit f = ols_fit(d);
    for (int k = 0; k < 1000; ++k) {
      const double scale = std::pow(10.0, magnitude(rng));
      CHECK(lse(d, f.slope + scale * n01(rng), f.intercept + scale * n01(rng)) >= f.lse * (1 - 1e-13));
    }
    for (double delta : {1e-6, -1e-6, 1e-3, -0.5}) CHECK(lse(d, f.slope + delta, f.intercept) > f.lse);
  }
}

TEST_CASE("fit agrees with plain gradient descent") {
  std::mt19937_64 rng(4);
  const Dataset d = random_dataset(rng, 25);
  double a = 0, b = 0;
  const double rate = 1e-3;
  for (int it = 0; it < 200000; ++it) {
    double ga = 0, gb = 0;
    for (const auto& p : d.points) {
      const double r = a * p.x + b - p.y;
      ga += 2 * r * p.x;
      gb += 2 * r;
    }
    a -= rate * ga;
    b -= rate * gb;
  }
  const OlsFit f = ols_fit(d);
  CHECK(f.slope == doctest::Approx(a).epsilon(1e-9));
  CHECK(f.intercept == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("fit is equivariant under affine changes of the data") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = random_dataset(rng, 10);
    const OlsFit f = ols_fit(d);
    const double c = 2.5, shift = 7.0, k = 4.0, y_shift = -3.25;
    Dataset scaled = d, shifted = d, x_scaled = d, y_shifted = d;
    for (auto& p : scaled.points) p.y *= c;
    for (auto& p : shifted.points) p.x += shift;
    for (auto& p : x_scaled.points) p.x *= k;
    for (auto& p : y_shifted.points) p.y += y_shift;
    const OlsFit fs = ols_fit(scaled), ft = ols_fit(shifted);
    CHECK(fs.slope == doctest::Approx(c * f.slope).epsilon(1e-12));
    CHECK(fs.intercept == doctest::Approx(c * f.intercept).epsilon(1e-12));
    CHECK(fs.lse == doctest::Approx(c * c * f.lse).epsilon(1e-10));
    CHECK(ft.slope == doctest::Approx(f.slope).epsilon(1e-10));
    CHECK(ft.intercept == doctest::Approx(f.intercept - f.slope * shift).epsilon(1e-10));
    const OlsFit fk = ols_fit(x_scaled), fy = ols_fit(y_shifted);
    CHECK(std::abs(fk.slope - f.slope / k) < 1e-10);
    CHECK(std::abs(fk.intercept - f.intercept) < 1e-10);
    CHECK(std::abs(fy.slope - f.slope) < 1e-10);
    CHECK(std::abs(fy.intercept - (f.intercept + y_shift)) < 1e-10);
  }
}

TEST_CASE("degenerate inputs") {
  CHECK_THROWS_WITH_AS(ols_fit(Dataset{{{"p", 1, 1}}}), "OLS needs at least two observations", DataError);
  CHECK_THROWS_WITH_AS(ols_fit(Dataset{{{"p", 1, 1}, {"q", 1, 2}}}), doctest::Contains("degenerate design"),
                       DataError);
  CHECK_THROWS_AS(lse(Dataset{}, 1, 1), DataError);
}

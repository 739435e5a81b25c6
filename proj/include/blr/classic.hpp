#pragma once

// Closed-form ordinary least squares.

#include <vector>

#include "blr/corpus.hpp"

namespace blr {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double lse = 0.0;                // sum of squared residuals at the optimum
  std::vector<double> residuals;   // fitted(X_i) - Y_i
};

// sum_i (Y_i - (a X_i + b))^2. Throws DataError on empty data.
double lse(const Dataset& data, double slope, double intercept);

// Slope = Sxy / Sxx and intercept = mean(y) - slope * mean(x) from centered
// sums. Throws DataError for fewer than two points or constant X.
OlsFit ols_fit(const Dataset& data);

}  // namespace blr

#include "blr/classic.hpp"

namespace blr {

double lse(const Dataset& data, double slope, double intercept) {
  if (data.empty()) throw DataError("least-squares error needs at least one observation");
  double sum = 0.0;
  for (const auto& p : data.points) {
    const double r = p.y - (slope * p.x + intercept);
    sum += r * r;
  }
  return sum;
}

OlsFit ols_fit(const Dataset& data) {
  if (data.size() < 2) throw DataError("OLS needs at least two observations");
  const double n = static_cast<double>(data.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : data.points) {
    mean_x += p.x;
    mean_y += p.y;
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : data.points) {
    const double dx = p.x - mean_x;
    sxx += dx * dx;
    sxy += dx * (p.y - mean_y);
  }
  if (!(sxx > 0.0)) throw DataError("degenerate design: all X values are equal");

  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.residuals.reserve(data.size());
  for (const auto& p : data.points) {
    const double r = (fit.slope * p.x + fit.intercept) - p.y;
    fit.residuals.push_back(r);
    fit.lse += r * r;
  }
  return fit;
}

}  // namespace blr

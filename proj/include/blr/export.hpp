#pragma once

// CSV sample dumps, JSON summaries and SVG figures.
//
// CSV: header `chain,draw,<param>...`, one row per draw ordered by
// (chain, draw), values with 17 significant digits, '\n' line endings.
//
// SVG: every regression line is a <path> element and every observation a
// <circle>; axes, ticks and histogram bars use <line>/<rect>, so element
// counts can be checked directly.

#include <iosfwd>
#include <optional>
#include <utility>

#include "json.hpp"

#include "blr/classic.hpp"
#include "blr/corpus.hpp"
#include "blr/inference.hpp"
#include "blr/sampler.hpp"

namespace blr {

void write_samples_csv(const Chains& chains, std::ostream& out);

// Rebuilds draws (and parameter names) from a samples CSV. Sampler stats and
// configuration are not stored in the CSV and come back default-initialized,
// except n_chains / n_draws. Throws DataError on malformed input.
Chains read_samples_csv(std::istream& in);

// Keys in fixed order: total_draws, parameters[{name, mean, sd, q2.5, q50,
// q97.5, rhat, ess}]. Undefined diagnostics are null.
nlohmann::ordered_json summary_to_json(const Summary& summary);
void write_summary_json(const Summary& summary, std::ostream& out);

nlohmann::ordered_json ols_fit_to_json(const OlsFit& fit);
nlohmann::ordered_json evidence_to_json(const EvidenceEstimate& e);

struct PlotSpec {
  int width = 640;
  int height = 480;
  // Empty means the data extent padded by 5% on each side.
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
  double point_radius = 4.0;
  double ensemble_opacity = 0.05;
};

// Throws DomainError on non-positive size or degenerate ranges.
void validate(const PlotSpec& plot);

// Scatter of the observations with one opaque line for the fit.
void render_scatter_svg(const Dataset& data, const OlsFit& fit, const PlotSpec& plot, std::ostream& out);
// Scatter of the observations with one translucent line per ensemble member.
void render_scatter_svg(const Dataset& data, const LineEnsemble& ensemble, const PlotSpec& plot, std::ostream& out);

// Joint (a, b) draws with 30-bin marginal histograms and mean markers.
void render_posterior_svg(const Chains& chains, const PlotSpec& plot, std::ostream& out);

inline constexpr int kHistogramBins = 30;

}  // namespace blr

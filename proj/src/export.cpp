#include "blr/export.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "numeric_text.hpp"

namespace blr {

namespace {

using nlohmann::ordered_json;

ordered_json optional_number(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters are not allowed in XML 1.0 text.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
          out += '?';
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::pair<double, double> padded_extent(double lo, double hi) {
  if (hi == lo) {
    const double w = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - w, hi + w};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
  return ticks;
}

// Maps data coordinates to a pixel rectangle (y grows downward).
struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;

  double sx(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double sy(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

void write_header(std::ostream& out, const PlotSpec& plot) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" viewBox=\"0 0 " << plot.width << ' ' << plot.height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << plot.width << "\" height=\"" << plot.height
      << "\" fill=\"white\"/>\n";
}

void write_clip(std::ostream& out, const Frame& f, std::string_view id) {
  out << "<defs><clipPath id=\"" << id << "\"><rect x=\"" << px(f.left) << "\" y=\"" << px(f.top) << "\" width=\""
      << px(f.width) << "\" height=\"" << px(f.height) << "\"/></clipPath></defs>\n";
}

void write_axes(std::ostream& out, const Frame& f, std::string_view x_label, std::string_view y_label,
                bool x_ticks = true, bool y_ticks = true) {
  const double bottom = f.top + f.height;
  const double right = f.left + f.width;
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(bottom) << "\" x2=\"" << px(right) << "\" y2=\""
      << px(bottom) << "\"/>\n";
  out << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(f.top) << "\" x2=\"" << px(f.left) << "\" y2=\""
      << px(bottom) << "\"/>\n";
  if (x_ticks) {
    for (double t : nice_ticks(f.x0, f.x1)) {
      const double x = f.sx(t);
      out << "<line x1=\"" << px(x) << "\" y1=\"" << px(bottom) << "\" x2=\"" << px(x) << "\" y2=\""
          << px(bottom + 5) << "\"/>\n";
    }
  }
  if (y_ticks) {
    for (double t : nice_ticks(f.y0, f.y1)) {
      const double y = f.sy(t);
      out << "<line x1=\"" << px(f.left - 5) << "\" y1=\"" << px(y) << "\" x2=\"" << px(f.left) << "\" y2=\""
          << px(y) << "\"/>\n";
    }
  }
  out << "</g>\n";
  out << "<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  if (x_ticks) {
    for (double t : nice_ticks(f.x0, f.x1)) {
      out << "<text x=\"" << px(f.sx(t)) << "\" y=\"" << px(bottom + 18) << "\" text-anchor=\"middle\">"
          << tick_label(t) << "</text>\n";
    }
  }
  if (y_ticks) {
    for (double t : nice_ticks(f.y0, f.y1)) {
      out << "<text x=\"" << px(f.left - 8) << "\" y=\"" << px(f.sy(t) + 4) << "\" text-anchor=\"end\">"
          << tick_label(t) << "</text>\n";
    }
  }
  out << "</g>\n";
  if (!x_label.empty()) {
    out << "<text class=\"axis-label\" x=\"" << px(f.left + f.width / 2) << "\" y=\"" << px(bottom + 38)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(x_label)
        << "</text>\n";
  }
  if (!y_label.empty()) {
    const double x = f.left - 45;
    const double y = f.top + f.height / 2;
    out << "<text class=\"axis-label\" x=\"" << px(x) << "\" y=\"" << px(y) << "\" transform=\"rotate(-90 "
        << px(x) << ' ' << px(y) << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(y_label) << "</text>\n";
  }
}

Frame scatter_frame(const Dataset& data, const PlotSpec& plot) {
  validate(plot);
  if (data.empty()) throw DataError("cannot plot an empty dataset");
  auto [xmin_it, xmax_it] = std::minmax_element(data.points.begin(), data.points.end(),
                                                [](const auto& l, const auto& r) { return l.x < r.x; });
  auto [ymin_it, ymax_it] = std::minmax_element(data.points.begin(), data.points.end(),
                                                [](const auto& l, const auto& r) { return l.y < r.y; });
  const auto xr = plot.x_range.value_or(padded_extent(xmin_it->x, xmax_it->x));
  const auto yr = plot.y_range.value_or(padded_extent(ymin_it->y, ymax_it->y));
  if (!(xr.second > xr.first) || !(yr.second > yr.first)) throw DomainError("plot axis range is degenerate");
  constexpr double kLeft = 70, kRight = 20, kTop = 20, kBottom = 55;
  return {kLeft, kTop, plot.width - kLeft - kRight, plot.height - kTop - kBottom, xr.first, xr.second, yr.first,
          yr.second};
}

void write_lines(std::ostream& out, const Frame& f, std::span<const RegressionLine> lines, double opacity) {
  out << "<g class=\"regression-lines\" clip-path=\"url(#plot-area)\" fill=\"none\" stroke=\"#d62728\" "
         "stroke-width=\"1.5\" stroke-opacity=\""
      << opacity << "\">\n";
  for (const auto& l : lines) {
    out << "<path d=\"M " << px(f.sx(f.x0)) << ' ' << px(f.sy(l.slope * f.x0 + l.intercept)) << " L "
        << px(f.sx(f.x1)) << ' ' << px(f.sy(l.slope * f.x1 + l.intercept)) << "\"/>\n";
  }
  out << "</g>\n";
}

void write_points(std::ostream& out, const Frame& f, const Dataset& data, double radius) {
  out << "<g class=\"observations\" fill=\"#1f77b4\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (const auto& p : data.points) {
    out << "<circle cx=\"" << px(f.sx(p.x)) << "\" cy=\"" << px(f.sy(p.y)) << "\" r=\"" << radius << "\"/>\n";
    out << "<text x=\"" << px(f.sx(p.x) + radius + 2) << "\" y=\"" << px(f.sy(p.y) - radius - 2)
        << "\" fill=\"black\">" << xml_escape(p.label) << "</text>\n";
  }
  out << "</g>\n";
}

void render_lines_svg(const Dataset& data, std::span<const RegressionLine> lines, double opacity,
                      const PlotSpec& plot, std::ostream& out) {
  const Frame f = scatter_frame(data, plot);
  write_header(out, plot);
  write_clip(out, f, "plot-area");
  write_axes(out, f, "total count X", "article count Y");
  write_lines(out, f, lines, opacity);
  write_points(out, f, data, plot.point_radius);
  out << "</svg>\n";
  if (!out) throw DataError("failed writing SVG");
}

struct Histogram {
  double lo;
  double hi;
  std::vector<std::size_t> counts;
};

Histogram histogram(std::span<const double> values, double lo, double hi) {
  Histogram h{lo, hi, std::vector<std::size_t>(kHistogramBins, 0)};
  const double width = (hi - lo) / kHistogramBins;
  for (double v : values) {
    auto bin = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
    bin = std::clamp<std::ptrdiff_t>(bin, 0, kHistogramBins - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  return h;
}

}  // namespace

void write_samples_csv(const Chains& chains, std::ostream& out) {
  if (chains.total_draws() == 0) throw DataError("no draws to write");
  out << "chain,draw";
  for (const auto& name : chains.parameter_names()) out << ',' << name;
  out << '\n';
  for (std::size_t c = 0; c < chains.n_chains(); ++c) {
    for (std::size_t d = 0; d < chains.n_draws(); ++d) {
      out << c << ',' << d;
      for (double v : chains.draw(c, d)) out << ',' << detail::format_g17(v);
      out << '\n';
    }
  }
  if (!out) throw DataError("failed writing samples CSV");
}

Chains read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("samples CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (!s.empty() && s.back() == ',') f.emplace_back();
    return f;
  };

  const auto header = split(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "draw")
    throw DataError("samples CSV header must start with 'chain,draw'");
  std::vector<std::string> names(header.begin() + 2, header.end());

  std::vector<double> draws;
  std::size_t n_chains = 0;
  std::size_t n_draws = 0;
  std::size_t expect_chain = 0;
  std::size_t expect_draw = 0;
  std::size_t lineno = 1;
  auto parse_index = [&](const std::string& s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw DataError("samples CSV line " + std::to_string(lineno) + ": bad index '" + s + "'");
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw DataError("samples CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                      " fields");
    const std::size_t c = parse_index(fields[0]);
    const std::size_t d = parse_index(fields[1]);
    if (c == expect_chain + 1 && d == 0 && expect_draw > 0) {
      if (n_chains == 0) n_draws = expect_draw;
      if (expect_draw != n_draws) throw DataError("samples CSV: chains have different lengths");
      ++n_chains;
      expect_chain = c;
      expect_draw = 0;
    }
    if (c != expect_chain || d != expect_draw)
      throw DataError("samples CSV line " + std::to_string(lineno) + ": rows must be ordered by (chain, draw)");
    for (std::size_t k = 2; k < fields.size(); ++k) {
      auto v = detail::parse_finite_double(fields[k]);
      if (!v) throw DataError("samples CSV line " + std::to_string(lineno) + ": bad value '" + fields[k] + "'");
      draws.push_back(*v);
    }
    ++expect_draw;
  }
  if (expect_draw == 0) throw DataError("samples CSV has no draws");
  if (n_chains == 0) n_draws = expect_draw;
  if (expect_draw != n_draws) throw DataError("samples CSV: chains have different lengths");
  ++n_chains;

  SamplerConfig cfg;
  cfg.n_chains = n_chains;
  cfg.n_draws = n_draws;
  return Chains(std::move(names), n_chains, n_draws, std::move(draws), std::vector<ChainStats>(n_chains), cfg);
}

ordered_json summary_to_json(const Summary& summary) {
  ordered_json j;
  j["total_draws"] = summary.total_draws;
  ordered_json params = ordered_json::array();
  for (const auto& p : summary.params) {
    ordered_json e;
    e["name"] = p.name;
    e["mean"] = p.mean;
    e["sd"] = p.sd;
    e["q2.5"] = p.q025;
    e["q50"] = p.q50;
    e["q97.5"] = p.q975;
    e["rhat"] = optional_number(p.rhat);
    e["ess"] = optional_number(p.ess);
    params.push_back(std::move(e));
  }
  j["parameters"] = std::move(params);
  return j;
}

void write_summary_json(const Summary& summary, std::ostream& out) {
  out << summary_to_json(summary).dump(2) << '\n';
  if (!out) throw DataError("failed writing summary JSON");
}

ordered_json ols_fit_to_json(const OlsFit& fit) {
  ordered_json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["lse"] = fit.lse;
  j["residuals"] = fit.residuals;
  return j;
}

ordered_json evidence_to_json(const EvidenceEstimate& e) {
  ordered_json j;
  j["log_evidence"] = e.log_evidence;
  j["mc_standard_error"] = e.mc_standard_error;
  j["n_prior_samples"] = e.n_prior_samples;
  return j;
}

void validate(const PlotSpec& plot) {
  if (plot.width <= 100 || plot.height <= 100) throw DomainError("plot must be larger than 100x100 pixels");
  auto ok = [](const std::optional<std::pair<double, double>>& r) {
    return !r || (std::isfinite(r->first) && std::isfinite(r->second) && r->second > r->first);
  };
  if (!ok(plot.x_range) || !ok(plot.y_range)) throw DomainError("plot axis range is degenerate");
  if (!(plot.point_radius > 0.0)) throw DomainError("point radius must be positive");
  if (!(plot.ensemble_opacity > 0.0 && plot.ensemble_opacity <= 1.0))
    throw DomainError("ensemble opacity must lie in (0, 1]");
}

void render_scatter_svg(const Dataset& data, const OlsFit& fit, const PlotSpec& plot, std::ostream& out) {
  const RegressionLine line{fit.slope, fit.intercept};
  render_lines_svg(data, std::span<const RegressionLine>(&line, 1), 1.0, plot, out);
}

void render_scatter_svg(const Dataset& data, const LineEnsemble& ensemble, const PlotSpec& plot, std::ostream& out) {
  render_lines_svg(data, ensemble.lines, plot.ensemble_opacity, plot, out);
}

void render_posterior_svg(const Chains& chains, const PlotSpec& plot, std::ostream& out) {
  validate(plot);
  const auto a = chains.pooled_values(chains.param_index("a"));
  const auto b = chains.pooled_values(chains.param_index("b"));
  if (a.empty()) throw DataError("no draws to plot");

  auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const auto ar = padded_extent(*amin, *amax);
  const auto br = padded_extent(*bmin, *bmax);
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());

  // Joint panel bottom-left, slope marginal on top, intercept marginal right.
  constexpr double kLeft = 70, kBottom = 55, kGap = 8;
  const double marginal = 0.22 * std::min(plot.width, plot.height);
  const double joint_w = plot.width - kLeft - marginal - kGap - 10;
  const double joint_h = plot.height - kBottom - marginal - kGap - 10;
  const double joint_top = 10 + marginal + kGap;
  const Frame joint{kLeft, joint_top, joint_w, joint_h, ar.first, ar.second, br.first, br.second};

  write_header(out, plot);
  write_clip(out, joint, "joint-area");
  write_axes(out, joint, "slope a", "intercept b");

  out << "<g class=\"draws\" clip-path=\"url(#joint-area)\" fill=\"#1f77b4\" fill-opacity=\"0.15\">\n";
  for (std::size_t i = 0; i < a.size(); ++i) {
    out << "<circle cx=\"" << px(joint.sx(a[i])) << "\" cy=\"" << px(joint.sy(b[i])) << "\" r=\"1.2\"/>\n";
  }
  out << "</g>\n";

  const Histogram ha = histogram(a, ar.first, ar.second);
  const Histogram hb = histogram(b, br.first, br.second);
  const double max_a = static_cast<double>(*std::max_element(ha.counts.begin(), ha.counts.end()));
  const double max_b = static_cast<double>(*std::max_element(hb.counts.begin(), hb.counts.end()));

  out << "<g class=\"marginal-a\" fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\">\n";
  const double bin_w = joint_w / kHistogramBins;
  for (int k = 0; k < kHistogramBins; ++k) {
    const double h = max_a > 0 ? static_cast<double>(ha.counts[k]) / max_a * marginal : 0.0;
    out << "<rect x=\"" << px(kLeft + k * bin_w) << "\" y=\"" << px(10 + marginal - h) << "\" width=\""
        << px(bin_w) << "\" height=\"" << px(h) << "\"/>\n";
  }
  out << "</g>\n";

  out << "<g class=\"marginal-b\" fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\">\n";
  const double bin_h = joint_h / kHistogramBins;
  const double right_x = kLeft + joint_w + kGap;
  for (int k = 0; k < kHistogramBins; ++k) {
    const double w = max_b > 0 ? static_cast<double>(hb.counts[k]) / max_b * marginal : 0.0;
    out << "<rect x=\"" << px(right_x) << "\" y=\"" << px(joint_top + joint_h - (k + 1) * bin_h) << "\" width=\""
        << px(w) << "\" height=\"" << px(bin_h) << "\"/>\n";
  }
  out << "</g>\n";

  const double xa = joint.sx(mean_a);
  const double yb = joint.sy(mean_b);
  out << "<g class=\"means\" stroke=\"black\" stroke-width=\"1.5\">\n"
      << "<line x1=\"" << px(xa) << "\" y1=\"10\" x2=\"" << px(xa) << "\" y2=\"" << px(10 + marginal) << "\"/>\n"
      << "<line x1=\"" << px(right_x) << "\" y1=\"" << px(yb) << "\" x2=\"" << px(right_x + marginal) << "\" y2=\""
      << px(yb) << "\"/>\n"
      << "</g>\n";
  out << "<text x=\"" << px(xa + 4) << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"11\">mean a = "
      << tick_label(mean_a) << "</text>\n";
  out << "<text x=\"" << px(right_x + 4) << "\" y=\"" << px(yb - 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\">mean b = " << tick_label(mean_b) << "</text>\n";
  out << "</svg>\n";
  if (!out) throw DataError("failed writing SVG");
}

}  // namespace blr

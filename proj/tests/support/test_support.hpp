#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "blr/corpus.hpp"

namespace blr::test {

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("BLR_TEST_DATA")) return env;
  return std::filesystem::path(__FILE__).parent_path().parent_path() / "data";
}

// Three of the ten observations behind the reference fit; the other seven are unavailable.
inline Dataset reference_points() {
  return Dataset{{{"machine", 132, 7}, {"people", 139, 6}, {"probability", 331, 8}}};
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::filesystem::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

// Well-formedness check via Boost.PropertyTree's XML reader.
inline bool well_formed_xml(const std::string& text) {
  try {
    std::istringstream in(text);
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml(in, tree);
    return tree.count("svg") == 1;
  } catch (const std::exception&) {
    return false;
  }
}

// Grid search over the slope on the profile error (intercept optimal for each
// slope), refined by the vertex of the parabola through three grid points.
// The profile is exactly quadratic, so the vertex is exact up to rounding.
inline std::pair<double, double> ols_grid_oracle(const Dataset& d) {
  using L = long double;
  const L n = d.size();
  L sx = 0, sy = 0;
  for (const auto& p : d.points) {
    sx += p.x;
    sy += p.y;
  }
  auto profile = [&](L a) {
    const L b = (sy - a * sx) / n;
    L e = 0;
    for (const auto& p : d.points) {
      const L r = p.y - (a * p.x + b);
      e += r * r;
    }
    return e;
  };
  L best = -10, best_e = profile(best);
  const L h = 1e-3L;
  for (L a = -10; a <= 10; a += h) {
    const L e = profile(a);
    if (e < best_e) best_e = e, best = a;
  }
  const L f0 = profile(best - h), f1 = profile(best), f2 = profile(best + h);
  const L a = best - h * (f2 - f0) / (2 * (f2 - 2 * f1 + f0));
  return {static_cast<double>(a), static_cast<double>((sy - a * sx) / n)};
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("blr-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace blr::test

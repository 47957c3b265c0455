#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "rswarm/measure.hpp"

namespace rswarm {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

/// {"dim": n, "points": [[...], ...], "weights": [...]}
inline nlohmann::json to_json(const DiscreteMeasure& mu) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto p = mu.point(i);
    points.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return {{"dim", mu.dim()},
          {"points", std::move(points)},
          {"weights", std::vector<double>(mu.weights().begin(), mu.weights().end())}};
}

inline DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<std::size_t>();
  std::vector<double> coords;
  for (const auto& p : j.at("points")) {
    if (p.size() != dim) throw std::invalid_argument("measure json: point with wrong dimension");
    for (const auto& c : p) coords.push_back(c.get<double>());
  }
  auto weights = j.at("weights").get<std::vector<double>>();
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

/// CSV with header x1,...,xn,w and one atom per row.
inline void write_csv(std::ostream& os, const DiscreteMeasure& mu) {
  for (std::size_t k = 0; k < mu.dim(); ++k) os << 'x' << (k + 1) << ',';
  os << "w\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double c : mu.point(i)) os << format_double(c) << ',';
    os << format_double(mu.weight(i)) << '\n';
  }
}

inline DiscreteMeasure read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("measure csv: empty input");
  std::size_t columns = 1;
  for (char ch : line)
    if (ch == ',') ++columns;
  if (columns < 2) throw std::invalid_argument("measure csv: need at least one coordinate column and w");
  const std::size_t dim = columns - 1;

  std::vector<double> coords;
  std::vector<double> weights;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != columns) throw std::invalid_argument("measure csv: ragged row");
    coords.insert(coords.end(), row.begin(), row.end() - 1);
    weights.push_back(row.back());
  }
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

inline std::string to_csv_string(const DiscreteMeasure& mu) {
  std::ostringstream os;
  write_csv(os, mu);
  return os.str();
}

} // namespace rswarm

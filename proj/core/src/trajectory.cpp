#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "trackmpc/errors.hpp"
#include "trackmpc/simulation.hpp"

namespace trackmpc {

Trajectory::Trajectory(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw std::invalid_argument("trajectory: at least one knot required");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].first) || !std::isfinite(knots_[i].second))
      throw std::invalid_argument("trajectory: non-finite knot");
    if (i > 0 && !(knots_[i].first > knots_[i - 1].first))
      throw std::invalid_argument("trajectory: knot times must be strictly increasing");
  }
}

double Trajectory::at(double t) const {
  if (t <= knots_.front().first) return knots_.front().second;
  if (t >= knots_.back().first) return knots_.back().second;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double v, const std::pair<double, double>& k) { return v < k.first; });
  auto lo = hi - 1;
  const double w = (t - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Trajectory parse_trajectory_csv(std::string_view text) {
  std::vector<std::pair<double, double>> knots;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_allowed = true;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError(line_no, "time", "expected two comma-separated columns");
    double t = 0.0;
    double v = 0.0;
    const bool t_ok = parse_double(line.substr(0, comma), t);
    const bool v_ok = parse_double(line.substr(comma + 1), v);
    if (!t_ok && !v_ok && header_allowed) {
      header_allowed = false;
      continue;
    }
    header_allowed = false;
    if (!t_ok) throw ParseError(line_no, "time", "malformed number");
    if (!v_ok) throw ParseError(line_no, "setpoint", "malformed number");
    if (!knots.empty() && !(t > knots.back().first))
      throw ParseError(line_no, "time", "times must be strictly increasing");
    knots.emplace_back(t, v);
  }
  if (knots.empty()) throw ParseError(line_no, "time", "trajectory has no rows");
  return Trajectory(std::move(knots));
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trajectory_csv(buf.str());
}

}  // namespace trackmpc

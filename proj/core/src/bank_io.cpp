#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "trackmpc/errors.hpp"
#include "trackmpc/linear_models.hpp"

namespace trackmpc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_number(std::string_view token, std::size_t line, const std::string& field) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value))
    throw ParseError(line, field, "malformed number '" + std::string(token) + "'");
  return value;
}

struct PendingEntry {
  std::optional<double> t_start;
  std::vector<double> num;
  std::vector<double> den;
  std::size_t t_line = 0;
  std::size_t den_line = 0;
  bool has_num = false;
  bool has_den = false;
};

}  // namespace

ModelBank parse_bank(std::string_view text) {
  std::optional<double> Ts;
  std::size_t ts_line = 0;
  std::vector<BankEntry> entries;
  std::optional<PendingEntry> pending;
  std::size_t line_no = 0;

  auto finish = [&](std::size_t at_line) {
    if (!pending) return;
    if (!pending->has_num) throw ParseError(at_line, "num", "entry is missing its numerator");
    if (!pending->has_den) throw ParseError(at_line, "den", "entry is missing its denominator");
    TransferFunction tf{std::move(pending->num), std::move(pending->den)};
    try {
      tf.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(pending->den_line, "den", e.what());
    }
    if (!entries.empty() && !(*pending->t_start > entries.back().t_start))
      throw ParseError(pending->t_line, "t_start", "t_start must be strictly increasing");
    if (entries.empty() && *pending->t_start != 0.0)
      throw ParseError(pending->t_line, "t_start", "first entry must start at 0");
    entries.push_back({*pending->t_start, std::move(tf)});
    pending.reset();
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    const auto tokens = split_ws(line);
    const std::string key(tokens.front());
    if (key == "Ts") {
      if (Ts) throw ParseError(line_no, "Ts", "duplicate Ts directive");
      if (!entries.empty() || pending) throw ParseError(line_no, "Ts", "Ts must precede the first entry");
      if (tokens.size() != 2) throw ParseError(line_no, "Ts", "expected exactly one value");
      Ts = parse_number(tokens[1], line_no, "Ts");
      if (!(*Ts > 0.0)) throw ParseError(line_no, "Ts", "sampling period must be positive");
      ts_line = line_no;
    } else if (key == "t_start") {
      finish(line_no);
      if (tokens.size() != 2) throw ParseError(line_no, "t_start", "expected exactly one value");
      pending.emplace();
      pending->t_start = parse_number(tokens[1], line_no, "t_start");
      pending->t_line = line_no;
    } else if (key == "num" || key == "den") {
      if (!pending) throw ParseError(line_no, key, "coefficients before any t_start");
      if (tokens.size() < 2) throw ParseError(line_no, key, "expected at least one coefficient");
      std::vector<double> coeffs;
      for (std::size_t i = 1; i < tokens.size(); ++i) coeffs.push_back(parse_number(tokens[i], line_no, key));
      if (key == "num") {
        if (pending->has_num) throw ParseError(line_no, key, "duplicate numerator");
        pending->num = std::move(coeffs);
        pending->has_num = true;
      } else {
        if (pending->has_den) throw ParseError(line_no, key, "duplicate denominator");
        pending->den = std::move(coeffs);
        pending->has_den = true;
        pending->den_line = line_no;
      }
    } else {
      throw ParseError(line_no, key, "unknown keyword");
    }
  }
  finish(line_no);

  if (!Ts) throw ParseError(line_no, "Ts", "missing Ts directive");
  if (entries.empty()) throw ParseError(ts_line, "t_start", "bank has no entries");
  return ModelBank(std::move(entries), *Ts);
}

std::string format_bank(const ModelBank& bank) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# trackmpc model bank: " << bank.size() << " entries\n";
  out << "Ts " << bank.Ts() << "\n";
  for (const auto& e : bank.entries()) {
    out << "\nt_start " << e.t_start << "\nnum";
    for (double c : e.model.num) out << ' ' << c;
    out << "\nden";
    for (double c : e.model.den) out << ' ' << c;
    out << '\n';
  }
  return out.str();
}

ModelBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bank file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bank(buf.str());
}

void save_bank(const ModelBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bank file: " + path.string());
  out << format_bank(bank);
}

}  // namespace trackmpc

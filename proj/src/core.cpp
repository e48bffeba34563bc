#include "lcmodel/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "lcmodel/error.hpp"

namespace lcmodel {

namespace {

constexpr std::string_view kHeader = "id,jd,mag,magerr,censored";

constexpr std::array<std::string_view, 8> kKnownClasses = {
    "AGN", "Blazar", "CV", "CV-Downes", "Flare", "SNe", "RR-Lyrae", kNonTransient,
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void row_error(ErrorCode code, std::size_t line_no, const std::string& what) {
  throw Error(code, "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::size_t Lightcurve::n() const noexcept {
  return static_cast<std::size_t>(std::count_if(obs.begin(), obs.end(), [](const Observation& o) { return !o.censored; }));
}

DetectedSeries detected(const Lightcurve& lc) {
  DetectedSeries out;
  const auto n = lc.n();
  out.t.reserve(n);
  out.y.reserve(n);
  out.s.reserve(n);
  for (const auto& o : lc.obs) {
    if (o.censored) continue;
    out.t.push_back(o.t);
    out.y.push_back(o.y);
    out.s.push_back(o.s);
  }
  return out;
}

void DatasetConfig::check() const {
  if (!(zero_point > 0.0) || !std::isfinite(zero_point)) throw Error(ErrorCode::InvalidConfig, "zero_point must be positive");
  if (!(detection_limit > 0.0) || !std::isfinite(detection_limit))
    throw Error(ErrorCode::InvalidConfig, "detection_limit must be positive");
  if (!(grouping_gap > 0.0) || !std::isfinite(grouping_gap))
    throw Error(ErrorCode::InvalidConfig, "grouping_gap must be positive");
  if (min_observations < 2) throw Error(ErrorCode::InvalidConfig, "min_observations must be at least 2");
}

std::vector<Lightcurve> parse_lightcurve_csv(std::istream& in, const DatasetConfig& config) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<Lightcurve> curves;
  std::unordered_map<std::string, std::size_t> index_of;

  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (!have_header) {
      if (view.empty()) continue;
      if (view != kHeader) row_error(ErrorCode::MalformedRow, line_no, "expected header '" + std::string(kHeader) + "'");
      have_header = true;
      continue;
    }
    if (view.empty()) continue;

    const auto fields = split_fields(view);
    if (fields.size() != 5) {
      row_error(ErrorCode::MalformedRow, line_no, "expected 5 fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) row_error(ErrorCode::MalformedRow, line_no, "empty id");
    const auto jd = parse_double(fields[1]);
    const auto mag = parse_double(fields[2]);
    if (!jd) row_error(ErrorCode::MalformedRow, line_no, "non-numeric jd '" + std::string(fields[1]) + "'");
    if (!mag) row_error(ErrorCode::MalformedRow, line_no, "non-numeric mag '" + std::string(fields[2]) + "'");
    bool censored = false;
    if (fields[4] == "1") {
      censored = true;
    } else if (fields[4] != "0") {
      row_error(ErrorCode::MalformedRow, line_no, "censored must be 0 or 1");
    }
    double err = 0.0;
    if (const auto parsed = parse_double(fields[3])) {
      err = *parsed;
    } else if (!censored) {
      row_error(ErrorCode::MalformedRow, line_no, "non-numeric magerr '" + std::string(fields[3]) + "'");
    }
    if (!censored && !(err > 0.0)) {
      row_error(ErrorCode::NonPositiveError, line_no, "magerr must be positive on a detected row");
    }

    const std::string id(fields[0]);
    auto [it, inserted] = index_of.try_emplace(id, curves.size());
    if (inserted) curves.push_back(Lightcurve{id, std::nullopt, {}});
    curves[it->second].obs.push_back(Observation{*jd - config.zero_point, *mag, err, censored});
  }

  if (curves.empty()) throw Error(ErrorCode::EmptyInput, have_header ? "no data rows" : "empty input");
  for (auto& lc : curves) {
    std::stable_sort(lc.obs.begin(), lc.obs.end(), [](const Observation& a, const Observation& b) { return a.t < b.t; });
  }
  return curves;
}

void write_lightcurve_csv(std::ostream& out, std::span<const Lightcurve> curves, const DatasetConfig& config) {
  out << kHeader << '\n';
  for (const auto& lc : curves) {
    for (const auto& o : lc.obs) {
      out << lc.id << ',' << format_double(o.t + config.zero_point) << ',' << format_double(o.y) << ','
          << format_double(o.s) << ',' << (o.censored ? '1' : '0') << '\n';
    }
  }
}

std::map<std::string, std::string> parse_label_csv(std::istream& in) {
  std::map<std::string, std::string> labels;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    if (!have_header) {
      if (view != "id,label") row_error(ErrorCode::MalformedRow, line_no, "expected header 'id,label'");
      have_header = true;
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      row_error(ErrorCode::MalformedRow, line_no, "expected 'id,label'");
    }
    labels[std::string(fields[0])] = canonical_label(fields[1]);
  }
  return labels;
}

void write_label_csv(std::ostream& out, std::span<const Lightcurve> curves) {
  out << "id,label\n";
  for (const auto& lc : curves) {
    if (lc.label) out << lc.id << ',' << *lc.label << '\n';
  }
}

void attach_labels(std::vector<Lightcurve>& curves, const std::map<std::string, std::string>& labels) {
  for (auto& lc : curves) {
    if (const auto it = labels.find(lc.id); it != labels.end()) lc.label = it->second;
  }
}

const Lightcurve& validate(const Lightcurve& lc, const DatasetConfig& config) {
  for (std::size_t i = 0; i < lc.obs.size(); ++i) {
    const auto& o = lc.obs[i];
    if (!std::isfinite(o.t) || !std::isfinite(o.y) || (!o.censored && !std::isfinite(o.s))) {
      throw Error(ErrorCode::NonFiniteValue, lc.id + ": non-finite value in observation " + std::to_string(i));
    }
    if (!o.censored && !(o.s > 0.0)) {
      throw Error(ErrorCode::NonFiniteValue, lc.id + ": non-positive error in observation " + std::to_string(i));
    }
    if (i > 0 && o.t < lc.obs[i - 1].t) {
      throw Error(ErrorCode::UnsortedTimes, lc.id + ": times decrease at observation " + std::to_string(i));
    }
  }
  const auto n = lc.n();
  if (n < static_cast<std::size_t>(config.min_observations)) {
    throw Error(ErrorCode::TooFewObservations,
                lc.id + ": " + std::to_string(n) + " observations, need " + std::to_string(config.min_observations));
  }
  return lc;
}

std::vector<ObservationGroup> group_observations(const Lightcurve& lc, double gap) {
  std::vector<ObservationGroup> groups;
  double previous_t = 0.0;
  for (std::size_t i = 0; i < lc.obs.size(); ++i) {
    const auto& o = lc.obs[i];
    if (o.censored) continue;
    if (groups.empty() || o.t - previous_t > gap) groups.emplace_back();
    groups.back().member_indices.push_back(i);
    previous_t = o.t;
  }
  for (auto& g : groups) {
    double sum_y = 0.0;
    double sum_t = 0.0;
    for (const auto i : g.member_indices) {
      sum_y += lc.obs[i].y;
      sum_t += lc.obs[i].t;
    }
    const auto count = static_cast<double>(g.member_indices.size());
    g.group_mean = sum_y / count;
    g.group_time = sum_t / count;
  }
  return groups;
}

std::span<const std::string_view> known_classes() noexcept { return kKnownClasses; }

std::string canonical_label(std::string_view label) {
  const auto trimmed = trim(label);
  const auto key = lower(trimmed);
  for (const auto known : kKnownClasses) {
    if (lower(known) == key) return std::string(known);
  }
  return std::string(trimmed);
}

bool is_non_transient(std::string_view label) { return canonical_label(label) == kNonTransient; }

std::vector<std::string> ordered_classes(std::vector<std::string> labels) {
  auto rank = [](const std::string& label) -> std::size_t {
    const auto it = std::find(kKnownClasses.begin(), kKnownClasses.end(), label);
    return static_cast<std::size_t>(it - kKnownClasses.begin());
  };
  std::sort(labels.begin(), labels.end(), [&](const std::string& a, const std::string& b) {
    const auto ra = rank(a);
    const auto rb = rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
  });
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) row_error(ErrorCode::InvalidConfig, line_no, "expected key=value");
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) row_error(ErrorCode::InvalidConfig, line_no, "empty key");
    kv[std::string(key)] = std::string(trim(view.substr(eq + 1)));
  }
  return kv;
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
}

namespace {

double require_double(const KeyValues& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const auto value = parse_double(it->second);
  if (!value) throw Error(ErrorCode::InvalidConfig, key + ": not a number '" + it->second + "'");
  return *value;
}

}  // namespace

void apply_key_values(DatasetConfig& target, const KeyValues& kv) {
  DatasetConfig config = target;  // left untouched when validation fails
  config.zero_point = require_double(kv, "zero_point", config.zero_point);
  config.detection_limit = require_double(kv, "detection_limit", config.detection_limit);
  config.grouping_gap = require_double(kv, "grouping_gap", config.grouping_gap);
  if (const auto it = kv.find("min_observations"); it != kv.end()) {
    const auto value = parse_integer(it->second);
    if (!value) throw Error(ErrorCode::InvalidConfig, "min_observations: not an integer '" + it->second + "'");
    config.min_observations = static_cast<int>(*value);
  }
  config.check();
  target = config;
}

KeyValues to_key_values(const DatasetConfig& config) {
  return {
      {"zero_point", format_double(config.zero_point)},
      {"detection_limit", format_double(config.detection_limit)},
      {"grouping_gap", format_double(config.grouping_gap)},
      {"min_observations", std::to_string(config.min_observations)},
  };
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

std::optional<double> parse_double(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return std::nullopt;
  double value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_integer(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  long long value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

}  // namespace lcmodel

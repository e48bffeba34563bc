#include "lcmodel/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "lcmodel/error.hpp"
#include "lcmodel/stats.hpp"

namespace lcmodel::features {

namespace {

constexpr std::array<std::string_view, 27> kFullNames = {
    "skew",   "kurtosis", "std",    "beyond1std", "amplitude", "maxslope", "mad",   "medbuf",  "pairslope",
    "rcorbor", "fpr20",   "fpr35",  "fpr50",      "fpr80",     "peramp",   "pdfp",  "totvar",  "quadvar",
    "famp",   "fslope",   "outl",   "lsd",        "gtvar",     "gscore",   "shov",  "maxdiff", "dscore",
};
constexpr std::size_t kRichardsCount = 16;

constexpr std::array<std::string_view, 14> kLogTransformed = {
    "totvar", "quadvar", "famp", "fslope", "outl", "gtvar", "shov",
    "maxdiff", "std", "amplitude", "mad", "maxslope", "peramp", "pdfp",
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string_view to_string(FeatureSet tag) noexcept { return tag == FeatureSet::Richards ? "richards" : "full"; }

FeatureSet feature_set_from(std::string_view name) {
  if (name == "richards") return FeatureSet::Richards;
  if (name == "full") return FeatureSet::Full;
  throw Error(ErrorCode::InvalidConfig, "unknown feature set '" + std::string(name) + "'");
}

std::string_view to_string(GroupNormalization norm) noexcept {
  return norm == GroupNormalization::Observations ? "observations" : "groups";
}

GroupNormalization group_normalization_from(std::string_view name) {
  if (name == "observations") return GroupNormalization::Observations;
  if (name == "groups") return GroupNormalization::Groups;
  throw Error(ErrorCode::InvalidConfig, "unknown group normalization '" + std::string(name) + "'");
}

std::span<const std::string_view> feature_names(FeatureSet tag) noexcept {
  const std::span<const std::string_view> all(kFullNames);
  return tag == FeatureSet::Richards ? all.first(kRichardsCount) : all;
}

std::span<const std::string_view> log_transformed() noexcept { return kLogTransformed; }

bool is_log_transformed(std::string_view name) noexcept {
  return std::find(kLogTransformed.begin(), kLogTransformed.end(), name) != kLogTransformed.end();
}

CurveMeasures curve_measures(const gp::GPFit& fit) {
  const auto& f = fit.mean_on_grid;
  const auto m = static_cast<double>(f.size());
  CurveMeasures c;
  for (std::size_t j = 0; j + 1 < f.size(); ++j) {
    const double d = f[j + 1] - f[j];
    c.totvar += std::abs(d);
    c.quadvar += d * d;
  }
  c.totvar /= m;
  c.quadvar /= m;
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  c.famp = *hi - *lo;
  for (const auto d : gp::posterior_derivative(fit)) c.fslope = std::max(c.fslope, std::abs(d));
  return c;
}

double outlier_measure(const gp::GPFit& fit) {
  double outl = 0.0;
  for (const auto r : fit.scaled_residuals) outl = std::max(outl, std::abs(r));
  return outl;
}

GroupStats group_stats(const Lightcurve& lc, std::span<const ObservationGroup> groups) {
  GroupStats g;
  std::size_t members = 0;
  double ss = 0.0;
  for (const auto& group : groups) {
    g.group_means.push_back(group.group_mean);
    for (const auto i : group.member_indices) {
      const double d = lc.obs[i].y - group.group_mean;
      ss += d * d;
    }
    members += group.member_indices.size();
  }
  const auto dof = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(members) - static_cast<std::ptrdiff_t>(groups.size()), 1);
  g.pooled_sd = std::sqrt(ss / static_cast<double>(dof));
  g.grand_mean = stats::mean(g.group_means);
  return g;
}

GroupMeasures group_measures(const Lightcurve& lc, std::span<const ObservationGroup> groups, GroupNormalization norm) {
  const auto g = group_stats(lc, groups);
  const double sigma = std::max(g.pooled_sd, kSigmaFloor);
  const double denom = norm == GroupNormalization::Observations ? static_cast<double>(lc.n())
                                                                : static_cast<double>(groups.size());
  GroupMeasures out;
  out.lsd = std::log(sigma);
  for (std::size_t k = 0; k + 1 < g.group_means.size(); ++k) out.gtvar += std::abs(g.group_means[k + 1] - g.group_means[k]);
  for (const auto mean : g.group_means) out.gscore += stats::normal_pdf((mean - g.grand_mean) / sigma);
  if (denom > 0.0) {
    out.gtvar /= denom;
    out.gscore /= denom;
  }
  return out;
}

SampleMeasures sample_measures(const Lightcurve& lc) {
  const auto data = detected(lc);
  SampleMeasures out;
  const auto n = data.size();
  if (n == 0) return out;
  const double median = stats::median(data.y);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double d = std::abs(data.y[j + 1] - data.y[j]);
    out.shov += d;
    out.maxdiff = std::max(out.maxdiff, d);
  }
  for (std::size_t j = 0; j < n; ++j) out.dscore += stats::normal_pdf((data.y[j] - median) / data.s[j]);
  out.shov /= static_cast<double>(n);
  out.dscore /= static_cast<double>(n);
  return out;
}

NamedValues raw_measures(const Lightcurve& lc, const gp::GPFit& fit, std::span<const ObservationGroup> groups,
                         GroupNormalization norm) {
  auto values = richards_named(richards_measures(lc));
  const auto c = curve_measures(fit);
  const auto g = group_measures(lc, groups, norm);
  const auto s = sample_measures(lc);
  values.insert(values.end(), {
                                  {"totvar", c.totvar},
                                  {"quadvar", c.quadvar},
                                  {"famp", c.famp},
                                  {"fslope", c.fslope},
                                  {"outl", outlier_measure(fit)},
                                  {"lsd", g.lsd},
                                  {"gtvar", g.gtvar},
                                  {"gscore", g.gscore},
                                  {"shov", s.shov},
                                  {"maxdiff", s.maxdiff},
                                  {"dscore", s.dscore},
                              });
  return values;
}

std::vector<double> FeatureVector::row() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& [name, v] : values) out.push_back(v);
  return out;
}

double FeatureVector::value(std::string_view name) const {
  for (const auto& [key, v] : values) {
    if (key == name) return v;
  }
  throw Error(ErrorCode::DimensionMismatch, "no measure named '" + std::string(name) + "'");
}

FeatureVector assemble_features(const Lightcurve& lc, const gp::GPFit& fit, std::span<const ObservationGroup> groups,
                                FeatureSet tag, GroupNormalization norm) {
  FeatureVector fv;
  fv.curve_id = lc.id;
  fv.label = lc.label;
  fv.tag = tag;
  // Richards-only vectors skip the model-based measures entirely.
  auto raw = tag == FeatureSet::Richards ? richards_named(richards_measures(lc)) : raw_measures(lc, fit, groups, norm);
  for (auto& [name, v] : raw) {
    if (is_log_transformed(name)) v = std::log(v + kLogFloor);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteMeasure, lc.id + ": measure '" + name + "' is not finite");
  }
  fv.values = std::move(raw);
  return fv;
}

FeatureVector extract(const Lightcurve& lc, const gp::GPHyperparameters& h, const ExtractionOptions& options) {
  if (options.tag == FeatureSet::Richards) {
    return assemble_features(lc, gp::GPFit{}, {}, options.tag, options.norm);
  }
  const auto fit = gp::fit_posterior(lc, h, options.prior, options.grid_size);
  const auto groups = group_observations(lc, options.grouping_gap);
  return assemble_features(lc, fit, groups, options.tag, options.norm);
}

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> vectors) {
  if (vectors.empty()) return;
  out << "id,label";
  for (const auto& [name, v] : vectors.front().values) out << ',' << name;
  out << '\n';
  for (const auto& fv : vectors) {
    out << fv.curve_id << ',' << fv.label.value_or("");
    for (const auto& [name, v] : fv.values) out << ',' << format_double(v);
    out << '\n';
  }
}

FeatureTable read_feature_csv(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (!have_header) {
      if (fields.size() < 3 || fields[0] != "id" || fields[1] != "label") {
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected header 'id,label,<measures>'");
      }
      table.names.assign(fields.begin() + 2, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != table.names.size() + 2) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(table.names.size() + 2) + " fields");
    }
    std::vector<double> row;
    row.reserve(table.names.size());
    for (std::size_t k = 2; k < fields.size(); ++k) {
      const auto v = parse_double(fields[k]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::MalformedRow,
                    "line " + std::to_string(line_no) + ": bad value for '" + table.names[k - 2] + "'");
      }
      row.push_back(*v);
    }
    table.ids.push_back(fields[0]);
    table.labels.push_back(fields[1].empty() ? std::string{} : canonical_label(fields[1]));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorCode::EmptyInput, "empty feature file");
  return table;
}

void write_feature_sidecar(std::ostream& out, const ExtractionOptions& options, const gp::GPHyperparameters& h) {
  KeyValues kv = gp::to_key_values(h);
  kv["feature_set"] = std::string(to_string(options.tag));
  kv["group_normalization"] = std::string(to_string(options.norm));
  kv["grid_size"] = std::to_string(options.grid_size);
  kv["grouping_gap"] = format_double(options.grouping_gap);
  kv["detection_limit"] = format_double(options.prior.detection_limit);
  kv["span_threshold"] = format_double(options.prior.span_threshold);
  kv["log_floor"] = format_double(kLogFloor);
  std::string transforms;
  for (const auto name : log_transformed()) {
    if (!transforms.empty()) transforms += ' ';
    transforms += name;
  }
  kv["log_transformed"] = transforms;
  write_key_values(out, kv);
}

}  // namespace lcmodel::features

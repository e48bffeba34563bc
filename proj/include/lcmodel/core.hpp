/**
 * @file core.hpp
 * @brief Lightcurve data model, CSV ingestion, validation and intra-night grouping.
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcmodel {

/**
 * @brief One photometric measurement.
 *
 * `t` is days since the dataset zero-point, `y` a magnitude (smaller is brighter)
 * and `s` the reported magnitude error. Censored rows carry an upper limit in `y`
 * and are excluded from fitting and from every measure.
 */
struct Observation {
  double t{};
  double y{};
  double s{};
  bool censored{false};

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Lightcurve {
  std::string id;
  std::optional<std::string> label;
  std::vector<Observation> obs;  ///< sorted nondecreasing in t

  /// Number of non-censored observations.
  [[nodiscard]] std::size_t n() const noexcept;

  friend bool operator==(const Lightcurve&, const Lightcurve&) = default;
};

/// Non-censored columns of a lightcurve, in time order.
struct DetectedSeries {
  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> s;

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
};

[[nodiscard]] DetectedSeries detected(const Lightcurve& lc);

struct ObservationGroup {
  std::vector<std::size_t> member_indices;  ///< indices into Lightcurve::obs
  double group_mean{};
  double group_time{};
};

struct DatasetConfig {
  double zero_point = 53464.0;           ///< Julian date subtracted from every epoch
  double detection_limit = 20.5;         ///< magnitude
  double grouping_gap = 30.0 / 1440.0;   ///< days (30 minutes)
  int min_observations = 5;

  /// Throws InvalidConfig when a field is out of range.
  void check() const;
};

/**
 * @brief Parses the `id,jd,mag,magerr,censored` CSV schema.
 *
 * Curves are returned in order of first appearance of their id; rows within a
 * curve are stably sorted by time and rebased by `config.zero_point`.
 */
[[nodiscard]] std::vector<Lightcurve> parse_lightcurve_csv(std::istream& in, const DatasetConfig& config);

/// Inverse of parse_lightcurve_csv. Values are written in shortest round-trip form.
void write_lightcurve_csv(std::ostream& out, std::span<const Lightcurve> curves, const DatasetConfig& config);

/// Reads an `id,label` sidecar file.
[[nodiscard]] std::map<std::string, std::string> parse_label_csv(std::istream& in);

void write_label_csv(std::ostream& out, std::span<const Lightcurve> curves);

/// Sets `label` on every curve whose id is present in `labels`.
void attach_labels(std::vector<Lightcurve>& curves, const std::map<std::string, std::string>& labels);

/// Returns `lc` unchanged or throws NonFiniteValue / UnsortedTimes / TooFewObservations.
[[nodiscard]] const Lightcurve& validate(const Lightcurve& lc, const DatasetConfig& config);

/**
 * @brief Greedy chronological clustering of the non-censored observations.
 *
 * A new group starts whenever the time since the previous non-censored
 * observation exceeds `gap` days.
 */
[[nodiscard]] std::vector<ObservationGroup> group_observations(const Lightcurve& lc, double gap);

// Class labels -------------------------------------------------------------

inline constexpr std::string_view kNonTransient = "non-transient";

/// The eight recognised classes in canonical order.
[[nodiscard]] std::span<const std::string_view> known_classes() noexcept;

/// Case-insensitive match against the known classes; unknown labels pass through.
[[nodiscard]] std::string canonical_label(std::string_view label);

[[nodiscard]] bool is_non_transient(std::string_view label);

/// Orders labels: known classes first in canonical order, then the rest lexicographically.
[[nodiscard]] std::vector<std::string> ordered_classes(std::vector<std::string> labels);

// Flat key=value files ------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

/// Blank lines and lines starting with '#' are skipped; keys and values are trimmed.
[[nodiscard]] KeyValues parse_key_values(std::istream& in);

void write_key_values(std::ostream& out, const KeyValues& kv);

/// Applies the DatasetConfig keys present in `kv` and validates the result.
void apply_key_values(DatasetConfig& config, const KeyValues& kv);

[[nodiscard]] KeyValues to_key_values(const DatasetConfig& config);

// Numeric helpers used across modules ---------------------------------------

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Strict parse of a full field; std::nullopt on any trailing garbage.
[[nodiscard]] std::optional<double> parse_double(std::string_view field);

[[nodiscard]] std::optional<long long> parse_integer(std::string_view field);

}  // namespace lcmodel

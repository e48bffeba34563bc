/**
 * @file features.hpp
 * @brief Classification measures: fitted-curve, group-scale, sample-based and the
 *        sixteen-measure Richards baseline, plus feature-vector assembly and I/O.
 */
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcmodel/core.hpp"
#include "lcmodel/gp.hpp"

namespace lcmodel::features {

enum class FeatureSet { Richards, Full };

/// Denominator of gtvar and gscore: observation count (default) or group count.
enum class GroupNormalization { Observations, Groups };

[[nodiscard]] std::string_view to_string(FeatureSet tag) noexcept;
[[nodiscard]] FeatureSet feature_set_from(std::string_view name);
[[nodiscard]] std::string_view to_string(GroupNormalization norm) noexcept;
[[nodiscard]] GroupNormalization group_normalization_from(std::string_view name);

/// Canonical column order for a feature set (16 or 27 names).
[[nodiscard]] std::span<const std::string_view> feature_names(FeatureSet tag) noexcept;

/// Measures that are mapped through x -> ln(x + 1e-6) during assembly.
[[nodiscard]] std::span<const std::string_view> log_transformed() noexcept;
[[nodiscard]] bool is_log_transformed(std::string_view name) noexcept;

inline constexpr double kLogFloor = 1e-6;
inline constexpr double kSigmaFloor = 1e-6;

struct CurveMeasures {
  double totvar{};
  double quadvar{};
  double famp{};
  double fslope{};
};

struct GroupStats {
  double pooled_sd{};   ///< residual sd about each group's own mean
  double grand_mean{};  ///< mean of the group means
  std::vector<double> group_means;
};

struct GroupMeasures {
  double lsd{};
  double gtvar{};
  double gscore{};
};

struct SampleMeasures {
  double shov{};
  double maxdiff{};
  double dscore{};
};

struct RichardsMeasures {
  double skew{};
  double kurtosis{};
  double std{};
  double beyond1std{};
  double amplitude{};
  double maxslope{};
  double mad{};
  double medbuf{};
  double pairslope{};
  double rcorbor{};
  double fpr20{};
  double fpr35{};
  double fpr50{};
  double fpr80{};
  double peramp{};
  double pdfp{};
};

using NamedValues = std::vector<std::pair<std::string, double>>;

[[nodiscard]] CurveMeasures curve_measures(const gp::GPFit& fit);

[[nodiscard]] double outlier_measure(const gp::GPFit& fit);

[[nodiscard]] GroupStats group_stats(const Lightcurve& lc, std::span<const ObservationGroup> groups);

[[nodiscard]] GroupMeasures group_measures(const Lightcurve& lc, std::span<const ObservationGroup> groups,
                                           GroupNormalization norm = GroupNormalization::Observations);

[[nodiscard]] SampleMeasures sample_measures(const Lightcurve& lc);

[[nodiscard]] RichardsMeasures richards_measures(const Lightcurve& lc);

/// All 27 measures before any transform, in canonical full-set order.
[[nodiscard]] NamedValues raw_measures(const Lightcurve& lc, const gp::GPFit& fit,
                                       std::span<const ObservationGroup> groups,
                                       GroupNormalization norm = GroupNormalization::Observations);

[[nodiscard]] NamedValues richards_named(const RichardsMeasures& r);

struct FeatureVector {
  std::string curve_id;
  std::optional<std::string> label;
  FeatureSet tag{FeatureSet::Full};
  NamedValues values;  ///< canonical order, post-transform

  [[nodiscard]] std::vector<double> row() const;
  [[nodiscard]] double value(std::string_view name) const;
};

/**
 * @brief Selects the measures of `tag`, applies the log transforms and checks finiteness.
 *
 * Throws NonFiniteMeasure naming the offending measure.
 */
[[nodiscard]] FeatureVector assemble_features(const Lightcurve& lc, const gp::GPFit& fit,
                                              std::span<const ObservationGroup> groups, FeatureSet tag,
                                              GroupNormalization norm = GroupNormalization::Observations);

struct ExtractionOptions {
  FeatureSet tag{FeatureSet::Full};
  GroupNormalization norm{GroupNormalization::Observations};
  gp::PriorMeanRule prior{};
  std::size_t grid_size = gp::kDefaultGridSize;
  double grouping_gap = 30.0 / 1440.0;
};

/// fit_posterior + group_observations + assemble_features for one curve.
[[nodiscard]] FeatureVector extract(const Lightcurve& lc, const gp::GPHyperparameters& h,
                                    const ExtractionOptions& options);

// Feature matrix CSV: `id,label,<names...>` ------------------------------------

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::string> ids;
  std::vector<std::string> labels;         ///< empty string when unlabeled
  std::vector<std::vector<double>> rows;
};

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> vectors);

[[nodiscard]] FeatureTable read_feature_csv(std::istream& in);

/// Provenance sidecar: feature set, transform list, normalisation, prior rule and hyperparameters.
void write_feature_sidecar(std::ostream& out, const ExtractionOptions& options, const gp::GPHyperparameters& h);

}  // namespace lcmodel::features

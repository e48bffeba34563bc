/**
 * @file synth.hpp
 * @brief Seeded synthetic lightcurves with survey-like cadence, reported errors and
 *        detection-limit censoring.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcmodel/core.hpp"

namespace lcmodel::synth {

inline constexpr double kDaysPerYear = 365.25;

/// Window of each year (days since the zero-point, modulo one year) with no observations.
struct AnnualGap {
  double start_day_of_year{};
  double length_days{};
};

struct CadenceSpec {
  int n_nights = 40;
  int exposures_per_night = 4;
  double intra_night_gap = 10.0 / 1440.0;  ///< days
  std::optional<AnnualGap> annual_gap;
  double total_span = 1000.0;              ///< days
};

enum class CurveKind { Flat, Burst, Stochastic, Periodic };

[[nodiscard]] std::string_view to_string(CurveKind kind) noexcept;
[[nodiscard]] CurveKind curve_kind_from(std::string_view name);

/// Class label used for a kind: flat -> non-transient, burst -> SNe, stochastic -> AGN, periodic -> RR-Lyrae.
[[nodiscard]] std::string_view label_for(CurveKind kind) noexcept;

struct ClassSpec {
  CurveKind kind{CurveKind::Flat};
  double amplitude{};          ///< mag; burst depth, GP signal sd, or sinusoid semi-amplitude
  double timescale = 1.0;      ///< days; burst width, GP length-scale, or period
  double baseline = 18.0;      ///< quiescent magnitude (bursts start from detection_limit)
  double detection_limit = 20.5;
  /// Noise sd in mag; unset draws each point's noise from N(0, s) with s its reported error.
  std::optional<double> noise_sd;
  /// Burst peak time; unset draws it uniformly over the observed span.
  std::optional<double> peak_time;
};

/// Reported errors are log-uniform on [s_min, s_max].
struct ErrorModel {
  double s_min = 0.05;
  double s_max = 0.3;
};

struct SyntheticCurve {
  Lightcurve curve;
  CurveKind kind{};
  std::vector<double> truth;  ///< noise-free magnitude at every observation (censored included)
  ClassSpec spec;             ///< with peak_time resolved for bursts
  double phase{};             ///< periodic kinds only

  /// `key=value;...` description of the generating parameters.
  [[nodiscard]] std::string true_params() const;
};

/**
 * @brief Sorted observation times: nights drawn uniformly over the span, avoiding
 *        the annual gap, each contributing evenly spaced exposures.
 *
 * Throws InfeasibleSpec for invalid or unsatisfiable specs.
 */
[[nodiscard]] std::vector<double> generate_cadence(const CadenceSpec& spec, std::uint64_t seed);

/// Throws TooFewTimes for fewer than five times.
[[nodiscard]] SyntheticCurve generate_curve(const ClassSpec& spec, std::span<const double> times, std::uint64_t seed,
                                            std::string id = "synthetic", const ErrorModel& errors = {});

/// Per-kind parameter ranges of the benchmark; see generate_benchmark().
struct BenchmarkSpec {
  int curves_per_kind = 500;
  ErrorModel errors{};
  /// Each curve draws a typical error level log-uniformly from `errors`; its points are
  /// log-uniform within a factor `error_spread` of that level, clipped to `errors`.
  double error_spread = 1.3;
  double detection_limit = 20.5;
  int min_observations = 5;
};

/**
 * @brief Four kinds times `curves_per_kind` curves with per-curve random cadence
 *        (annual gaps, 1-4 exposures per night, spans of months to years) and
 *        per-curve random class parameters.
 *
 * Curves with fewer than `min_observations` detections after censoring are redrawn.
 */
[[nodiscard]] std::vector<SyntheticCurve> generate_benchmark(const BenchmarkSpec& spec, std::uint64_t seed);

/// Ground-truth sidecar `id,kind,true_params`.
void write_truth_csv(std::ostream& out, std::span<const SyntheticCurve> curves);

}  // namespace lcmodel::synth

/**
 * @file gp.hpp
 * @brief Gaussian process regression of a single lightcurve under a squared-exponential
 *        kernel and an adaptive constant prior mean.
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lcmodel/core.hpp"

namespace lcmodel::gp {

struct GPHyperparameters {
  double sigma_f2{};             ///< signal variance, mag^2
  double sigma_n2{};             ///< noise variance, mag^2
  double length_scale = 140.0;   ///< days

  /// Throws InvalidConfig unless all fields are finite, sigma_f2 > 0, sigma_n2 >= 0, length_scale > 0.
  void check() const;
};

/**
 * @brief Chooses the constant prior mean of a curve.
 *
 * Curves observed over less than `span_threshold` days revert to the detection
 * limit; longer curves revert to their median magnitude.
 */
struct PriorMeanRule {
  double detection_limit = 20.5;
  double span_threshold = 365.0;
};

inline constexpr std::size_t kDefaultGridSize = 300;

/**
 * @brief Posterior of one curve, evaluated on an even grid and at the observation times.
 *
 * Only non-censored observations are represented. `var_on_grid` is the variance of
 * the latent curve (no observation noise) and is clamped at zero.
 */
struct GPFit {
  std::vector<double> grid;              ///< m points spanning [min t, max t], endpoints included
  std::vector<double> mean_on_grid;
  std::vector<double> var_on_grid;
  std::vector<double> obs_times;
  std::vector<double> observed;          ///< y at obs_times
  std::vector<double> errors;            ///< reported s at obs_times
  std::vector<double> mean_at_obs;
  double prior_mean_used{};
  std::vector<double> residuals;         ///< observed - mean_at_obs
  std::vector<double> scaled_residuals;  ///< residuals / errors
};

/// sigma_f2 * exp(-(x - x')^2 / (2 l^2)) + sigma_n2 * [x == x'].
[[nodiscard]] double kernel(double x, double x_prime, const GPHyperparameters& h) noexcept;

/// Noise-free part of kernel().
[[nodiscard]] double signal_kernel(double x, double x_prime, const GPHyperparameters& h) noexcept;

[[nodiscard]] double select_prior_mean(const Lightcurve& lc, const PriorMeanRule& rule);

/**
 * @brief Empirical-Bayes hyperparameters from a labelled reference set.
 *
 * sigma_f2 is the median over non-transient curves of the sample variance of their
 * magnitudes; sigma_n2 is the mean squared reported error over every detected
 * observation of every reference curve. Throws NoNonTransients.
 */
[[nodiscard]] GPHyperparameters estimate_hyperparameters(std::span<const Lightcurve> reference,
                                                         double length_scale = 140.0);

/// Fits the posterior using the prior mean chosen by `rule`.
[[nodiscard]] GPFit fit_posterior(const Lightcurve& lc, const GPHyperparameters& h, const PriorMeanRule& rule,
                                  std::size_t grid_size = kDefaultGridSize);

/**
 * @brief Fits the posterior of detected data with an explicit prior mean.
 *
 * The system (K + sigma_n2 I + eps I) is factorised by Cholesky with eps = 1e-8 sigma_f2;
 * a failed factorisation is retried once with 100 eps before FactorizationFailure.
 * Throws DegenerateSpan when all times coincide.
 */
[[nodiscard]] GPFit fit_posterior(const DetectedSeries& data, const GPHyperparameters& h, double prior_mean,
                                  std::size_t grid_size = kDefaultGridSize);

/// Finite-difference derivative of mean_on_grid: central inside, one-sided at both ends.
[[nodiscard]] std::vector<double> posterior_derivative(const GPFit& fit);

[[nodiscard]] std::vector<double> grid_derivative(std::span<const double> grid, std::span<const double> values);

[[nodiscard]] KeyValues to_key_values(const GPHyperparameters& h);

/// Reads sigma_f2, sigma_n2 and (optionally) length_scale.
[[nodiscard]] GPHyperparameters hyperparameters_from(const KeyValues& kv);

/// Plot dump: a `# id=...,prior_mean=...` comment line, then `t,mean,var` rows on the grid.
void write_fit_csv(std::ostream& out, const std::string& id, const GPFit& fit);

}  // namespace lcmodel::gp

#include "lcmodel/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "lcmodel/error.hpp"
#include "lcmodel/stats.hpp"

namespace lcmodel::gp {

void GPHyperparameters::check() const {
  if (!std::isfinite(sigma_f2) || !(sigma_f2 > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma_f2 must be positive");
  if (!std::isfinite(sigma_n2) || sigma_n2 < 0.0) throw Error(ErrorCode::InvalidConfig, "sigma_n2 must be nonnegative");
  if (!std::isfinite(length_scale) || !(length_scale > 0.0))
    throw Error(ErrorCode::InvalidConfig, "length_scale must be positive");
}

double signal_kernel(double x, double x_prime, const GPHyperparameters& h) noexcept {
  const double d = x - x_prime;
  return h.sigma_f2 * std::exp(-(d * d) / (2.0 * h.length_scale * h.length_scale));
}

double kernel(double x, double x_prime, const GPHyperparameters& h) noexcept {
  return signal_kernel(x, x_prime, h) + (x == x_prime ? h.sigma_n2 : 0.0);
}

double select_prior_mean(const Lightcurve& lc, const PriorMeanRule& rule) {
  const auto data = detected(lc);
  if (data.size() == 0) return rule.detection_limit;
  const auto [lo, hi] = std::minmax_element(data.t.begin(), data.t.end());
  if (*hi - *lo < rule.span_threshold) return rule.detection_limit;
  return stats::median(data.y);
}

GPHyperparameters estimate_hyperparameters(std::span<const Lightcurve> reference, double length_scale) {
  std::vector<double> variances;
  double sum_s2 = 0.0;
  std::size_t count = 0;
  for (const auto& lc : reference) {
    const auto data = detected(lc);
    for (const auto s : data.s) sum_s2 += s * s;
    count += data.size();
    if (lc.label && is_non_transient(*lc.label) && data.size() >= 2) {
      variances.push_back(stats::sample_variance(data.y));
    }
  }
  if (variances.empty()) throw Error(ErrorCode::NoNonTransients, "reference set has no non-transient curves");
  GPHyperparameters h;
  h.sigma_f2 = stats::median(variances);
  h.sigma_n2 = count > 0 ? sum_s2 / static_cast<double>(count) : 0.0;
  h.length_scale = length_scale;
  return h;
}

GPFit fit_posterior(const Lightcurve& lc, const GPHyperparameters& h, const PriorMeanRule& rule, std::size_t grid_size) {
  return fit_posterior(detected(lc), h, select_prior_mean(lc, rule), grid_size);
}

GPFit fit_posterior(const DetectedSeries& data, const GPHyperparameters& h, double prior_mean, std::size_t grid_size) {
  h.check();
  if (grid_size < 2) throw Error(ErrorCode::InvalidConfig, "grid size must be at least 2");
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n == 0) throw Error(ErrorCode::DegenerateSpan, "no detected observations");
  const auto [lo_it, hi_it] = std::minmax_element(data.t.begin(), data.t.end());
  const double t_min = *lo_it;
  const double t_max = *hi_it;
  if (!(t_max > t_min)) throw Error(ErrorCode::DegenerateSpan, "all observation times coincide");

  Eigen::MatrixXd k_xx(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k_xx(i, i) = h.sigma_f2;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = signal_kernel(data.t[i], data.t[j], h);
      k_xx(i, j) = v;
      k_xx(j, i) = v;
    }
  }

  const double jitter = 1e-8 * h.sigma_f2;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool factored = false;
  for (const double eps : {jitter, 100.0 * jitter}) {
    Eigen::MatrixXd system = k_xx;
    system.diagonal().array() += h.sigma_n2 + eps;
    llt.compute(system);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
        (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      factored = true;
      break;
    }
  }
  if (!factored) throw Error(ErrorCode::FactorizationFailure, "covariance is not positive definite");

  Eigen::VectorXd centered(n);
  for (Eigen::Index i = 0; i < n; ++i) centered(i) = data.y[i] - prior_mean;
  const Eigen::VectorXd alpha = llt.solve(centered);

  GPFit fit;
  fit.prior_mean_used = prior_mean;
  const auto m = static_cast<Eigen::Index>(grid_size);
  fit.grid.resize(grid_size);
  const double step = (t_max - t_min) / static_cast<double>(grid_size - 1);
  for (std::size_t j = 0; j < grid_size; ++j) fit.grid[j] = t_min + step * static_cast<double>(j);
  fit.grid.back() = t_max;

  Eigen::MatrixXd k_xg(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) k_xg(i, j) = signal_kernel(data.t[i], fit.grid[j], h);
  }
  const Eigen::VectorXd mean_g = k_xg.transpose() * alpha;
  const Eigen::MatrixXd v = llt.matrixL().solve(k_xg);
  const Eigen::VectorXd explained = v.colwise().squaredNorm().transpose();

  fit.mean_on_grid.resize(grid_size);
  fit.var_on_grid.resize(grid_size);
  for (Eigen::Index j = 0; j < m; ++j) {
    fit.mean_on_grid[j] = prior_mean + mean_g(j);
    fit.var_on_grid[j] = std::max(0.0, h.sigma_f2 - explained(j));
  }

  const Eigen::VectorXd mean_x = k_xx * alpha;
  fit.obs_times = data.t;
  fit.observed = data.y;
  fit.errors = data.s;
  fit.mean_at_obs.resize(data.size());
  fit.residuals.resize(data.size());
  fit.scaled_residuals.resize(data.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.mean_at_obs[i] = prior_mean + mean_x(i);
    fit.residuals[i] = data.y[i] - fit.mean_at_obs[i];
    fit.scaled_residuals[i] = fit.residuals[i] / data.s[i];
  }
  return fit;
}

std::vector<double> posterior_derivative(const GPFit& fit) { return grid_derivative(fit.grid, fit.mean_on_grid); }

std::vector<double> grid_derivative(std::span<const double> grid, std::span<const double> values) {
  const auto m = grid.size();
  if (m < 3 || values.size() != m) throw Error(ErrorCode::DegenerateSpan, "derivative needs at least 3 grid points");
  if (!(grid.back() > grid.front())) throw Error(ErrorCode::DegenerateSpan, "grid has zero span");
  std::vector<double> out(m);
  out.front() = (values[1] - values[0]) / (grid[1] - grid[0]);
  out.back() = (values[m - 1] - values[m - 2]) / (grid[m - 1] - grid[m - 2]);
  for (std::size_t j = 1; j + 1 < m; ++j) out[j] = (values[j + 1] - values[j - 1]) / (grid[j + 1] - grid[j - 1]);
  return out;
}

KeyValues to_key_values(const GPHyperparameters& h) {
  return {
      {"sigma_f2", format_double(h.sigma_f2)},
      {"sigma_n2", format_double(h.sigma_n2)},
      {"length_scale", format_double(h.length_scale)},
  };
}

GPHyperparameters hyperparameters_from(const KeyValues& kv) {
  auto read = [&](const std::string& key, std::optional<double> fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (fallback) return *fallback;
      throw Error(ErrorCode::InvalidConfig, "missing hyperparameter '" + key + "'");
    }
    const auto value = parse_double(it->second);
    if (!value) throw Error(ErrorCode::InvalidConfig, key + ": not a number '" + it->second + "'");
    return *value;
  };
  GPHyperparameters h;
  h.sigma_f2 = read("sigma_f2", std::nullopt);
  h.sigma_n2 = read("sigma_n2", std::nullopt);
  h.length_scale = read("length_scale", 140.0);
  h.check();
  return h;
}

void write_fit_csv(std::ostream& out, const std::string& id, const GPFit& fit) {
  out << "# id=" << id << ",prior_mean=" << format_double(fit.prior_mean_used) << ",m=" << fit.grid.size() << '\n';
  out << "t,mean,var\n";
  for (std::size_t j = 0; j < fit.grid.size(); ++j) {
    out << format_double(fit.grid[j]) << ',' << format_double(fit.mean_on_grid[j]) << ','
        << format_double(fit.var_on_grid[j]) << '\n';
  }
}

}  // namespace lcmodel::gp

#include "lcmodel/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lcmodel/error.hpp"
#include "lcmodel/random.hpp"

namespace lcmodel::synth {

namespace {

// Random streams per curve.
enum Stream : std::uint64_t { kShape = 0, kErrors = 1, kNoise = 2 };

bool in_gap(double t, const AnnualGap& gap) {
  const double doy = std::fmod(t, kDaysPerYear);
  const double end = gap.start_day_of_year + gap.length_days;
  if (end <= kDaysPerYear) return doy >= gap.start_day_of_year && doy < end;
  return doy >= gap.start_day_of_year || doy < end - kDaysPerYear;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

std::string_view to_string(CurveKind kind) noexcept {
  switch (kind) {
    case CurveKind::Flat: return "flat";
    case CurveKind::Burst: return "burst";
    case CurveKind::Stochastic: return "stochastic";
    case CurveKind::Periodic: return "periodic";
  }
  return "unknown";
}

CurveKind curve_kind_from(std::string_view name) {
  for (const auto kind : {CurveKind::Flat, CurveKind::Burst, CurveKind::Stochastic, CurveKind::Periodic}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown curve kind '" + std::string(name) + "'");
}

std::string_view label_for(CurveKind kind) noexcept {
  switch (kind) {
    case CurveKind::Flat: return kNonTransient;
    case CurveKind::Burst: return "SNe";
    case CurveKind::Stochastic: return "AGN";
    case CurveKind::Periodic: return "RR-Lyrae";
  }
  return kNonTransient;
}

std::string SyntheticCurve::true_params() const {
  std::ostringstream out;
  out << "amplitude=" << format_double(spec.amplitude) << ";timescale=" << format_double(spec.timescale)
      << ";baseline=" << format_double(spec.baseline) << ";detection_limit=" << format_double(spec.detection_limit);
  if (spec.peak_time) out << ";peak_time=" << format_double(*spec.peak_time);
  if (kind == CurveKind::Periodic) out << ";phase=" << format_double(phase);
  if (spec.noise_sd) out << ";noise_sd=" << format_double(*spec.noise_sd);
  return out.str();
}

std::vector<double> generate_cadence(const CadenceSpec& spec, std::uint64_t seed) {
  if (spec.n_nights <= 0 || spec.exposures_per_night < 1 || spec.exposures_per_night > 4 ||
      !(spec.intra_night_gap > 0.0) || !(spec.total_span > 0.0)) {
    throw Error(ErrorCode::InfeasibleSpec, "cadence fields must be positive with 1-4 exposures per night");
  }
  const double night_length = spec.intra_night_gap * (spec.exposures_per_night - 1);
  if (night_length > spec.total_span) throw Error(ErrorCode::InfeasibleSpec, "a night does not fit in the span");
  if (spec.annual_gap) {
    const auto& g = *spec.annual_gap;
    if (g.start_day_of_year < 0.0 || g.start_day_of_year >= kDaysPerYear || !(g.length_days > 0.0) ||
        g.length_days >= kDaysPerYear) {
      throw Error(ErrorCode::InfeasibleSpec, "annual gap must lie inside the year");
    }
  }

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> start(0.0, spec.total_span - night_length);
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(spec.n_nights * spec.exposures_per_night));
  const long max_attempts = 1000L * spec.n_nights;
  long attempts = 0;
  int nights = 0;
  while (nights < spec.n_nights) {
    if (++attempts > max_attempts) throw Error(ErrorCode::InfeasibleSpec, "annual gap leaves no room for nights");
    const double t0 = start(rng);
    bool blocked = false;
    if (spec.annual_gap) {
      for (int e = 0; e < spec.exposures_per_night && !blocked; ++e) blocked = in_gap(t0 + e * spec.intra_night_gap, *spec.annual_gap);
    }
    if (blocked) continue;
    for (int e = 0; e < spec.exposures_per_night; ++e) times.push_back(t0 + e * spec.intra_night_gap);
    ++nights;
  }
  std::sort(times.begin(), times.end());
  return times;
}

SyntheticCurve generate_curve(const ClassSpec& spec, std::span<const double> times, std::uint64_t seed, std::string id,
                              const ErrorModel& errors) {
  if (times.size() < 5) throw Error(ErrorCode::TooFewTimes, "need at least five times");
  if (spec.amplitude < 0.0 || !(spec.timescale > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "amplitude must be nonnegative and timescale positive");
  }
  const auto n = times.size();
  SyntheticCurve out;
  out.kind = spec.kind;
  out.spec = spec;
  out.truth.assign(n, spec.baseline);

  auto shape_rng = make_rng(seed, kShape);
  switch (spec.kind) {
    case CurveKind::Flat: break;
    case CurveKind::Burst: {
      const double peak = spec.peak_time ? *spec.peak_time : uniform(shape_rng, times.front(), times.back());
      out.spec.peak_time = peak;
      out.spec.baseline = spec.detection_limit;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = (times[j] - peak) / spec.timescale;
        out.truth[j] = spec.detection_limit - spec.amplitude * std::exp(-0.5 * d * d);
      }
      break;
    }
    case CurveKind::Stochastic: {
      if (spec.amplitude == 0.0) break;
      const double var = spec.amplitude * spec.amplitude;
      const auto ni = static_cast<Eigen::Index>(n);
      Eigen::MatrixXd k(ni, ni);
      for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
          const double d = times[static_cast<std::size_t>(i)] - times[static_cast<std::size_t>(j)];
          k(i, j) = var * std::exp(-(d * d) / (2.0 * spec.timescale * spec.timescale));
          k(j, i) = k(i, j);
        }
      }
      k.diagonal().array() += 1e-8 * var;
      const Eigen::LLT<Eigen::MatrixXd> llt(k);
      if (llt.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailure, "GP draw covariance not positive definite");
      Eigen::VectorXd z(ni);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (Eigen::Index i = 0; i < ni; ++i) z(i) = gauss(shape_rng);
      const Eigen::VectorXd f = llt.matrixL() * z;
      for (Eigen::Index i = 0; i < ni; ++i) out.truth[static_cast<std::size_t>(i)] = spec.baseline + f(i);
      break;
    }
    case CurveKind::Periodic: {
      out.phase = uniform(shape_rng, 0.0, 2.0 * std::numbers::pi);
      for (std::size_t j = 0; j < n; ++j) {
        out.truth[j] = spec.baseline + spec.amplitude * std::sin(2.0 * std::numbers::pi * times[j] / spec.timescale + out.phase);
      }
      break;
    }
  }

  auto error_rng = make_rng(seed, kErrors);
  auto noise_rng = make_rng(seed, kNoise);
  std::uniform_real_distribution<double> log_s(std::log(errors.s_min), std::log(errors.s_max));
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.curve.id = std::move(id);
  out.curve.label = std::string(label_for(spec.kind));
  out.curve.obs.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = std::exp(log_s(error_rng));
    const double sd = spec.noise_sd ? *spec.noise_sd : s;
    const double y = out.truth[j] + sd * gauss(noise_rng);
    if (y < spec.detection_limit) {
      out.curve.obs.push_back(Observation{times[j], y, s, false});
    } else {
      out.curve.obs.push_back(Observation{times[j], spec.detection_limit, s, true});
    }
  }
  return out;
}

std::vector<SyntheticCurve> generate_benchmark(const BenchmarkSpec& spec, std::uint64_t seed) {
  if (spec.curves_per_kind <= 0) throw Error(ErrorCode::InvalidConfig, "curves_per_kind must be positive");
  std::vector<SyntheticCurve> curves;
  const std::array kinds = {CurveKind::Flat, CurveKind::Burst, CurveKind::Stochastic, CurveKind::Periodic};
  curves.reserve(kinds.size() * static_cast<std::size_t>(spec.curves_per_kind));
  std::uint64_t stream = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto kind = kinds[k];
    for (int c = 0; c < spec.curves_per_kind; ++c) {
      std::ostringstream id;
      id << to_string(kind) << '-' << (c < 10 ? "000" : c < 100 ? "00" : c < 1000 ? "0" : "") << c;
      while (true) {
        const auto curve_seed = derive_seed(seed, stream++);
        auto rng = make_rng(curve_seed);

        CadenceSpec cadence;
        cadence.total_span = std::bernoulli_distribution(0.25)(rng) ? uniform(rng, 60.0, 360.0) : uniform(rng, 400.0, 2764.0);
        cadence.n_nights = std::clamp(static_cast<int>(cadence.total_span / uniform(rng, 8.0, 40.0)), 3, 150);
        cadence.exposures_per_night =
            std::bernoulli_distribution(0.6)(rng) ? 4 : std::uniform_int_distribution<int>(1, 3)(rng);
        // Short seasons already sit inside one observable window.
        const AnnualGap gap{uniform(rng, 0.0, kDaysPerYear - 1.0), uniform(rng, 60.0, 150.0)};
        if (cadence.total_span >= kDaysPerYear) cadence.annual_gap = gap;

        ClassSpec cls;
        cls.kind = kind;
        cls.detection_limit = spec.detection_limit;
        switch (kind) {
          case CurveKind::Flat: cls.baseline = uniform(rng, 14.5, 19.5); break;
          case CurveKind::Burst:
            cls.amplitude = uniform(rng, 1.0, 4.0);
            cls.timescale = uniform(rng, 10.0, 80.0);
            break;
          case CurveKind::Stochastic:
            cls.baseline = uniform(rng, 16.0, 19.5);
            cls.amplitude = uniform(rng, 0.1, 0.5);
            cls.timescale = uniform(rng, 30.0, 400.0);
            break;
          case CurveKind::Periodic:
            cls.baseline = uniform(rng, 14.5, 18.5);
            cls.amplitude = uniform(rng, 0.1, 0.6);
            cls.timescale = uniform(rng, 0.3, 1.0);
            break;
        }

        const auto times = generate_cadence(cadence, derive_seed(curve_seed, 1));
        if (times.size() < 5) continue;
        // Typical error level per curve; points scatter within a band around it.
        const double level = std::exp(uniform(rng, std::log(spec.errors.s_min), std::log(spec.errors.s_max)));
        const ErrorModel errors{std::max(spec.errors.s_min, level / spec.error_spread),
                                std::min(spec.errors.s_max, level * spec.error_spread)};
        auto curve = generate_curve(cls, times, derive_seed(curve_seed, 2), id.str(), errors);
        if (curve.curve.n() < static_cast<std::size_t>(spec.min_observations)) continue;
        curves.push_back(std::move(curve));
        break;
      }
    }
  }
  return curves;
}

void write_truth_csv(std::ostream& out, std::span<const SyntheticCurve> curves) {
  out << "id,kind,true_params\n";
  for (const auto& c : curves) out << c.curve.id << ',' << to_string(c.kind) << ',' << c.true_params() << '\n';
}

}  // namespace lcmodel::synth

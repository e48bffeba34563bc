#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lcmodel/error.hpp"
#include "lcmodel/gp.hpp"
#include "lcmodel/synth.hpp"

using namespace lcmodel;
using namespace lcmodel::synth;

TEST_CASE("one night of four exposures is an arithmetic progression") {
  CadenceSpec spec;
  spec.n_nights = 1;
  spec.exposures_per_night = 4;
  spec.intra_night_gap = 0.00694;
  spec.total_span = 10.0;
  const auto t = generate_cadence(spec, 3);
  REQUIRE(t.size() == 4);
  for (int e = 0; e < 4; ++e) CHECK(t[e] - t[0] == doctest::Approx(e * 0.00694).epsilon(1e-12));
}

TEST_CASE("cadence respects the annual gap and is deterministic") {
  CadenceSpec spec;
  spec.n_nights = 200;
  spec.total_span = 2000.0;
  spec.annual_gap = AnnualGap{100.0, 60.0};
  const auto t = generate_cadence(spec, 11);
  CHECK(t.size() == 800);
  CHECK(std::is_sorted(t.begin(), t.end()));
  for (const double x : t) {
    const double doy = std::fmod(x, kDaysPerYear);
    CHECK_FALSE((doy >= 100.0 && doy < 160.0));
  }
  CHECK(generate_cadence(spec, 11) == t);
  CHECK(generate_cadence(spec, 12) != t);
}

TEST_CASE("infeasible cadences") {
  CadenceSpec bad;
  bad.exposures_per_night = 5;
  CHECK_THROWS_AS((void)generate_cadence(bad, 1), Error);
  CadenceSpec blocked;
  blocked.total_span = 30.0;
  blocked.annual_gap = AnnualGap{0.0, 200.0};
  try {
    (void)generate_cadence(blocked, 1);
    FAIL("expected InfeasibleSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleSpec);
  }
}

TEST_CASE("curve shapes") {
  std::vector<double> times;
  for (int i = 0; i < 101; ++i) times.push_back(i * 10.0);

  ClassSpec flat;
  flat.kind = CurveKind::Flat;
  flat.baseline = 17.0;
  flat.noise_sd = 0.0;
  for (const auto& o : generate_curve(flat, times, 1).curve.obs) CHECK(o.y == 17.0);

  ClassSpec burst;
  burst.kind = CurveKind::Burst;
  burst.amplitude = 3.0;
  burst.timescale = 30.0;
  burst.peak_time = 500.0;
  burst.noise_sd = 0.0;
  const auto b = generate_curve(burst, times, 2);
  double brightest = INFINITY, at = 0.0;
  for (const auto& o : b.curve.obs) {
    if (!o.censored && o.y < brightest) {
      brightest = o.y;
      at = o.t;
    }
  }
  CHECK(brightest == doctest::Approx(20.5 - 3.0));
  CHECK(at == 500.0);
  CHECK(b.curve.label == std::optional<std::string>("SNe"));

  ClassSpec periodic;
  periodic.kind = CurveKind::Periodic;
  periodic.amplitude = 0.5;
  periodic.timescale = 0.7;
  periodic.noise_sd = 0.0;
  const auto p = generate_curve(periodic, times, 3);
  for (std::size_t j = 0; j < times.size(); ++j) CHECK(std::fabs(p.truth[j] - 18.0) <= 0.5 + 1e-12);

  CHECK_THROWS_AS((void)generate_curve(flat, std::vector<double>{0, 1, 2, 3}, 1), Error);
}

TEST_CASE("censoring and determinism") {
  std::vector<double> times;
  for (int i = 0; i < 300; ++i) times.push_back(i * 3.0);
  ClassSpec faint;
  faint.kind = CurveKind::Stochastic;
  faint.baseline = 20.3;
  faint.amplitude = 0.5;
  faint.timescale = 100.0;
  const auto a = generate_curve(faint, times, 5);
  std::size_t censored = 0;
  for (const auto& o : a.curve.obs) {
    if (o.censored) {
      ++censored;
      CHECK(o.y == 20.5);
    } else {
      CHECK(o.y < 20.5);
      CHECK(o.s >= 0.05);
      CHECK(o.s <= 0.3);
    }
  }
  CHECK(censored > 0);
  CHECK(censored < times.size());
  const auto again = generate_curve(faint, times, 5);
  CHECK(again.curve == a.curve);
  CHECK(again.truth == a.truth);
}

TEST_CASE("stochastic draws recover through the GP fit") {
  // 500 points over 10 length-scales, fitted with the generating hyperparameters.
  const double l = 140.0, amp = 0.3, sd = 0.05;
  std::vector<double> times;
  for (int i = 0; i < 500; ++i) times.push_back(i * 10.0 * l / 499.0);
  ClassSpec spec;
  spec.kind = CurveKind::Stochastic;
  spec.amplitude = amp;
  spec.timescale = l;
  spec.baseline = 17.0;
  spec.noise_sd = sd;
  const auto c = generate_curve(spec, times, 21, "s", ErrorModel{sd, sd * (1.0 + 1e-12)});
  const gp::GPHyperparameters h{amp * amp, sd * sd, l};
  const auto fit = gp::fit_posterior(detected(c.curve), h, 17.0);
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < c.curve.obs.size(); ++j) {
    if (c.curve.obs[j].censored) continue;
    const double e = fit.mean_at_obs[n] - c.truth[j];
    sq += e * e;
    ++n;
  }
  CHECK(std::sqrt(sq / static_cast<double>(n)) <= 2.0 * sd);
}

TEST_CASE("stochastic covariance converges to the kernel") {
  const std::vector<double> times{0.0, 50.0, 140.0, 300.0, 301.0};
  ClassSpec spec;
  spec.kind = CurveKind::Stochastic;
  spec.amplitude = 1.0;
  spec.timescale = 140.0;
  spec.baseline = 0.0;
  spec.detection_limit = 1e9;
  spec.noise_sd = 0.0;
  const int draws = 10000;
  const std::size_t n = times.size();
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (int d = 0; d < draws; ++d) {
    const auto c = generate_curve(spec, times, 1000 + static_cast<std::uint64_t>(d));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) sum[i][j] += c.truth[i] * c.truth[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dt = times[i] - times[j];
      const double k = std::exp(-dt * dt / (2.0 * 140.0 * 140.0));
      const double kii = 1.0, kjj = 1.0;
      // Var of x_i x_j for jointly normal zero-mean variables is k_ii k_jj + k_ij^2.
      const double se = std::sqrt((kii * kjj + k * k) / draws);
      // 15 distinct entries share the same draws; 4 sigma keeps the family-wise rate near 1%.
      CHECK(std::fabs(sum[i][j] / draws - k) <= 4.0 * se);
    }
  }
}

TEST_CASE("benchmark generation") {
  BenchmarkSpec spec;
  spec.curves_per_kind = 20;
  const auto curves = generate_benchmark(spec, 4);
  REQUIRE(curves.size() == 80);
  for (const auto& c : curves) {
    CHECK(c.curve.n() >= 5);
    for (const auto& o : c.curve.obs) {
      if (!o.censored) CHECK(o.y < spec.detection_limit);
    }
  }
  CHECK(curves.front().curve.id == "flat-0000");
  CHECK(curves.back().curve.id == "periodic-0019");
  const auto again = generate_benchmark(spec, 4);
  for (std::size_t i = 0; i < curves.size(); ++i) CHECK(again[i].curve == curves[i].curve);
  std::ostringstream out;
  write_truth_csv(out, curves);
  CHECK(out.str().rfind("id,kind,true_params\nflat-0000,flat,amplitude=", 0) == 0);
}

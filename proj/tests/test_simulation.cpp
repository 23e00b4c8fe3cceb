#include <cmath>

#include <omp.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tumblenav/batch.hpp"
#include "tumblenav/random.hpp"
#include "tumblenav/simulation.hpp"

using namespace tumblenav;
using test::quat_distance;

namespace {

Scenario noise_free() {
  Scenario s;
  s.sigma_r = 0.0;
  s.sigma_qo = 0.0;
  s.process = {0.0, 0.0};
  s.truth_disturbances = false;
  s.perturbation.enabled = false;
  return s;
}

FilterState state_at_truth(const TruthState& x, const Scenario& scenario) {
  FilterState s;
  s.q_nom = x.q;
  s.eta_nom = scenario.geometry.eta;
  s.omega = x.omega;
  s.p = scenario.ratios().p;
  s.r_o = x.r_o;
  s.v_o = x.v_o;
  s.rho_t = scenario.geometry.rho_t;
  s.P = scenario.prior.covariance();
  s.t = x.t;
  return s;
}

void expect_same_run(const RunResult& a, const RunResult& b) {
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const Sample& x = a.samples[i];
    const Sample& y = b.samples[i];
    ASSERT_EQ(x.t, y.t);
    ASSERT_EQ(x.truth.q.as_vector(), y.truth.q.as_vector());
    ASSERT_EQ(x.truth.omega, y.truth.omega);
    ASSERT_EQ(x.truth.r_o, y.truth.r_o);
    ASSERT_EQ(x.measurement.r_c, y.measurement.r_c);
    ASSERT_EQ(x.measurement.mu.as_vector(), y.measurement.mu.as_vector());
    ASSERT_EQ(x.measurement.valid, y.measurement.valid);
    ASSERT_EQ(x.estimate.has_value(), y.estimate.has_value());
    if (!x.estimate) continue;
    const FilterState& s = x.estimate->state;
    const FilterState& r = y.estimate->state;
    ASSERT_EQ(s.q_nom.as_vector(), r.q_nom.as_vector());
    ASSERT_EQ(s.eta_nom.as_vector(), r.eta_nom.as_vector());
    ASSERT_EQ(s.omega, r.omega);
    ASSERT_EQ(s.p, r.p);
    ASSERT_EQ(s.r_o, r.r_o);
    ASSERT_EQ(s.rho_t, r.rho_t);
    ASSERT_EQ(s.P, r.P);
  }
  const auto same_or_both_nan = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
  EXPECT_TRUE(same_or_both_nan(a.metrics.convergence_time_s, b.metrics.convergence_time_s));
  EXPECT_EQ(a.metrics.updates, b.metrics.updates);
  ASSERT_EQ(a.metrics.nees.size(), b.metrics.nees.size());
  for (std::size_t i = 0; i < a.metrics.nees.size(); ++i)
    EXPECT_TRUE(same_or_both_nan(a.metrics.nees[i], b.metrics.nees[i]));
}

}  // namespace

TEST(Scenario, DefaultsMatchTheExperiment) {
  const Scenario s = default_scenario();
  EXPECT_EQ(s.inertia, Vec3(4, 8, 5));
  EXPECT_EQ(s.geometry.rho_t, Vec3(-0.15, 0, 0));
  EXPECT_EQ(s.meas_rate_hz, 2.0);
  EXPECT_EQ(s.filter_start, 5.0);
  EXPECT_EQ(s.duration, 120.0);
  ASSERT_EQ(s.occlusions.size(), 1u);
  EXPECT_EQ(s.occlusions[0].start, 96.0);
  EXPECT_EQ(s.occlusions[0].end, 116.0);
  EXPECT_NEAR(rotation_angle(s.geometry.eta), 5.0 * M_PI / 180.0, 1e-15);
  EXPECT_NO_THROW(s.validate());
}

TEST(Scenario, ValidationNamesTheField) {
  const auto message = [](const Scenario& s) {
    try {
      s.validate();
    } catch (const ScenarioError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  Scenario s;
  s.meas_rate_hz = 0.0;
  EXPECT_NE(message(s).find("meas_rate_hz"), std::string::npos);

  s = Scenario{};
  s.inertia = Vec3(4, -1, 5);
  EXPECT_NE(message(s).find("inertia_kgm2"), std::string::npos);

  s = Scenario{};
  s.occlusions = {{10, 20}, {15, 30}};
  const std::string overlap = message(s);
  EXPECT_NE(overlap.find("[10, 20]"), std::string::npos) << overlap;
  EXPECT_NE(overlap.find("[15, 30]"), std::string::npos) << overlap;

  s = Scenario{};
  s.occlusions = {{100, 130}};
  EXPECT_FALSE(message(s).empty());

  s = Scenario{};
  s.occlusions = {{30, 20}};
  EXPECT_FALSE(message(s).empty());

  s = Scenario{};
  s.sigma_r = -1.0;
  EXPECT_NE(message(s).find("sigma_r_m"), std::string::npos);

  s = Scenario{};
  s.prior.dq = 0.0;
  EXPECT_FALSE(message(s).empty());
}

TEST(Scenario, MeasurementGrid) {
  Scenario s;
  EXPECT_EQ(s.sample_times().size(), 241u);
  s.duration = 10.3;
  s.meas_rate_hz = 3.0;
  EXPECT_EQ(s.sample_times().size(), 31u);
  s.duration = 1.0;
  s.meas_rate_hz = 0.7;
  EXPECT_EQ(s.sample_times().size(), 1u);
  s.duration = 0.0;
  EXPECT_TRUE(s.sample_times().empty());

  s = Scenario{};
  const auto t = s.sample_times();
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(t[k], static_cast<double>(k) / 2.0);
}

TEST(Synthesize, OcclusionCountOnTheGrid) {
  Scenario s;
  s.occlusions = {{96.0, 118.0}};
  const auto m = synthesize_measurements(simulate_truth(s), s);
  int invalid = 0;
  for (const auto& x : m) {
    if (!x.valid) {
      ++invalid;
      EXPECT_GE(x.t, 96.0);
      EXPECT_LE(x.t, 118.0);
    }
  }
  EXPECT_EQ(invalid, 45);
}

TEST(Synthesize, NoiseFreeMeasurementsAreTheTruePose) {
  Scenario s = noise_free();
  s.occlusions.clear();
  const auto truth = simulate_truth(s);
  const auto meas = synthesize_measurements(truth, s);
  ASSERT_EQ(truth.size(), meas.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Pose p = true_pose(truth[i], s.geometry);
    EXPECT_TRUE(meas[i].valid);
    EXPECT_EQ(meas[i].r_c, p.r_c);
    EXPECT_LT(quat_distance(meas[i].mu, p.mu), 1e-15);
  }
}

TEST(Synthesize, TruePoseComposition) {
  TruthState x;
  x.q = Quaternion::from_axis_angle(Vec3::UnitZ(), M_PI / 2);
  x.r_o = Vec3(1, 2, 3);
  TargetGeometry g{Vec3(-0.15, 0, 0), Quaternion::identity()};
  const Pose p = true_pose(x, g);
  // A quarter turn about z takes body x onto reference y.
  EXPECT_LT((p.r_c - Vec3(1, 2 - 0.15, 3)).norm(), 1e-15);
  EXPECT_LT(quat_distance(p.mu, x.q), 1e-15);
}

TEST(Synthesize, NoiseStatistics) {
  Scenario s;
  s.occlusions.clear();
  s.duration = 2000.0;
  s.truth_disturbances = false;
  const auto truth = simulate_truth(s);
  const auto meas = synthesize_measurements(truth, s);
  double pos = 0.0, att = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Pose p = true_pose(truth[i], s.geometry);
    pos += (meas[i].r_c - p.r_c).squaredNorm();
    att += error_quat(meas[i].mu, p.mu).v.squaredNorm();
  }
  const double n = 3.0 * static_cast<double>(truth.size());
  EXPECT_NEAR(std::sqrt(pos / n), s.sigma_r, 0.05 * s.sigma_r);
  EXPECT_NEAR(std::sqrt(att / n), s.sigma_qo, 0.05 * s.sigma_qo);
}

TEST(Simulation, SameSeedIsBitIdentical) {
  Scenario s;
  s.duration = 40.0;
  s.occlusions = {{20.0, 25.0}};
  expect_same_run(run_scenario(s), run_scenario(s));
}

TEST(Simulation, SeedsAreIndependentStreams) {
  Scenario a;
  a.duration = 10.0;
  a.occlusions.clear();
  Scenario b = a;
  b.seed = 2;
  const RunResult ra = run_scenario(a), rb = run_scenario(b);
  EXPECT_NE(ra.samples.back().truth.omega, rb.samples.back().truth.omega);
  EXPECT_NE(ra.samples.back().measurement.r_c, rb.samples.back().measurement.r_c);

  // Same disturbance stream regardless of the measurement noise level.
  Scenario c = a;
  c.sigma_r = 0.1;
  EXPECT_EQ(run_scenario(c).samples.back().truth.omega, ra.samples.back().truth.omega);
}

TEST(Simulation, CounterRngIsReproducible) {
  CounterRng a(7, stream::measurement_noise), b(7, stream::measurement_noise), c(7, stream::truth_disturbance);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  EXPECT_EQ(a.counter(), 100u);
}

TEST(Simulation, NoiseFreeTruthInitializedRunIsExact) {
  const RunResult r = run_scenario(noise_free());
  ASSERT_FALSE(r.metrics.diverged);
  int checked = 0;
  for (const Sample& s : r.samples) {
    if (!s.estimate) continue;
    const FilterState& e = s.estimate->state;
    const Pose est = predicted_pose(e);
    const Pose tru = true_pose(s.truth, r.scenario.geometry);
    EXPECT_LT((e.r_o - s.truth.r_o).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((e.v_o - s.truth.v_o).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((e.omega - s.truth.omega).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((e.p - r.scenario.ratios().p).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((e.rho_t - r.scenario.geometry.rho_t).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(quat_distance(e.q_nom, s.truth.q), 1e-6);
    EXPECT_LT(quat_distance(e.eta_nom, r.scenario.geometry.eta), 1e-6);
    EXPECT_LT((est.r_c - tru.r_c).norm(), 1e-6);
    ++checked;
  }
  EXPECT_EQ(checked, 231);
  EXPECT_EQ(r.metrics.convergence_time_s, 0.0);
}

TEST(Simulation, FilterStartsAtFilterStart) {
  Scenario s;
  s.duration = 20.0;
  s.occlusions.clear();
  const RunResult r = run_scenario(s);
  for (const Sample& x : r.samples) EXPECT_EQ(x.estimate.has_value(), x.t >= 5.0) << x.t;
  const auto trace_start = std::find_if(r.samples.begin(), r.samples.end(), [](const Sample& x) { return x.estimate; });
  EXPECT_EQ(trace_start->estimate->state.t, 5.0);
}

TEST(Simulation, InitialEstimateIsDeterministic) {
  const Scenario s;
  const FilterState a = initial_estimate(s, 5.0), b = initial_estimate(s, 5.0);
  EXPECT_EQ(a.q_nom.as_vector(), b.q_nom.as_vector());
  EXPECT_EQ(a.omega, b.omega);

  // Default perturbation: 0.1 rad attitude, 0.05 rad/s rate, unknown parameters.
  const TruthState x = propagate_truth(s.initial, s.ratios(), s.orbit(), 5.0);
  EXPECT_NEAR(rotation_angle(error_quat(x.q, a.q_nom)), 0.1, 1e-12);
  EXPECT_NEAR((a.omega - x.omega).norm(), 0.05, 1e-12);
  EXPECT_EQ(a.p, Vec3::Zero());
  EXPECT_EQ(a.rho_t, Vec3::Zero());
  EXPECT_EQ(a.eta_nom.as_vector(), Quaternion::identity().as_vector());
}

TEST(Simulation, SampledPriorHasThePriorSpread) {
  Scenario s = consistency_scenario();
  Vec21 sum_sq = Vec21::Zero();
  const int n = 2000;
  for (int k = 0; k < n; ++k) {
    s.seed = 1000 + k;
    const FilterState e = initial_estimate(s, 0.0);
    const FilterState t = state_at_truth(s.initial, s);
    Vec21 err;
    err << error_quat(t.q_nom, e.q_nom).v, t.omega - e.omega, t.p - e.p, t.r_o - e.r_o, t.v_o - e.v_o,
        t.rho_t - e.rho_t, quat_mul(e.eta_nom.conjugate(), t.eta_nom).v;
    sum_sq += err.cwiseAbs2();
  }
  const Vec21 ratio = (sum_sq / n).cwiseQuotient(s.prior.covariance().diagonal());
  EXPECT_GT(ratio.minCoeff(), 0.9);
  EXPECT_LT(ratio.maxCoeff(), 1.1);
}

TEST(Simulation, AttitudeErrorIsAnAngle) {
  Scenario s;
  s.duration = 30.0;
  s.occlusions.clear();
  s.perturbation.attitude_rad = 3.0;
  const RunResult r = run_scenario(s);
  for (const Sample& x : r.samples) {
    if (!x.estimate) continue;
    const EstimateErrors e = estimate_errors(x.truth, r.scenario, x.estimate->state);
    EXPECT_GE(e.attitude_deg, 0.0);
    EXPECT_LE(e.attitude_deg, 180.0);
    EXPECT_GE(e.por_attitude_deg, 0.0);
    EXPECT_LE(e.por_attitude_deg, 180.0);
  }
  TruthState x;
  FilterState e = state_at_truth(x, s);
  e.q_nom = Quaternion{Vec3::UnitY(), 0.0};
  EXPECT_NEAR(estimate_errors(x, s, e).attitude_deg, 180.0, 1e-12);
  e.q_nom = -x.q;
  EXPECT_EQ(estimate_errors(x, s, e).attitude_deg, 0.0);
}

TEST(Nees, ZeroAtTruth) {
  const Scenario s;
  TruthState x = s.initial;
  x.r_o = Vec3(1, 2, 3);
  EXPECT_EQ(*compute_nees(x, s, state_at_truth(x, s)), 0.0);
}

TEST(Nees, ScalesInverselyWithCovariance) {
  Scenario s;
  s.duration = 30.0;
  s.occlusions.clear();
  const RunResult r = run_scenario(s);
  int checked = 0;
  for (const Sample& x : r.samples) {
    if (!x.estimate) continue;
    FilterState inflated = x.estimate->state;
    inflated.P *= 100.0;
    const double a = *compute_nees(x.truth, s, x.estimate->state);
    const double b = *compute_nees(x.truth, s, inflated);
    EXPECT_NEAR(a / b, 100.0, 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Nees, SingularCovarianceIsFlagged) {
  const Scenario s;
  FilterState e = state_at_truth(s.initial, s);
  e.P(4, 4) = 0.0;
  EXPECT_FALSE(compute_nees(s.initial, s, e));
}

TEST(Nees, UsesTheErrorQuaternionVectorPart) {
  const Scenario s;
  const TruthState x = s.initial;
  FilterState e = state_at_truth(x, s);
  e.P = Mat21::Identity();
  e.q_nom = quat_mul(Quaternion::from_axis_angle(Vec3::UnitX(), -0.2), x.q);
  EXPECT_NEAR(*compute_nees(x, s, e), std::pow(std::sin(0.1), 2), 1e-15);
}

TEST(RunFilter, AllInvalidIsPurePrediction) {
  Scenario s;
  s.duration = 30.0;
  s.occlusions.clear();
  auto meas = synthesize_measurements(simulate_truth(s), s);
  for (auto& m : meas) m.valid = false;
  const FilterTrace trace = run_filter(s, meas);
  EXPECT_EQ(trace.updates, 0);
  EXPECT_EQ(trace.invalid, static_cast<int>(trace.records.size()));

  const FilterConfig c = s.filter_config();
  FilterState x = initial_estimate(s, 5.0);
  for (const FilterRecord& r : trace.records) {
    if (r.state.t > x.t) {
      x = predict(x, r.state.t - x.t, c);
      x.t = r.state.t;
    }
    ASSERT_EQ(r.status, UpdateStatus::skipped_invalid);
    ASSERT_EQ(r.state.q_nom.as_vector(), x.q_nom.as_vector());
    ASSERT_EQ(r.state.omega, x.omega);
    ASSERT_EQ(r.state.r_o, x.r_o);
    ASSERT_EQ(r.state.P, x.P);
  }
}

TEST(RunFilter, EmptyLog) {
  const FilterTrace trace = run_filter(Scenario{}, {});
  EXPECT_TRUE(trace.records.empty());
  EXPECT_EQ(trace.updates, 0);
}

TEST(Metrics, OcclusionSeriesCoverTheGap) {
  Scenario s;
  const RunResult r = run_scenario(s);
  EXPECT_EQ(r.metrics.nees.size(), r.samples.size());
  EXPECT_EQ(r.metrics.occlusion_errors.size(), 41u);
  ASSERT_TRUE(r.metrics.occlusion_end);
  EXPECT_EQ(r.metrics.occlusion_end->t, 116.0);
  EXPECT_EQ(r.metrics.invalid, 41);
  for (const OcclusionSample& o : r.metrics.occlusion_errors) {
    EXPECT_GE(o.t, 96.0);
    EXPECT_LE(o.t, 116.0);
    EXPECT_TRUE(std::isfinite(o.position_error_m));
  }
  ASSERT_TRUE(r.metrics.at_parameter_check);
  EXPECT_EQ(r.metrics.at_parameter_check->t, 90.0);
}

TEST(Metrics, EmptyRun) {
  Scenario s;
  s.duration = 0.0;
  s.occlusions.clear();
  const RunResult r = run_scenario(s);
  EXPECT_TRUE(r.samples.empty());
  EXPECT_TRUE(std::isnan(r.metrics.convergence_time_s));
  EXPECT_FALSE(r.metrics.occlusion_end);
}

TEST(Batch, ParallelEqualsSerial) {
  Scenario base;
  base.duration = 30.0;
  base.occlusions = {{20.0, 25.0}};
  const auto scenarios = seed_batch(base, 6);
  ASSERT_EQ(scenarios.size(), 6u);
  EXPECT_EQ(scenarios[5].seed, base.seed + 5);
  // Four threads even on one core, so runs interleave.
  const int threads = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto par = run_batch(scenarios);
  omp_set_num_threads(threads);
  const auto ser = run_batch_serial(scenarios);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    EXPECT_EQ(par[i].scenario.seed, scenarios[i].seed);
    expect_same_run(par[i], ser[i]);
  }
}

TEST(Consistency, InnovationsAreWhiteOnMatchedRuns) {
  const auto runs = run_batch(seed_batch(consistency_scenario(), 25));
  double nis = 0.0;
  int n = 0;
  for (const RunResult& r : runs) {
    for (const Sample& s : r.samples) {
      if (!s.estimate || s.t < kConsistencyWindowStart || s.estimate->status != UpdateStatus::applied) continue;
      nis += s.estimate->nis;
      ++n;
    }
  }
  ASSERT_GT(n, 0);
  const boost::math::chi_squared chi2(6.0 * n);
  const double lo = boost::math::quantile(chi2, 0.025) / n;
  const double hi = boost::math::quantile(chi2, 0.975) / n;
  EXPECT_GE(nis / n, lo);
  EXPECT_LE(nis / n, hi);
}

#include "tumblenav/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "tumblenav/random.hpp"

namespace tumblenav {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string window_name(const OcclusionWindow& w) {
  std::ostringstream os;
  os << "[" << w.start << ", " << w.end << "]";
  return os.str();
}

}  // namespace

TruthState Scenario::default_initial_state() {
  TruthState s;
  s.q = Quaternion::identity();
  s.omega = Vec3(0.10, 0.20, 0.15);
  s.r_o = Vec3(2.0, 0.5, 0.3);
  s.v_o = Vec3(2e-3, -4e-3, 1e-3);
  s.t = 0.0;
  return s;
}

Scenario default_scenario() { return Scenario{}; }

Scenario consistency_scenario() {
  Scenario s;
  s.occlusions.clear();
  s.filter_start = 0.0;
  s.perturbation.sample_prior = true;
  s.prior = {0.01, 0.01, 0.05, 0.05, 0.005, 0.02, 0.01};
  return s;
}

void Scenario::validate() const {
  if (!(inertia.minCoeff() > 0.0)) throw ScenarioError("inertia_kgm2: principal moments must be positive");
  if (!(meas_rate_hz > 0.0) || !std::isfinite(meas_rate_hz)) throw ScenarioError("meas_rate_hz: must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw ScenarioError("duration_s: must be finite and non-negative");
  if (!(filter_start >= 0.0)) throw ScenarioError("filter_start_s: must be non-negative");
  if (!(truth_step > 0.0)) throw ScenarioError("truth_step_s: must be positive");
  if (!(n_z >= 0.0)) throw ScenarioError("n_z_rad_s: must be non-negative");
  if (!(sigma_r >= 0.0)) throw ScenarioError("sigma_r_m: must be non-negative");
  if (!(sigma_qo >= 0.0)) throw ScenarioError("sigma_qo: must be non-negative");
  if (!(process.sigma_tau >= 0.0)) throw ScenarioError("sigma_tau: must be non-negative");
  if (!(process.sigma_f >= 0.0)) throw ScenarioError("sigma_f: must be non-negative");
  if (!(std::abs(geometry.eta.norm() - 1.0) <= 1e-9)) throw ScenarioError("eta_quat: must be a unit quaternion");
  if (!(std::abs(initial.q.norm() - 1.0) <= 1e-9)) throw ScenarioError("q0_quat: must be a unit quaternion");
  if (!geometry.rho_t.allFinite()) throw ScenarioError("rho_t_m: must be finite");
  if (!initial.omega.allFinite()) throw ScenarioError("omega0_rad_s: must be finite");
  if (!initial.r_o.allFinite()) throw ScenarioError("r0_m: must be finite");
  if (!initial.v_o.allFinite()) throw ScenarioError("v0_m_s: must be finite");
  const InitialUncertainty& u = prior;
  const std::pair<const char*, double> priors[] = {
      {"prior_dq", u.dq},       {"prior_omega_rad_s", u.omega}, {"prior_p", u.p},         {"prior_r_o_m", u.r_o},
      {"prior_v_o_m_s", u.v_o}, {"prior_rho_t_m", u.rho_t},     {"prior_deta", u.deta}};
  for (const auto& [key, v] : priors)
    if (!(v > 0.0) || !std::isfinite(v)) throw ScenarioError(std::string(key) + ": must be positive");
  const std::pair<const char*, double> walks[] = {
      {"param_rw_p", parameter_walk.p}, {"param_rw_rho_t", parameter_walk.rho_t}, {"param_rw_eta", parameter_walk.eta}};
  for (const auto& [key, v] : walks)
    if (!(v >= 0.0)) throw ScenarioError(std::string(key) + ": must be non-negative");
  if (!(convergence_hold_s >= 0.0)) throw ScenarioError("convergence_hold_s: must be non-negative");

  std::vector<OcclusionWindow> sorted = occlusions;
  for (const auto& w : sorted) {
    if (!(w.start <= w.end)) throw ScenarioError("occlusion window " + window_name(w) + " has start after end");
    if (w.start < 0.0 || w.end > duration)
      throw ScenarioError("occlusion window " + window_name(w) + " lies outside [0, duration_s]");
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start <= sorted[i - 1].end)
      throw ScenarioError("occlusion windows " + window_name(sorted[i - 1]) + " and " + window_name(sorted[i]) +
                          " overlap");
  }
}

FilterConfig Scenario::filter_config() const {
  FilterConfig c;
  c.noise.sigma_r = std::max(sigma_r, kMinFilterSigma);
  c.noise.sigma_qo = std::max(sigma_qo, kMinFilterSigma);
  c.orbit = orbit();
  c.process = process;
  c.parameter_walk = parameter_walk;
  c.joseph_form = joseph_form;
  c.gate_enabled = gate_enabled;
  return c;
}

std::vector<double> Scenario::sample_times() const {
  std::vector<double> times;
  if (duration <= 0.0) return times;
  const auto count = static_cast<long>(std::floor(duration * meas_rate_hz + 1e-9)) + 1;
  times.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) times.push_back(static_cast<double>(k) / meas_rate_hz);
  return times;
}

bool Scenario::occluded(double t) const {
  return std::any_of(occlusions.begin(), occlusions.end(), [t](const auto& w) { return w.contains(t); });
}

std::vector<TruthState> simulate_truth(const Scenario& scenario) {
  const std::vector<double> times = scenario.sample_times();
  std::vector<TruthState> truth;
  if (times.empty()) return truth;
  truth.reserve(times.size());

  const InertiaRatios ratios = scenario.ratios();
  const OrbitRate orbit = scenario.orbit();
  const bool disturbed =
      scenario.truth_disturbances && (scenario.process.sigma_tau > 0.0 || scenario.process.sigma_f > 0.0);
  CounterRng rng(scenario.seed, stream::truth_disturbance);

  TruthState x = scenario.initial;
  x.t = times.front();
  truth.push_back(x);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double interval = times[k] - times[k - 1];
    const int chunks = std::max(1, static_cast<int>(std::ceil(interval / scenario.truth_step - 1e-9)));
    const double h = interval / chunks;
    for (int c = 0; c < chunks; ++c) {
      std::optional<Vec6> disturbance;
      if (disturbed) {
        Vec6 d;
        d << rng.gaussian3(scenario.process.sigma_tau / std::sqrt(h)),
            rng.gaussian3(scenario.process.sigma_f / std::sqrt(h));
        disturbance = d;
      }
      x = propagate_truth(x, ratios, orbit, h, disturbance);
    }
    x.t = times[k];
    truth.push_back(x);
  }
  return truth;
}

Pose true_pose(const TruthState& truth, const TargetGeometry& geometry) {
  return {truth.r_o + frame_rotation(truth.q) * geometry.rho_t, quat_mul(geometry.eta, truth.q)};
}

std::vector<PoseMeasurement> synthesize_measurements(const std::vector<TruthState>& truth,
                                                     const Scenario& scenario) {
  std::vector<PoseMeasurement> out;
  out.reserve(truth.size());
  CounterRng rng(scenario.seed, stream::measurement_noise);
  for (const TruthState& x : truth) {
    const Vec3 position_noise = rng.gaussian3(scenario.sigma_r);
    Vec3 attitude_noise = rng.gaussian3(scenario.sigma_qo);
    if (attitude_noise.norm() >= 1.0) attitude_noise *= kMaxCorrectionNorm / attitude_noise.norm();

    PoseMeasurement m;
    m.t = x.t;
    m.valid = !scenario.occluded(x.t);
    if (m.valid) {
      const Pose pose = true_pose(x, scenario.geometry);
      m.r_c = pose.r_c + position_noise;
      m.mu = quat_mul(SmallRotation{attitude_noise}.quaternion(), pose.mu);
    }
    out.push_back(m);
  }
  return out;
}

FilterState initial_estimate(const Scenario& scenario, double t0) {
  TruthState x = scenario.initial;
  if (t0 > 0.0) x = propagate_truth(x, scenario.ratios(), scenario.orbit(), t0);

  FilterState s;
  s.t = t0;
  s.P = scenario.prior.covariance();
  s.q_nom = x.q;
  s.omega = x.omega;
  s.r_o = x.r_o;
  s.v_o = x.v_o;

  const InitialPerturbation& pert = scenario.perturbation;
  if (!pert.enabled) {
    s.p = scenario.ratios().p;
    s.rho_t = scenario.geometry.rho_t;
    s.eta_nom = scenario.geometry.eta;
    return s;
  }

  CounterRng rng(scenario.seed, stream::initial_estimate);
  if (pert.sample_prior) {
    s.p = scenario.ratios().p;
    s.rho_t = scenario.geometry.rho_t;
    s.eta_nom = scenario.geometry.eta;
    const Vec21 sd = s.P.diagonal().cwiseSqrt();
    Vec21 e;
    for (int i = 0; i < kStateDim; ++i) e[i] = sd[i] * rng.gaussian();
    return apply_correction(s, -e);
  }

  const Vec3 attitude_axis = rng.unit_vector();
  const Vec3 rate_dir = rng.unit_vector();
  const Vec3 position_dir = rng.unit_vector();
  const Vec3 velocity_dir = rng.unit_vector();
  s.q_nom = quat_mul(Quaternion::from_axis_angle(attitude_axis, pert.attitude_rad), x.q);
  s.omega += pert.rate_rad_s * rate_dir;
  s.r_o += pert.position_m * position_dir;
  s.v_o += pert.velocity_m_s * velocity_dir;
  s.p = Vec3::Zero();
  s.rho_t = Vec3::Zero();
  s.eta_nom = Quaternion::identity();
  return s;
}

FilterTrace run_filter(const Scenario& scenario, const std::vector<PoseMeasurement>& measurements) {
  FilterTrace trace;
  const FilterConfig config = scenario.filter_config();
  std::optional<FilterState> state;
  for (const PoseMeasurement& m : measurements) {
    if (m.t < scenario.filter_start - 1e-9) continue;
    if (!state) {
      state = initial_estimate(scenario, m.t);
    } else {
      *state = predict(*state, m.t - state->t, config);
      state->t = m.t;
    }

    FilterRecord rec;
    const UpdateResult r = update(*state, m, config);
    *state = r.state;
    rec.status = r.status;
    rec.nis = r.nis;
    rec.state = *state;
    switch (r.status) {
      case UpdateStatus::applied: ++trace.updates; break;
      case UpdateStatus::gated: ++trace.gated; break;
      case UpdateStatus::skipped_invalid: ++trace.invalid; break;
      case UpdateStatus::fault: break;
    }
    if (r.divergence_warning) ++trace.divergence_warnings;
    if (state->fault) trace.diverged = true;
    trace.records.push_back(rec);
  }
  return trace;
}

std::optional<double> compute_nees(const TruthState& truth, const Scenario& scenario, const FilterState& est) {
  Vec21 e;
  e.segment<3>(idx::dq) = error_quat(truth.q, est.q_nom).v;
  e.segment<3>(idx::omega) = truth.omega - est.omega;
  e.segment<3>(idx::p) = scenario.ratios().p - est.p;
  e.segment<3>(idx::r_o) = truth.r_o - est.r_o;
  e.segment<3>(idx::v_o) = truth.v_o - est.v_o;
  e.segment<3>(idx::rho_t) = scenario.geometry.rho_t - est.rho_t;
  // eta = eta_nom (x) deta
  Quaternion deta = quat_mul(est.eta_nom.conjugate(), scenario.geometry.eta);
  if (deta.s < 0.0) deta = -deta;
  e.segment<3>(idx::deta) = deta.v;

  const Eigen::LDLT<Mat21> ldlt(est.P);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) return std::nullopt;
  return e.dot(ldlt.solve(e));
}

EstimateErrors estimate_errors(const TruthState& truth, const Scenario& scenario, const FilterState& est) {
  EstimateErrors err;
  const Pose truth_pose = true_pose(truth, scenario.geometry);
  const Pose est_pose = predicted_pose(est);
  err.attitude_deg = rotation_angle(error_quat(truth.q, est.q_nom)) * kRadToDeg;
  err.por_attitude_deg = rotation_angle(error_quat(truth_pose.mu, est_pose.mu)) * kRadToDeg;
  err.por_position_m = (truth_pose.r_c - est_pose.r_c).norm();
  err.omega_rad_s = (truth.omega - est.omega).norm();
  const Vec3 p = scenario.ratios().p;
  err.p_rel = (p - est.p).norm() / std::max(p.norm(), 1e-12);
  err.rho_t_m = (scenario.geometry.rho_t - est.rho_t).norm();
  return err;
}

RunMetrics compute_metrics(const Scenario& scenario, const std::vector<Sample>& samples, const FilterTrace& trace) {
  RunMetrics m;
  m.updates = trace.updates;
  m.gated = trace.gated;
  m.invalid = trace.invalid;
  m.divergence_warnings = trace.divergence_warnings;
  m.diverged = trace.diverged;

  m.nees.assign(samples.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].estimate) continue;
    active.push_back(i);
    if (const auto nees = compute_nees(samples[i].truth, scenario, samples[i].estimate->state)) m.nees[i] = *nees;
  }
  if (active.empty()) return m;

  const double t0 = samples[active.front()].t;
  double first_occlusion = std::numeric_limits<double>::infinity();
  for (const auto& w : scenario.occlusions) first_occlusion = std::min(first_occlusion, w.start);

  // Convergence: start of the first stretch of convergence_hold_s seconds,
  // before the first occlusion, over which the POR pose error stays inside
  // the thresholds.
  std::vector<std::size_t> pre;
  for (std::size_t i : active)
    if (samples[i].t < first_occlusion) pre.push_back(i);
  std::optional<std::size_t> converged_at;
  std::optional<std::size_t> run_start;
  for (std::size_t k = 0; k < pre.size(); ++k) {
    const Sample& s = samples[pre[k]];
    const EstimateErrors e = estimate_errors(s.truth, scenario, s.estimate->state);
    if (e.por_attitude_deg < scenario.convergence_attitude_deg && e.por_position_m < scenario.convergence_position_m) {
      if (!run_start) run_start = k;
      if (s.t - samples[pre[*run_start]].t >= scenario.convergence_hold_s - 1e-9) {
        converged_at = *run_start;
        break;
      }
    } else {
      run_start.reset();
    }
  }
  if (converged_at) {
    m.convergence_time_s = samples[pre[*converged_at]].t - t0;
    double att = 0.0, por_att = 0.0, pos = 0.0, omega = 0.0, p_rel = 0.0;
    int n = 0;
    for (std::size_t k = *converged_at; k < pre.size(); ++k) {
      const Sample& s = samples[pre[k]];
      const EstimateErrors e = estimate_errors(s.truth, scenario, s.estimate->state);
      att += e.attitude_deg * e.attitude_deg;
      por_att += e.por_attitude_deg * e.por_attitude_deg;
      pos += e.por_position_m * e.por_position_m;
      omega += e.omega_rad_s * e.omega_rad_s;
      p_rel += e.p_rel * e.p_rel;
      ++n;
    }
    m.rms_attitude_deg = std::sqrt(att / n);
    m.rms_por_attitude_deg = std::sqrt(por_att / n);
    m.rms_por_position_m = std::sqrt(pos / n);
    m.rms_omega_rad_s = std::sqrt(omega / n);
    m.rms_p_rel = std::sqrt(p_rel / n);
  }

  for (std::size_t i : active) {
    if (samples[i].t >= scenario.parameter_check_time - 1e-9) {
      m.at_parameter_check = samples[i].estimate->state;
      break;
    }
  }

  // Open-loop prediction across each occlusion, from the last estimate before it.
  const FilterConfig config = scenario.filter_config();
  std::vector<OcclusionWindow> windows = scenario.occlusions;
  std::sort(windows.begin(), windows.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (const OcclusionWindow& w : windows) {
    std::optional<FilterState> anchor;
    for (std::size_t i : active) {
      if (samples[i].t < w.start) anchor = samples[i].estimate->state;
    }
    if (!anchor || anchor->fault) continue;
    for (std::size_t i : active) {
      const Sample& s = samples[i];
      if (!w.contains(s.t)) continue;
      const Pose pred = predict_pose(*anchor, s.t - anchor->t, config);
      const Pose truth_pose = true_pose(s.truth, scenario.geometry);
      OcclusionSample o;
      o.t = s.t;
      o.position_error_m = (pred.r_c - truth_pose.r_c).norm();
      o.attitude_error_deg = rotation_angle(error_quat(truth_pose.mu, pred.mu)) * kRadToDeg;
      m.occlusion_errors.push_back(o);
      if (&w == &windows.front()) m.occlusion_end = o;
    }
  }
  return m;
}

RunResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  RunResult result;
  result.scenario = scenario;

  const std::vector<TruthState> truth = simulate_truth(scenario);
  const std::vector<PoseMeasurement> measurements = synthesize_measurements(truth, scenario);
  const FilterTrace trace = run_filter(scenario, measurements);

  result.samples.resize(truth.size());
  std::size_t r = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    Sample& s = result.samples[i];
    s.t = truth[i].t;
    s.truth = truth[i];
    s.measurement = measurements[i];
    if (r < trace.records.size() && trace.records[r].state.t == s.t) s.estimate = trace.records[r++];
  }
  result.metrics = compute_metrics(scenario, result.samples, trace);
  return result;
}

}  // namespace tumblenav

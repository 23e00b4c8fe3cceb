#include "tumblenav/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace tumblenav {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_values(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

std::optional<double> to_double(const std::string& tok) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <int N>
std::string fmt(const Eigen::Matrix<double, N, 1>& v) {
  std::string out;
  for (int i = 0; i < N; ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Line {
  int number;
  std::string value;
};

class Parser {
 public:
  Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const { throw ConfigError(source_, line, msg); }

  std::vector<double> numbers(const std::string& key, const Line& l, std::size_t n) const {
    const auto toks = split_values(l.value);
    if (toks.size() != n) fail(l.number, key + ": expected " + std::to_string(n) + " value(s), got " +
                                            std::to_string(toks.size()));
    std::vector<double> out;
    for (const auto& t : toks) {
      const auto v = to_double(t);
      if (!v) fail(l.number, key + ": '" + t + "' is not a number");
      out.push_back(*v);
    }
    return out;
  }

  double scalar(const std::string& key, const Line& l) const { return numbers(key, l, 1)[0]; }

  Vec3 vec3(const std::string& key, const Line& l) const {
    const auto v = numbers(key, l, 3);
    return {v[0], v[1], v[2]};
  }

  Quaternion quat(const std::string& key, const Line& l) const {
    const auto v = numbers(key, l, 4);
    return {Vec3(v[0], v[1], v[2]), v[3]};
  }

  bool boolean(const std::string& key, const Line& l) const {
    const std::string v = trim(l.value);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    fail(l.number, key + ": expected true or false, got '" + v + "'");
  }

  std::uint64_t unsigned_int(const std::string& key, const Line& l) const {
    const std::string v = trim(l.value);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
      fail(l.number, key + ": expected a non-negative integer, got '" + v + "'");
    return out;
  }

 private:
  std::string source_;
};

using Setter = std::function<void(Scenario&, const Parser&, const std::string&, const Line&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"inertia_kgm2", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.inertia = p.vec3(k, l); }},
      {"rho_t_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.geometry.rho_t = p.vec3(k, l); }},
      {"eta_quat", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.geometry.eta = p.quat(k, l); }},
      {"q0_quat", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.initial.q = p.quat(k, l); }},
      {"omega0_rad_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.initial.omega = p.vec3(k, l); }},
      {"r0_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.initial.r_o = p.vec3(k, l); }},
      {"v0_m_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.initial.v_o = p.vec3(k, l); }},
      {"n_z_rad_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.n_z = p.scalar(k, l); }},
      {"meas_rate_hz", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.meas_rate_hz = p.scalar(k, l); }},
      {"sigma_r_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.sigma_r = p.scalar(k, l); }},
      {"sigma_qo", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.sigma_qo = p.scalar(k, l); }},
      {"sigma_tau", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.process.sigma_tau = p.scalar(k, l); }},
      {"sigma_f", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.process.sigma_f = p.scalar(k, l); }},
      {"truth_disturbances", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.truth_disturbances = p.boolean(k, l); }},
      {"truth_step_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.truth_step = p.scalar(k, l); }},
      {"duration_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.duration = p.scalar(k, l); }},
      {"seed", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.seed = p.unsigned_int(k, l); }},
      {"filter_start_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.filter_start = p.scalar(k, l); }},
      {"init_perturb", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.perturbation.enabled = p.boolean(k, l); }},
      {"init_sample_prior", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.perturbation.sample_prior = p.boolean(k, l); }},
      {"init_attitude_rad", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.perturbation.attitude_rad = p.scalar(k, l); }},
      {"init_rate_rad_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.perturbation.rate_rad_s = p.scalar(k, l); }},
      {"init_position_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.perturbation.position_m = p.scalar(k, l); }},
      {"init_velocity_m_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.perturbation.velocity_m_s = p.scalar(k, l); }},
      {"prior_dq", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.dq = p.scalar(k, l); }},
      {"prior_omega_rad_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.omega = p.scalar(k, l); }},
      {"prior_p", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.p = p.scalar(k, l); }},
      {"prior_r_o_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.r_o = p.scalar(k, l); }},
      {"prior_v_o_m_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.v_o = p.scalar(k, l); }},
      {"prior_rho_t_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.rho_t = p.scalar(k, l); }},
      {"prior_deta", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.prior.deta = p.scalar(k, l); }},
      {"joseph_form", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.joseph_form = p.boolean(k, l); }},
      {"gate", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.gate_enabled = p.boolean(k, l); }},
      {"param_rw_p", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.parameter_walk.p = p.scalar(k, l); }},
      {"param_rw_rho_t", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.parameter_walk.rho_t = p.scalar(k, l); }},
      {"param_rw_eta", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.parameter_walk.eta = p.scalar(k, l); }},
      {"convergence_attitude_deg", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.convergence_attitude_deg = p.scalar(k, l); }},
      {"convergence_position_m", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.convergence_position_m = p.scalar(k, l); }},
      {"convergence_hold_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.convergence_hold_s = p.scalar(k, l); }},
      {"parameter_check_s", [](Scenario& s, const Parser& p, const std::string& k, const Line& l) { s.parameter_check_time = p.scalar(k, l); }},
  };
  return table;
}

std::string window_text(const OcclusionWindow& w) {
  std::ostringstream os;
  os << "[" << w.start << ", " << w.end << "]";
  return os.str();
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

Scenario parse_config(std::istream& in, const std::string& source) {
  const Parser parser(source);
  Scenario s;
  std::map<std::string, int> seen;
  std::map<std::string, Line> axis_angle;
  std::vector<int> occlusion_lines;
  bool occlusions_set = false;

  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) parser.fail(number, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const Line line{number, trim(text.substr(eq + 1))};
    if (key.empty()) parser.fail(number, "missing key");
    if (line.value.empty()) parser.fail(number, key + ": missing value");

    if (key == "occlusion_s") {
      if (!occlusions_set) s.occlusions.clear();
      occlusions_set = true;
      if (line.value == "none") continue;
      const auto v = parser.numbers(key, line, 2);
      s.occlusions.push_back({v[0], v[1]});
      occlusion_lines.push_back(number);
      continue;
    }
    if (seen.count(key)) parser.fail(number, key + ": already set on line " + std::to_string(seen[key]));
    seen[key] = number;

    if (key == "eta_axis" || key == "eta_angle_deg" || key == "q0_axis" || key == "q0_angle_deg") {
      axis_angle[key] = line;
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) parser.fail(number, "unknown key '" + key + "'");
    it->second(s, parser, key, line);
  }

  for (const std::string prefix : {"eta", "q0"}) {
    const auto axis = axis_angle.find(prefix + "_axis");
    const auto angle = axis_angle.find(prefix + "_angle_deg");
    if (axis == axis_angle.end() && angle == axis_angle.end()) continue;
    const int at = axis != axis_angle.end() ? axis->second.number : angle->second.number;
    if (seen.count(prefix + "_quat")) parser.fail(at, prefix + ": give either " + prefix + "_quat or axis/angle, not both");
    if (axis == axis_angle.end() || angle == axis_angle.end())
      parser.fail(at, prefix + ": " + prefix + "_axis and " + prefix + "_angle_deg must be given together");
    const Vec3 n = parser.vec3(prefix + "_axis", axis->second);
    if (!(n.norm() > 0.0)) parser.fail(axis->second.number, prefix + "_axis: must be non-zero");
    const Quaternion q =
        Quaternion::from_axis_angle(n, parser.scalar(prefix + "_angle_deg", angle->second) * kDegToRad);
    (std::string(prefix) == "eta" ? s.geometry.eta : s.initial.q) = q;
  }

  try {
    s.validate();
  } catch (const ScenarioError& e) {
    const std::string msg = e.what();
    int line = 0;
    const auto colon = msg.find(':');
    if (colon != std::string::npos && seen.count(msg.substr(0, colon))) line = seen[msg.substr(0, colon)];
    for (std::size_t i = 0; i < occlusion_lines.size(); ++i)
      if (msg.find(window_text(s.occlusions[i])) != std::string::npos) line = std::max(line, occlusion_lines[i]);
    // A default window that no longer fits the run is the duration's fault.
    if (line == 0 && msg.find("duration_s") != std::string::npos && seen.count("duration_s")) line = seen["duration_s"];
    parser.fail(line, msg);
  } catch (const std::invalid_argument& e) {
    parser.fail(seen.count("inertia_kgm2") ? seen["inertia_kgm2"] : 0, e.what());
  }
  return s;
}

Scenario load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  return parse_config(in, path.string());
}

std::string format_config(const Scenario& s) {
  std::ostringstream os;
  const auto kv = [&os](const std::string& key, const std::string& value) { os << key << " = " << value << "\n"; };
  os << "# target and chaser\n";
  kv("inertia_kgm2", fmt(s.inertia));
  kv("rho_t_m", fmt(s.geometry.rho_t));
  kv("eta_quat", fmt(s.geometry.eta.as_vector()));
  kv("q0_quat", fmt(s.initial.q.as_vector()));
  kv("omega0_rad_s", fmt(s.initial.omega));
  kv("r0_m", fmt(s.initial.r_o));
  kv("v0_m_s", fmt(s.initial.v_o));
  kv("n_z_rad_s", fmt(s.n_z));
  os << "# sensing and noise\n";
  kv("meas_rate_hz", fmt(s.meas_rate_hz));
  kv("sigma_r_m", fmt(s.sigma_r));
  kv("sigma_qo", fmt(s.sigma_qo));
  kv("sigma_tau", fmt(s.process.sigma_tau));
  kv("sigma_f", fmt(s.process.sigma_f));
  kv("truth_disturbances", fmt(s.truth_disturbances));
  kv("truth_step_s", fmt(s.truth_step));
  if (s.occlusions.empty()) kv("occlusion_s", "none");
  for (const auto& w : s.occlusions) kv("occlusion_s", fmt(w.start) + " " + fmt(w.end));
  os << "# run\n";
  kv("duration_s", fmt(s.duration));
  kv("seed", std::to_string(s.seed));
  kv("filter_start_s", fmt(s.filter_start));
  os << "# filter\n";
  kv("init_perturb", fmt(s.perturbation.enabled));
  kv("init_sample_prior", fmt(s.perturbation.sample_prior));
  kv("init_attitude_rad", fmt(s.perturbation.attitude_rad));
  kv("init_rate_rad_s", fmt(s.perturbation.rate_rad_s));
  kv("init_position_m", fmt(s.perturbation.position_m));
  kv("init_velocity_m_s", fmt(s.perturbation.velocity_m_s));
  kv("prior_dq", fmt(s.prior.dq));
  kv("prior_omega_rad_s", fmt(s.prior.omega));
  kv("prior_p", fmt(s.prior.p));
  kv("prior_r_o_m", fmt(s.prior.r_o));
  kv("prior_v_o_m_s", fmt(s.prior.v_o));
  kv("prior_rho_t_m", fmt(s.prior.rho_t));
  kv("prior_deta", fmt(s.prior.deta));
  kv("joseph_form", fmt(s.joseph_form));
  kv("gate", fmt(s.gate_enabled));
  kv("param_rw_p", fmt(s.parameter_walk.p));
  kv("param_rw_rho_t", fmt(s.parameter_walk.rho_t));
  kv("param_rw_eta", fmt(s.parameter_walk.eta));
  os << "# metrics\n";
  kv("convergence_attitude_deg", fmt(s.convergence_attitude_deg));
  kv("convergence_position_m", fmt(s.convergence_position_m));
  kv("convergence_hold_s", fmt(s.convergence_hold_s));
  kv("parameter_check_s", fmt(s.parameter_check_time));
  return os.str();
}

}  // namespace tumblenav

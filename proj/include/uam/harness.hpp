#pragma once

// Closed-loop scenarios: plant at 1 kHz, estimation/control at 500 Hz,
// gain scheduling at 10 Hz while in contact.

#include <uam/controller.hpp>
#include <uam/estimator.hpp>
#include <uam/plant.hpp>
#include <uam/reference.hpp>
#include <uam/scheduler.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace uam {

enum class ForceProfile { Constant, Sinusoid };
enum class MotionProfile { HoldPoint, Slide };

struct Scenario {
  std::string name = "scenario";
  double tilt_deg = 30.0;     // 0 = vertical wall
  double heading_deg = 0.0;
  Vec3 p_s{0.0, 0.0, 1.5};   // point on the surface
  double k_e = 200.0;         // true environment
  double b_e = 0.5;
  double start_distance = 0.2;  // m, along -B_f from the surface
  double approach_speed = 0.1;  // m/s
  double overshoot = 0.05;      // free setpoint cap beyond the surface, m

  ForceProfile force = ForceProfile::Constant;
  double force_constant = -6.0;
  double force_offset = -3.5, force_amplitude = 2.5, force_period = 5.0;

  MotionProfile motion = MotionProfile::HoldPoint;
  Vec2 slide_direction{1.0, 0.0};  // in motion-plane coordinates
  double slide_speed = 0.05;

  double duration = 20.0;
  std::uint64_t seed = 1;

  PlantConfig plant;
  GainSet gains;
  RlseParams rlse;
  GainBox box;
  double omega_n = 10.0;
  double control_rate = 500.0;
  double scheduler_rate = 10.0;
  double gain_slew = 5.0;          // units/s on k_f and b_f
  double thrust_ceiling_factor = 2.0;  // times m_bar g_bar
  double max_tilt_deg = 35.0;          // thrust-vector tilt limit
  double contact_threshold = 0.1;  // N
  int contact_samples = 3;
  double settle_window = 3.0;      // s of continuous contact
  int log_every = 1;               // control ticks per log row

  Scenario() {
    plant.noise = {1e-4, 1e-3, 0.02};
    plant.disturbance.constant = Vec3{0.1, -0.1, 0.0};
    plant.disturbance.amplitude = Vec3{0.2, 0.2, 0.1};
    plant.disturbance.frequency = Vec3{0.5, 0.3, 0.7};
    plant.disturbance.viscous_friction = 0.5;
  }

  void validate() const {
    if (!(approach_speed > 0.0)) throw std::invalid_argument("scenario: approach_speed <= 0");
    if (!(duration >= 0.0)) throw std::invalid_argument("scenario: duration < 0");
    if (!(control_rate > 0.0) || !(scheduler_rate > 0.0))
      throw std::invalid_argument("scenario: rates must be positive");
    if (!(plant.dt > 0.0)) throw std::invalid_argument("scenario: plant dt <= 0");
    if (!box.valid()) throw std::invalid_argument("scenario: invalid gain box");
    if (!gains.valid()) throw std::invalid_argument("scenario: invalid gains");
    if (!(start_distance > 0.0)) throw std::invalid_argument("scenario: start_distance <= 0");
    if (log_every < 1) throw std::invalid_argument("scenario: log_every < 1");
    if (!(max_tilt_deg > 0.0 && max_tilt_deg < 90.0))
      throw std::invalid_argument("scenario: max_tilt_deg outside (0, 90)");
    if (!(thrust_ceiling_factor > 1.0))
      throw std::invalid_argument("scenario: thrust ceiling below hover");
  }

  SurfaceModel surface() const {
    return make_surface(tilt_deg * kPi / 180.0, heading_deg * kPi / 180.0, p_s, k_e, b_e);
  }

  double force_setpoint(double t) const {
    if (force == ForceProfile::Constant) return force_constant;
    return force_offset + force_amplitude * std::cos(2.0 * kPi * t / force_period);
  }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  auto v3 = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  json j;
  j["name"] = s.name;
  j["tilt_deg"] = s.tilt_deg;
  j["heading_deg"] = s.heading_deg;
  j["p_s"] = v3(s.p_s);
  j["k_e"] = s.k_e;
  j["b_e"] = s.b_e;
  j["start_distance"] = s.start_distance;
  j["approach_speed"] = s.approach_speed;
  j["overshoot"] = s.overshoot;
  j["force"] = {{"profile", s.force == ForceProfile::Constant ? "constant" : "sinusoid"},
                {"constant", s.force_constant},
                {"offset", s.force_offset},
                {"amplitude", s.force_amplitude},
                {"period", s.force_period}};
  j["motion"] = {{"profile", s.motion == MotionProfile::HoldPoint ? "hold" : "slide"},
                 {"direction", json::array({s.slide_direction.x(), s.slide_direction.y()})},
                 {"speed", s.slide_speed}};
  j["duration"] = s.duration;
  j["seed"] = s.seed;
  j["plant"] = {{"m_t", s.plant.m_t},
                {"g", s.plant.g},
                {"d", v3(s.plant.d)},
                {"tau_att", s.plant.tau_att},
                {"dt", s.plant.dt},
                {"noise",
                 {{"position", s.plant.noise.position},
                  {"velocity", s.plant.noise.velocity},
                  {"force", s.plant.noise.force}}},
                {"disturbance",
                 {{"constant", v3(s.plant.disturbance.constant)},
                  {"amplitude", v3(s.plant.disturbance.amplitude)},
                  {"frequency", v3(s.plant.disturbance.frequency)},
                  {"viscous_friction", s.plant.disturbance.viscous_friction}}}};
  j["gains"] = {{"k_p", s.gains.k_p},
                {"k_d", s.gains.k_d},
                {"k_mp", s.gains.K_mp(0, 0)},
                {"k_md", s.gains.K_md(0, 0)},
                {"k_f", s.gains.k_f},
                {"b_f", s.gains.b_f},
                {"L_f", s.gains.L_f},
                {"L_m", s.gains.L_m(0, 0)},
                {"m_bar", s.gains.m_bar},
                {"g_bar", s.gains.g_bar}};
  j["rlse"] = {{"mu1", s.rlse.mu1},
               {"mu2", s.rlse.mu2},
               {"rho_max", s.rlse.rho_max},
               {"k_min", s.rlse.bounds.k_min},
               {"k_max", s.rlse.bounds.k_max},
               {"b_min", s.rlse.bounds.b_min},
               {"b_max", s.rlse.bounds.b_max}};
  j["box"] = {{"kf_min", s.box.kf_min},
              {"kf_max", s.box.kf_max},
              {"bf_min", s.box.bf_min},
              {"bf_max", s.box.bf_max}};
  j["omega_n"] = s.omega_n;
  j["control_rate"] = s.control_rate;
  j["scheduler_rate"] = s.scheduler_rate;
  j["gain_slew"] = s.gain_slew;
  j["thrust_ceiling_factor"] = s.thrust_ceiling_factor;
  j["max_tilt_deg"] = s.max_tilt_deg;
  j["contact_threshold"] = s.contact_threshold;
  j["contact_samples"] = s.contact_samples;
  j["settle_window"] = s.settle_window;
  j["log_every"] = s.log_every;
  return j;
}

// Missing keys keep their defaults.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  auto get = [](const nlohmann::json& o, const char* k, auto& dst) {
    if (o.contains(k)) o.at(k).get_to(dst);
  };
  auto get3 = [](const nlohmann::json& o, const char* k, Vec3& dst) {
    if (!o.contains(k)) return;
    const auto& a = o.at(k);
    if (!a.is_array() || a.size() != 3) throw std::invalid_argument(std::string(k) + ": need 3 values");
    dst = Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  };
  get(j, "name", s.name);
  get(j, "tilt_deg", s.tilt_deg);
  get(j, "heading_deg", s.heading_deg);
  get3(j, "p_s", s.p_s);
  get(j, "k_e", s.k_e);
  get(j, "b_e", s.b_e);
  get(j, "start_distance", s.start_distance);
  get(j, "approach_speed", s.approach_speed);
  get(j, "overshoot", s.overshoot);
  if (j.contains("force")) {
    const auto& f = j.at("force");
    if (f.contains("profile")) {
      const auto p = f.at("profile").get<std::string>();
      if (p == "constant") s.force = ForceProfile::Constant;
      else if (p == "sinusoid") s.force = ForceProfile::Sinusoid;
      else throw std::invalid_argument("force.profile: " + p);
    }
    get(f, "constant", s.force_constant);
    get(f, "offset", s.force_offset);
    get(f, "amplitude", s.force_amplitude);
    get(f, "period", s.force_period);
  }
  if (j.contains("motion")) {
    const auto& m = j.at("motion");
    if (m.contains("profile")) {
      const auto p = m.at("profile").get<std::string>();
      if (p == "hold") s.motion = MotionProfile::HoldPoint;
      else if (p == "slide") s.motion = MotionProfile::Slide;
      else throw std::invalid_argument("motion.profile: " + p);
    }
    if (m.contains("direction")) {
      const auto& d = m.at("direction");
      s.slide_direction = Vec2{d.at(0).get<double>(), d.at(1).get<double>()};
    }
    get(m, "speed", s.slide_speed);
  }
  get(j, "duration", s.duration);
  get(j, "seed", s.seed);
  if (j.contains("plant")) {
    const auto& p = j.at("plant");
    get(p, "m_t", s.plant.m_t);
    get(p, "g", s.plant.g);
    get3(p, "d", s.plant.d);
    get(p, "tau_att", s.plant.tau_att);
    get(p, "dt", s.plant.dt);
    if (p.contains("noise")) {
      const auto& n = p.at("noise");
      get(n, "position", s.plant.noise.position);
      get(n, "velocity", s.plant.noise.velocity);
      get(n, "force", s.plant.noise.force);
    }
    if (p.contains("disturbance")) {
      const auto& d = p.at("disturbance");
      get3(d, "constant", s.plant.disturbance.constant);
      get3(d, "amplitude", s.plant.disturbance.amplitude);
      get3(d, "frequency", s.plant.disturbance.frequency);
      get(d, "viscous_friction", s.plant.disturbance.viscous_friction);
    }
  }
  if (j.contains("gains")) {
    const auto& g = j.at("gains");
    get(g, "k_p", s.gains.k_p);
    get(g, "k_d", s.gains.k_d);
    double v = 0.0;
    if (g.contains("k_mp")) { g.at("k_mp").get_to(v); s.gains.K_mp = v * Mat2::Identity(); }
    if (g.contains("k_md")) { g.at("k_md").get_to(v); s.gains.K_md = v * Mat2::Identity(); }
    get(g, "k_f", s.gains.k_f);
    get(g, "b_f", s.gains.b_f);
    get(g, "L_f", s.gains.L_f);
    if (g.contains("L_m")) { g.at("L_m").get_to(v); s.gains.L_m = v * Mat2::Identity(); }
    get(g, "m_bar", s.gains.m_bar);
    get(g, "g_bar", s.gains.g_bar);
  }
  if (j.contains("rlse")) {
    const auto& r = j.at("rlse");
    get(r, "mu1", s.rlse.mu1);
    get(r, "mu2", s.rlse.mu2);
    get(r, "rho_max", s.rlse.rho_max);
    get(r, "k_min", s.rlse.bounds.k_min);
    get(r, "k_max", s.rlse.bounds.k_max);
    get(r, "b_min", s.rlse.bounds.b_min);
    get(r, "b_max", s.rlse.bounds.b_max);
  }
  if (j.contains("box")) {
    const auto& b = j.at("box");
    get(b, "kf_min", s.box.kf_min);
    get(b, "kf_max", s.box.kf_max);
    get(b, "bf_min", s.box.bf_min);
    get(b, "bf_max", s.box.bf_max);
  }
  get(j, "omega_n", s.omega_n);
  get(j, "control_rate", s.control_rate);
  get(j, "scheduler_rate", s.scheduler_rate);
  get(j, "gain_slew", s.gain_slew);
  get(j, "thrust_ceiling_factor", s.thrust_ceiling_factor);
  get(j, "max_tilt_deg", s.max_tilt_deg);
  get(j, "contact_threshold", s.contact_threshold);
  get(j, "contact_samples", s.contact_samples);
  get(j, "settle_window", s.settle_window);
  get(j, "log_every", s.log_every);
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path);
  return scenario_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Log

struct LogRow {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  double x_f = 0.0, f_f = 0.0, f_fr = 0.0, x_fr = 0.0;
  Vec2 x_m = Vec2::Zero(), x_mr = Vec2::Zero();
  double k_f = 0.0, b_f = 0.0, k_hat = 0.0, b_hat = 0.0;
  Mode mode = Mode::Free;
  double thrust = 0.0;
  Vec3 phi = Vec3::Zero();
  int provenance = 0;  // 0 none yet, 1 + Provenance
};

struct Event {
  double t = 0.0;
  std::string kind;
  std::string detail;
};

struct RunLog {
  std::vector<LogRow> rows;
  std::vector<Event> events;
};

inline const std::vector<std::string>& log_columns() {
  static const std::vector<std::string> cols{
      "t",     "p_x",   "p_y",   "p_z",  "x_f",   "f_f",   "f_fr",  "x_fr",
      "x_m1",  "x_m2",  "x_mr1", "x_mr2", "k_f",  "b_f",   "k_hat", "b_hat",
      "mode",  "thrust", "roll", "pitch", "yaw",  "provenance"};
  return cols;
}

inline void write_log_csv(std::ostream& os, const RunLog& log) {
  const auto& cols = log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  os << std::setprecision(10);
  for (const LogRow& r : log.rows) {
    os << r.t << ',' << r.p.x() << ',' << r.p.y() << ',' << r.p.z() << ',' << r.x_f << ','
       << r.f_f << ',' << r.f_fr << ',' << r.x_fr << ',' << r.x_m.x() << ',' << r.x_m.y() << ','
       << r.x_mr.x() << ',' << r.x_mr.y() << ',' << r.k_f << ',' << r.b_f << ',' << r.k_hat
       << ',' << r.b_hat << ',' << (r.mode == Mode::Contact ? 1 : 0) << ',' << r.thrust << ','
       << r.phi.x() << ',' << r.phi.y() << ',' << r.phi.z() << ',' << r.provenance << '\n';
  }
}

inline void write_events_csv(std::ostream& os, const RunLog& log) {
  os << "t,kind,detail\n" << std::setprecision(10);
  for (const Event& e : log.events) os << e.t << ',' << e.kind << ',' << e.detail << '\n';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Reads a log written by write_log_csv; validates header and values.
inline RunLog read_log_csv(std::istream& is) {
  RunLog log;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("log: missing header");
  if (split_csv_line(line) != log_columns()) throw std::runtime_error("log: unexpected header");
  const std::size_t n = log_columns().size();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != n) throw std::runtime_error("log: wrong column count at line " + std::to_string(lineno));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = std::stod(c[i]);
      if (!std::isfinite(v[i])) throw std::runtime_error("log: non-finite value at line " + std::to_string(lineno));
    }
    LogRow r;
    r.t = v[0];
    r.p = Vec3{v[1], v[2], v[3]};
    r.x_f = v[4];
    r.f_f = v[5];
    r.f_fr = v[6];
    r.x_fr = v[7];
    r.x_m = Vec2{v[8], v[9]};
    r.x_mr = Vec2{v[10], v[11]};
    r.k_f = v[12];
    r.b_f = v[13];
    r.k_hat = v[14];
    r.b_hat = v[15];
    r.mode = v[16] != 0.0 ? Mode::Contact : Mode::Free;
    r.thrust = v[17];
    r.phi = Vec3{v[18], v[19], v[20]};
    r.provenance = static_cast<int>(v[21]);
    if (!log.rows.empty() && !(r.t > log.rows.back().t))
      throw std::runtime_error("log: timestamps not increasing at line " + std::to_string(lineno));
    log.rows.push_back(r);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Closed loop

namespace detail {
inline double slew(double cur, double target, double max_step) {
  return cur + std::clamp(target - cur, -max_step, max_step);
}
}  // namespace detail

inline RunLog run(const Scenario& sc) {
  sc.validate();
  const SurfaceModel surface = sc.surface();
  const PlantConfig& pc = sc.plant;
  std::mt19937_64 rng(sc.seed);

  const int plant_per_ctrl = std::max(1, static_cast<int>(std::lround(1.0 / (sc.control_rate * pc.dt))));
  const double Tc = plant_per_ctrl * pc.dt;
  const int ctrl_per_sched = std::max(1, static_cast<int>(std::lround(sc.control_rate / sc.scheduler_rate)));
  const long n_ctrl = static_cast<long>(std::floor(sc.duration / Tc + 1e-9));

  PlantState st;
  st.p_e = sc.p_s - sc.start_distance * surface.B_f;
  const double yaw_r = sc.heading_deg * kPi / 180.0;
  st.phi = Vec3{0.0, 0.0, yaw_r};

  GainSet gains = sc.gains;
  EnvEstimate est = EnvEstimate::initial(sc.rlse.bounds);
  ContactDetector detector(sc.contact_threshold, sc.contact_samples);
  DOBState dob;
  double u_prev_f = 0.0;
  Vec2 u_prev_m = Vec2::Zero();

  const Measurement m0 = measure(st, surface);
  ReferenceState ref;
  ref.x_fr = m0.x_f;
  ref.x_mr = m0.x_m;
  const double x_f0 = m0.x_f;
  const Vec2 x_m0 = m0.x_m;
  const double x_f_cap = surface.x_fs() + sc.overshoot;
  const double grav_f = surface.B_f.dot(kE3);
  const Vec2 grav_m = surface.B_m.transpose() * kE3;
  const double ceiling = sc.thrust_ceiling_factor * gains.m_bar * gains.g_bar;

  double t_first_contact = -1.0;
  Vec2 slide_origin = x_m0;
  bool scheduled_once = false;
  double kf_target = gains.k_f, bf_target = gains.b_f;
  int provenance = 0;
  bool saturated = false;
  Mode mode = Mode::Free;

  RunLog log;
  log.rows.reserve(static_cast<std::size_t>(n_ctrl / sc.log_every + 1));

  for (long k = 0; k < n_ctrl; ++k) {
    const double t = st.t;
    const Measurement meas = measure(st, surface, pc, rng);

    const bool contact = detector.update(meas.f_f, meas.x_f);
    const Mode new_mode = contact ? Mode::Contact : Mode::Free;
    if (new_mode != mode) {
      ref = switch_mode(ref, new_mode, meas.f_f);
      mode = new_mode;
      log.events.push_back({t, contact ? "contact_make" : "contact_break", ""});
      if (contact && t_first_contact < 0.0) {
        t_first_contact = t;
        slide_origin = ref.x_mr;
      }
    }

    if (contact) {
      est = rlse_update(est, meas.x_f, meas.x_dot_f, meas.f_f, detector.latched_surface(),
                        sc.rlse, Tc);
      if (k % ctrl_per_sched == 0 || !scheduled_once) {
        const ScheduleResult s =
            schedule(gains.k_p, gains.k_d, est.k_hat, est.b_hat, gains.m_bar, sc.box);
        const int prov = 1 + static_cast<int>(s.provenance);
        if (prov != provenance)
          log.events.push_back({t, "provenance", to_string(s.provenance)});
        provenance = prov;
        kf_target = s.k_f;
        bf_target = s.b_f;
        if (!scheduled_once) {
          gains.k_f = kf_target;
          gains.b_f = bf_target;
          scheduled_once = true;
        }
      }
    }
    gains.k_f = detail::slew(gains.k_f, kf_target, sc.gain_slew * Tc);
    gains.b_f = detail::slew(gains.b_f, bf_target, sc.gain_slew * Tc);

    const DOBOutput obs =
        dob_update(dob, meas, u_prev_f, u_prev_m, gains, contact, surface, Tc);
    dob = obs.state;

    Vec2 x_md = x_m0;
    if (sc.motion == MotionProfile::Slide && t_first_contact >= 0.0) {
      const Vec2 dir = sc.slide_direction.normalized();
      x_md = slide_origin + dir * sc.slide_speed * (t - t_first_contact);
    }
    if (mode == Mode::Free) {
      const double x_fd = std::min(x_f0 + sc.approach_speed * t, x_f_cap);
      ref = free_step(ref, x_fd, x_md, sc.omega_n, Tc);
    } else {
      ref = contact_step(ref, sc.force_setpoint(t), x_md, est, sc.omega_n, Tc);
    }

    const double u_f = control_force(ref, meas, obs.delta_f_hat, gains, mode, grav_f);
    const Vec2 u_m = control_motion(ref, meas, obs.delta_m_hat, gains, grav_m);
    const SaturatedInput u_sat =
        saturate_input(compose_u(u_f, u_m, surface), ceiling, sc.max_tilt_deg * kPi / 180.0);
    // The observers must see what was actually commanded.
    u_prev_f = surface.B_f.dot(u_sat.u);
    u_prev_m = surface.B_m.transpose() * u_sat.u;

    ThrustCommand cmd = extract_inputs(u_sat.u, st.phi);
    const bool sat = u_sat.saturated || cmd.thrust > ceiling;
    cmd.thrust = std::min(cmd.thrust, ceiling);
    if (sat && !saturated) log.events.push_back({t, "saturation", "input clipped"});
    saturated = sat;

    if (k % sc.log_every == 0) {
      LogRow r;
      r.t = t;
      r.p = st.p_e;
      r.x_f = surface.B_f.dot(st.p_e);
      r.f_f = contact_force(r.x_f, surface.B_f.dot(st.v_e), surface);
      r.f_fr = ref.f_fr;
      r.x_fr = ref.x_fr;
      r.x_m = surface.B_m.transpose() * st.p_e;
      r.x_mr = ref.x_mr;
      r.k_f = gains.k_f;
      r.b_f = gains.b_f;
      r.k_hat = est.k_hat;
      r.b_hat = est.b_hat;
      r.mode = mode;
      r.thrust = cmd.thrust;
      r.phi = st.phi;
      r.provenance = provenance;
      log.rows.push_back(r);
    }

    const Vec3 phi_r{cmd.roll_r, cmd.pitch_r, yaw_r};
    for (int j = 0; j < plant_per_ctrl; ++j) {
      try {
        st = step(st, cmd.thrust, phi_r, surface, pc);
      } catch (const NonFiniteInput& e) {
        std::ostringstream msg;
        msg << "run '" << sc.name << "' aborted at t=" << st.t << ": " << e.what();
        throw std::runtime_error(msg.str());
      }
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  std::size_t rows = 0;
  double first_contact = -1.0;
  double settle_start = -1.0;  // -1 if never settled
  double force_rms = 0.0;      // post-settling
  double force_max = 0.0;
  double motion_rms = 0.0;
  double contact_force_rms = 0.0;  // from first contact to end
  int contact_switches = 0;
  int breaks_after_settle = 0;
  double phase_lag = 0.0;  // s, lag of f_f behind f_fr at the correlation peak
  std::map<std::string, std::size_t> provenance;  // rows per provenance in contact
  bool settled() const { return settle_start >= 0.0; }
};

namespace detail {

// Lag (s) maximizing the correlation coefficient between a and b shifted
// by the lag, over their overlap; searched in [-max_lag, max_lag] and
// positive when b trails a.
inline double xcorr_lag(const std::vector<double>& a, const std::vector<double>& b, double dt,
                        double max_lag) {
  const long n = static_cast<long>(a.size());
  if (n < 4) return 0.0;
  const long L = std::min<long>(static_cast<long>(max_lag / dt), n / 2);
  double best = -std::numeric_limits<double>::infinity();
  long best_k = 0;
  for (long k = -L; k <= L; ++k) {
    const long i0 = std::max(0L, -k), i1 = std::min(n, n - k);
    const long cnt = i1 - i0;
    if (cnt < 2) continue;
    double sa = 0, sb = 0;
    for (long i = i0; i < i1; ++i) {
      sa += a[i];
      sb += b[i + k];
    }
    const double ma = sa / cnt, mb = sb / cnt;
    double sab = 0, saa = 0, sbb = 0;
    for (long i = i0; i < i1; ++i) {
      const double da = a[i] - ma, db = b[i + k] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) continue;
    const double r = sab / std::sqrt(saa * sbb);
    if (r > best) {
      best = r;
      best_k = k;
    }
  }
  return best_k * dt;
}

}  // namespace detail

inline Metrics metrics(const RunLog& log, double settle_window) {
  Metrics m;
  m.rows = log.rows.size();
  if (log.rows.empty()) return m;
  const auto& R = log.rows;

  double run_start = -1.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    const bool c = R[i].mode == Mode::Contact;
    const bool prev_c = i > 0 && R[i - 1].mode == Mode::Contact;
    if (c != prev_c && i > 0) ++m.contact_switches;
    if (c && !prev_c) {
      run_start = R[i].t;
      if (m.first_contact < 0.0) m.first_contact = R[i].t;
    }
    if (!c) run_start = -1.0;
    if (c && m.settle_start < 0.0 && run_start >= 0.0 && R[i].t - run_start >= settle_window - 1e-9)
      m.settle_start = R[i].t;
    if (m.settle_start >= 0.0 && !c && prev_c) ++m.breaks_after_settle;
  }

  auto rms = [](double s, std::size_t n) { return n ? std::sqrt(s / n) : 0.0; };
  if (m.first_contact >= 0.0) {
    double s = 0.0;
    std::size_t n = 0;
    for (const LogRow& r : R) {
      if (r.t < m.first_contact) continue;
      s += (r.f_fr - r.f_f) * (r.f_fr - r.f_f);
      ++n;
    }
    m.contact_force_rms = rms(s, n);
  }
  if (m.settled()) {
    double sf = 0.0, sm = 0.0;
    std::size_t n = 0;
    std::vector<double> fr, ff;
    for (const LogRow& r : R) {
      if (r.t < m.settle_start) continue;
      const double e = r.f_fr - r.f_f;
      sf += e * e;
      m.force_max = std::max(m.force_max, std::abs(e));
      sm += (r.x_mr - r.x_m).squaredNorm();
      fr.push_back(r.f_fr);
      ff.push_back(r.f_f);
      ++n;
    }
    m.force_rms = rms(sf, n);
    m.motion_rms = rms(sm, n);
    const double dt = R.size() > 1 ? (R.back().t - R.front().t) / (R.size() - 1) : 1.0;
    m.phase_lag = detail::xcorr_lag(fr, ff, dt, 1.0);
  }
  for (const LogRow& r : R) {
    if (r.mode != Mode::Contact) continue;
    const std::string key =
        r.provenance == 0 ? "none" : to_string(static_cast<Provenance>(r.provenance - 1));
    ++m.provenance[key];
  }
  return m;
}

inline void write_metrics(std::ostream& os, const Metrics& m) {
  os << std::setprecision(8);
  os << "rows=" << m.rows << '\n'
     << "first_contact=" << m.first_contact << '\n'
     << "settle_start=" << m.settle_start << '\n'
     << "settled=" << (m.settled() ? 1 : 0) << '\n'
     << "force_rms=" << m.force_rms << '\n'
     << "force_max=" << m.force_max << '\n'
     << "motion_rms=" << m.motion_rms << '\n'
     << "contact_force_rms=" << m.contact_force_rms << '\n'
     << "contact_switches=" << m.contact_switches << '\n'
     << "breaks_after_settle=" << m.breaks_after_settle << '\n'
     << "phase_lag=" << m.phase_lag << '\n';
  for (const auto& [k, v] : m.provenance) os << "provenance." << k << '=' << v << '\n';
}

// ---------------------------------------------------------------------------
// Region timing

struct BenchRow {
  int N = 0;
  double grid_median_s = 0.0;
  double explicit_median_s = 0.0;
  double ratio() const { return grid_median_s / explicit_median_s; }
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double grid_exponent = 0.0;  // least-squares slope of log t vs log N
};

namespace detail {
template <typename F>
double median_seconds(F&& f, int reps) {
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto a = std::chrono::steady_clock::now();
    f();
    const auto b = std::chrono::steady_clock::now();
    ts.push_back(std::chrono::duration<double>(b - a).count());
  }
  std::nth_element(ts.begin(), ts.begin() + ts.size() / 2, ts.end());
  return ts[ts.size() / 2];
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}
}  // namespace detail

// All three conditions per repetition. The grid runs at resolution N; the
// explicit polygon does not depend on N, so it uses its default support.
inline BenchResult bench_scheduler(const std::vector<int>& Ns, int reps = 21,
                                   const LoopParams& p = {}, const GainBox& box = {}) {
  if (reps < 1) throw std::invalid_argument("bench_scheduler: reps < 1");
  BenchResult out;
  volatile std::size_t sink = 0;
  std::vector<double> xs, ys;
  for (int N : Ns) {
    if (N < 1) throw std::invalid_argument("bench_scheduler: N < 1");
    BenchRow row;
    row.N = N;
    row.grid_median_s = detail::median_seconds(
        [&] {
          for (Condition c : kConditions) sink = sink + region_grid(c, p, box, N).count();
        },
        reps);
    const ExplicitOptions eo;
    row.explicit_median_s = detail::median_seconds(
        [&] {
          for (Condition c : kConditions) sink = sink + region_explicit(c, p, box, eo).vertices.size();
        },
        reps);
    out.rows.push_back(row);
    xs.push_back(N);
    ys.push_back(row.grid_median_s);
  }
  out.grid_exponent = detail::loglog_slope(xs, ys);
  return out;
}

inline void write_bench_csv(std::ostream& os, const BenchResult& b) {
  os << "N,grid_median_s,explicit_median_s,ratio\n" << std::setprecision(6);
  for (const BenchRow& r : b.rows)
    os << r.N << ',' << r.grid_median_s << ',' << r.explicit_median_s << ',' << r.ratio() << '\n';
}

// ---------------------------------------------------------------------------
// Region export

inline void write_region_csv(std::ostream& os, const GainRegion& r) {
  os << "k_f,b_f\n" << std::setprecision(12);
  for (const Vec2& v : r.vertices) os << v.x() << ',' << v.y() << '\n';
}

inline void write_bitmap_csv(std::ostream& os, const GridBitmap& g) {
  os << "k_f,b_f,inside\n" << std::setprecision(12);
  for (int j = 0; j <= g.N; ++j)
    for (int i = 0; i <= g.N; ++i) os << g.kf(i) << ',' << g.bf(j) << ',' << (g.at(i, j) ? 1 : 0) << '\n';
}

}  // namespace uam

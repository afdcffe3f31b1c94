#pragma once

// Ground-truth translational dynamics of the aerial manipulator expressed at
// the end-effector, with first-order attitude lag and unilateral
// Kelvin-Voigt contact against a planar surface.

#include <uam/common.hpp>

#include <algorithm>
#include <random>

namespace uam {

// Rotation from body to inertial frame (Z-Y-X Euler: yaw, pitch, roll).
inline Mat3 rotation(const Vec3& phi) {
  return (Eigen::AngleAxisd(phi.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(phi.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(phi.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

// Yaw-dependent involution mapping thrust direction to the yaw-aligned frame.
inline Mat3 yaw_mix(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Mat3 m;
  m << c, s, 0, s, -c, 0, 0, 0, 1;
  return m;
}

struct SurfaceModel {
  Vec3 B_f{1.0, 0.0, 0.0};  // points into the surface
  Mat32 B_m = (Mat32() << 0, 0, 1, 0, 0, 1).finished();
  Vec3 p_s = Vec3::Zero();
  double k_e = 200.0;
  double b_e = 0.5;

  double x_fs() const { return B_f.dot(p_s); }

  bool basis_orthonormal(double tol = 1e-12) const {
    return std::abs(B_f.squaredNorm() - 1.0) <= tol &&
           (B_m.transpose() * B_m - Mat2::Identity()).cwiseAbs().maxCoeff() <= tol &&
           (B_m.transpose() * B_f).cwiseAbs().maxCoeff() <= tol;
  }
};

// Surface whose inward normal is tilted `tilt` rad below the horizontal
// (0 = vertical wall), facing along `heading` (yaw of the normal).
// B_m columns: horizontal tangent, then the up-slope tangent.
inline SurfaceModel make_surface(double tilt, double heading, const Vec3& p_s,
                                 double k_e, double b_e) {
  const Mat3 Rz = Eigen::AngleAxisd(heading, Vec3::UnitZ()).toRotationMatrix();
  const double c = std::cos(tilt), s = std::sin(tilt);
  SurfaceModel m;
  m.B_f = Rz * Vec3{c, 0.0, -s};
  m.B_m.col(0) = Rz * Vec3{0.0, 1.0, 0.0};
  m.B_m.col(1) = Rz * Vec3{s, 0.0, c};
  m.p_s = p_s;
  m.k_e = k_e;
  m.b_e = b_e;
  return m;
}

struct Disturbance {
  Vec3 constant = Vec3::Zero();   // N
  Vec3 amplitude = Vec3::Zero();  // N
  Vec3 frequency = Vec3::Zero();  // Hz
  double viscous_friction = 0.0;  // N s/m, tangential, only while in contact

  Vec3 at(double t) const {
    Vec3 d = constant;
    for (int i = 0; i < 3; ++i)
      d[i] += amplitude[i] * std::sin(2.0 * kPi * frequency[i] * t);
    return d;
  }
};

struct SensorNoise {
  double position = 0.0;  // m, std-dev
  double velocity = 0.0;  // m/s
  double force = 0.0;     // N
};

struct PlantConfig {
  double m_t = 4.2;
  double g = 9.81;
  Vec3 d{0.0, 0.0, -0.1};  // CoM-to-end-effector offset, body frame, frozen
  double tau_att = 0.02;
  Disturbance disturbance;
  SensorNoise noise;
  double dt = 1e-3;
  double contact_bisection_tol = 1e-6;  // m
};

struct PlantState {
  Vec3 p_e = Vec3::Zero();
  Vec3 v_e = Vec3::Zero();
  Vec3 phi = Vec3::Zero();
  bool in_contact = false;
  double t = 0.0;
};

// Kelvin-Voigt normal force along B_f; zero when not penetrating.
inline double contact_force(double x_f, double x_dot_f, const SurfaceModel& s) {
  const double pen = x_f - s.x_fs();
  if (pen <= 0.0) return 0.0;
  return -s.k_e * pen - s.b_e * x_dot_f;
}

// First-order lag of roll/pitch toward their references over dt; yaw is
// held at its reference.
inline Vec3 attitude_track(const Vec3& phi, const Vec3& phi_r, double tau_att,
                           double dt) {
  if (tau_att < 0.0) throw std::invalid_argument("attitude_track: tau_att < 0");
  Vec3 out = phi_r;
  if (tau_att > 0.0) {
    const double a = std::exp(-dt / tau_att);
    out.x() = phi_r.x() + (phi.x() - phi_r.x()) * a;
    out.y() = phi_r.y() + (phi.y() - phi_r.y()) * a;
  }
  return out;
}

namespace detail {

struct Kinematic {
  Vec3 p, v;
};

// Translational acceleration; `phi` already evaluated at the stage time.
inline Vec3 acceleration(const Vec3& p, const Vec3& v, const Vec3& phi,
                         double T, double t, const SurfaceModel& s,
                         const PlantConfig& cfg) {
  const double x_f = s.B_f.dot(p);
  const double f_n = contact_force(x_f, s.B_f.dot(v), s);
  Vec3 f = T * rotation(phi) * kE3 + s.B_f * f_n + cfg.disturbance.at(t);
  if (cfg.disturbance.viscous_friction != 0.0 && x_f - s.x_fs() > 0.0) {
    f -= cfg.disturbance.viscous_friction * (s.B_m * (s.B_m.transpose() * v));
  }
  return -cfg.g * kE3 + f / cfg.m_t;
}

// One RK4 step of length h starting `s0` seconds into the control interval.
inline Kinematic rk4(const Kinematic& y, double h, double s0, double t0,
                     double T, const Vec3& phi0, const Vec3& phi_r,
                     const SurfaceModel& s, const PlantConfig& cfg) {
  auto att = [&](double s_) { return attitude_track(phi0, phi_r, cfg.tau_att, s_); };
  auto f = [&](const Kinematic& k, double s_) {
    return Kinematic{k.v, acceleration(k.p, k.v, att(s_), T, t0 + s_, s, cfg)};
  };
  const Kinematic k1 = f(y, s0);
  const Kinematic k2 = f({y.p + 0.5 * h * k1.p, y.v + 0.5 * h * k1.v}, s0 + 0.5 * h);
  const Kinematic k3 = f({y.p + 0.5 * h * k2.p, y.v + 0.5 * h * k2.v}, s0 + 0.5 * h);
  const Kinematic k4 = f({y.p + h * k3.p, y.v + h * k3.v}, s0 + h);
  return {y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
          y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

}  // namespace detail

// Advances the plant by cfg.dt under constant thrust T and attitude
// reference phi_r. A step that changes the penetration sign is split at the
// contact boundary (located by bisection).
inline PlantState step(const PlantState& state, double T, const Vec3& phi_r,
                       const SurfaceModel& surface, const PlantConfig& cfg) {
  require_finite("plant::step", state.p_e, state.v_e, state.phi, T, phi_r);
  if (T < 0.0) throw std::invalid_argument("plant::step: negative thrust");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("plant::step: dt <= 0");

  const double h = cfg.dt;
  const detail::Kinematic y0{state.p_e, state.v_e};
  auto pen = [&](const detail::Kinematic& k) {
    return surface.B_f.dot(k.p) - surface.x_fs();
  };
  auto advance = [&](const detail::Kinematic& y, double s0, double len) {
    return detail::rk4(y, len, s0, state.t, T, state.phi, phi_r, surface, cfg);
  };

  detail::Kinematic y1 = advance(y0, 0.0, h);
  const bool c0 = pen(y0) > 0.0;
  if ((pen(y1) > 0.0) != c0) {
    double lo = 0.0, hi = h;
    detail::Kinematic yhi = y1;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const detail::Kinematic ym = advance(y0, 0.0, mid);
      if ((pen(ym) > 0.0) == c0) {
        lo = mid;
      } else {
        hi = mid;
        yhi = ym;
      }
      if (std::abs(pen(yhi)) <= cfg.contact_bisection_tol || hi - lo < 1e-15) break;
    }
    y1 = hi < h ? advance(yhi, hi, h - hi) : yhi;
  }

  PlantState out;
  out.p_e = y1.p;
  out.v_e = y1.v;
  out.phi = attitude_track(state.phi, phi_r, cfg.tau_att, h);
  out.t = state.t + h;
  out.in_contact = pen(y1) > 0.0;
  if (!(out.p_e.allFinite() && out.v_e.allFinite()))
    throw NonFiniteInput("plant::step: state became non-finite");
  return out;
}

struct Measurement {
  double x_f = 0.0, x_dot_f = 0.0;
  Vec2 x_m = Vec2::Zero(), x_dot_m = Vec2::Zero();
  double f_f = 0.0;
};

// Projects the true state onto force/motion coordinates, adding zero-mean
// Gaussian noise from `rng` when cfg.noise is nonzero.
template <typename Rng>
Measurement measure(const PlantState& st, const SurfaceModel& s,
                    const PlantConfig& cfg, Rng& rng) {
  Measurement m;
  m.x_f = s.B_f.dot(st.p_e);
  m.x_dot_f = s.B_f.dot(st.v_e);
  m.x_m = s.B_m.transpose() * st.p_e;
  m.x_dot_m = s.B_m.transpose() * st.v_e;
  m.f_f = contact_force(m.x_f, m.x_dot_f, s);
  const SensorNoise& n = cfg.noise;
  auto add = [&rng](double sd) {
    return sd > 0.0 ? std::normal_distribution<double>(0.0, sd)(rng) : 0.0;
  };
  m.x_f += add(n.position);
  m.x_dot_f += add(n.velocity);
  for (int i = 0; i < 2; ++i) {
    m.x_m[i] += add(n.position);
    m.x_dot_m[i] += add(n.velocity);
  }
  m.f_f += add(n.force);
  return m;
}

inline Measurement measure(const PlantState& st, const SurfaceModel& s) {
  PlantConfig quiet;
  std::mt19937_64 unused;
  return measure(st, s, quiet, unused);
}

// Multirotor centre-of-mass position implied by the frozen arm offset.
inline Vec3 com_position(const PlantState& st, const PlantConfig& cfg) {
  return st.p_e - rotation(st.phi) * cfg.d;
}

}  // namespace uam

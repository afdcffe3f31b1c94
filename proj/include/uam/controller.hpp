#pragma once

// DOB-based switching motion/force control law and thrust/attitude
// extraction.

#include <uam/common.hpp>
#include <uam/plant.hpp>
#include <uam/reference.hpp>

#include <limits>

namespace uam {

struct GainSet {
  double k_p = 23.5;
  double k_d = 19.5;
  Mat2 K_mp = 23.5 * Mat2::Identity();
  Mat2 K_md = 19.5 * Mat2::Identity();
  double k_f = 0.1;
  double b_f = 19.5;
  double L_f = 10.0;
  Mat2 L_m = 10.0 * Mat2::Identity();
  double m_bar = 4.0;
  double g_bar = 9.81;

  bool valid() const {
    auto pd = [](const Mat2& m) {
      return (m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12 &&
             Eigen::SelfAdjointEigenSolver<Mat2>(m).eigenvalues().minCoeff() > 0.0;
    };
    return k_p > 0 && k_d > 0 && k_f > 0 && b_f > 0 && L_f > 0 && m_bar > 0 &&
           pd(K_mp) && pd(K_md) && pd(L_m);
  }
};

// Observer internal state. The previous-sample fields hold what the
// observer saw at the start of the current control interval.
struct DOBState {
  double z_f = 0.0;
  Vec2 z_m = Vec2::Zero();
  bool primed = false;
  double prev_x_dot_f = 0.0;
  Vec2 prev_x_dot_m = Vec2::Zero();
  double prev_f_f = 0.0;
};

struct DOBOutput {
  DOBState state;
  double delta_f_hat = 0.0;
  Vec2 delta_m_hat = Vec2::Zero();
};

namespace detail {

// Exact propagation of z' = -L z + L w(t) over h, with w linear between the
// samples w0, w1: z1 = a z0 + beta0 w0 + beta1 w1.
struct DobWeights {
  Mat2 a, beta0, beta1;
};

inline DobWeights dob_weights(const Mat2& L, double h) {
  DobWeights w;
  w.a = sym_matrix_function<2>(L, [h](double l) { return std::exp(-l * h); });
  w.beta1 = sym_matrix_function<2>(L, [h](double l) {
    const double x = l * h;
    // 1 - (1 - e^{-x})/x, series near zero
    return x < 1e-6 ? x / 2.0 : 1.0 - (-std::expm1(-x)) / x;
  });
  w.beta0 = Mat2::Identity() - w.a - w.beta1;
  return w;
}

}  // namespace detail

// Advances both observers over the control interval that just ended.
// u_bar_f/u_bar_m are the inputs held during that interval; `meas` is the
// sample at its end. The contact-force channel is used only in contact.
inline DOBOutput dob_update(const DOBState& dob, const Measurement& meas,
                            double u_bar_f, const Vec2& u_bar_m, const GainSet& gains,
                            bool in_contact, const SurfaceModel& surface, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dob_update: dt <= 0");
  const double m = gains.m_bar;
  const double grav_f = m * gains.g_bar * surface.B_f.dot(kE3);
  const Vec2 grav_m = m * gains.g_bar * (surface.B_m.transpose() * kE3);
  const double f_now = in_contact ? meas.f_f : 0.0;

  DOBOutput out;
  out.state = dob;
  DOBState& s = out.state;
  if (s.primed) {
    const double Lf = gains.L_f;
    const double a = std::exp(-Lf * dt);
    const double x = Lf * dt;
    const double b1 = 1.0 - (-std::expm1(-x)) / x;
    const double b0 = 1.0 - a - b1;
    const double w0 = grav_f - s.prev_f_f - u_bar_f - m * Lf * s.prev_x_dot_f;
    const double w1 = grav_f - f_now - u_bar_f - m * Lf * meas.x_dot_f;
    s.z_f = a * s.z_f + b0 * w0 + b1 * w1;

    const detail::DobWeights W = detail::dob_weights(gains.L_m, dt);
    const Vec2 v0 = grav_m - u_bar_m - m * (gains.L_m * s.prev_x_dot_m);
    const Vec2 v1 = grav_m - u_bar_m - m * (gains.L_m * meas.x_dot_m);
    s.z_m = W.a * s.z_m + W.beta0 * v0 + W.beta1 * v1;
  }
  s.primed = true;
  s.prev_x_dot_f = meas.x_dot_f;
  s.prev_x_dot_m = meas.x_dot_m;
  s.prev_f_f = f_now;

  out.delta_f_hat = s.z_f + m * gains.L_f * meas.x_dot_f;
  out.delta_m_hat = s.z_m + m * (gains.L_m * meas.x_dot_m);
  return out;
}

// Desired input along B_f. `gravity_proj` is B_f^T e3.
inline double control_force(const ReferenceState& ref, const Measurement& meas,
                            double delta_f_hat, const GainSet& g, Mode mode,
                            double gravity_proj) {
  const double e_x = ref.x_fr - meas.x_f;
  const double e_x_dot = ref.x_fr_dot - meas.x_dot_f;
  const double feed = g.m_bar * ref.x_fr_ddot + g.m_bar * g.g_bar * gravity_proj - delta_f_hat;
  if (mode == Mode::Free) return feed + g.k_d * e_x_dot + g.k_p * e_x;
  const double e_f = ref.f_fr - meas.f_f;
  return feed - ref.f_fr - g.k_f * e_f + g.b_f * e_x_dot;
}

// Desired input in the motion plane. `gravity_proj` is B_m^T e3.
inline Vec2 control_motion(const ReferenceState& ref, const Measurement& meas,
                           const Vec2& delta_m_hat, const GainSet& g,
                           const Vec2& gravity_proj) {
  const Vec2 e_x = ref.x_mr - meas.x_m;
  const Vec2 e_x_dot = ref.x_mr_dot - meas.x_dot_m;
  return g.m_bar * ref.x_mr_ddot + g.K_md * e_x_dot + g.K_mp * e_x +
         g.m_bar * g.g_bar * gravity_proj - delta_m_hat;
}

inline Vec3 compose_u(double u_bar_f, const Vec2& u_bar_m, const SurfaceModel& s) {
  return s.B_f * u_bar_f + s.B_m * u_bar_m;
}

struct SaturatedInput {
  Vec3 u = Vec3::Zero();
  bool saturated = false;
};

// Limits the desired input to what the multirotor can produce: vertical
// component in [v_min, ceiling], tilt of the thrust vector at most
// max_tilt, and total magnitude at most ceiling (horizontal part scaled).
inline SaturatedInput saturate_input(const Vec3& u_bar_e, double ceiling, double max_tilt,
                                     double v_min = 1e-3) {
  require_finite("saturate_input", u_bar_e);
  SaturatedInput s{u_bar_e, false};
  if (s.u.z() < v_min) {
    s.u.z() = v_min;
    s.saturated = true;
  }
  if (s.u.z() > ceiling) {
    s.u.z() = ceiling;
    s.saturated = true;
  }
  double h_max = std::tan(max_tilt) * s.u.z();
  if (std::isfinite(ceiling))
    h_max = std::min(h_max, std::sqrt(std::max(0.0, ceiling * ceiling - s.u.z() * s.u.z())));
  const double h = std::hypot(s.u.x(), s.u.y());
  if (h > h_max) {
    const double k = h_max / h;
    s.u.x() *= k;
    s.u.y() *= k;
    s.saturated = true;
  }
  return s;
}

struct ThrustCommand {
  double thrust = 0.0;
  double roll_r = 0.0;
  double pitch_r = 0.0;
};

// Total thrust and roll/pitch references realizing u_bar_e. The thrust
// divides by the cosines of the current attitude so that a lagging attitude
// still delivers the commanded vertical component.
inline ThrustCommand extract_inputs(
    const Vec3& u_bar_e, const Vec3& phi,
    double thrust_ceiling = std::numeric_limits<double>::infinity()) {
  require_finite("extract_inputs", u_bar_e, phi);
  if (std::abs(phi.x()) >= kPi / 2 || std::abs(phi.y()) >= kPi / 2)
    throw InfeasibleInput("extract_inputs: attitude at singularity");
  const Vec3 v = yaw_mix(phi.z()) * u_bar_e;
  if (!(v.z() > 0.0)) throw InfeasibleInput("extract_inputs: non-positive vertical thrust");

  ThrustCommand c;
  c.thrust = v.z() / (std::cos(phi.x()) * std::cos(phi.y()));
  const double s_roll = v.y() / c.thrust;
  if (std::abs(s_roll) > 1.0) throw InfeasibleInput("extract_inputs: roll out of range");
  c.roll_r = std::asin(s_roll);
  const double s_pitch = v.x() / (c.thrust * std::cos(c.roll_r));
  if (std::abs(s_pitch) > 1.0) throw InfeasibleInput("extract_inputs: pitch out of range");
  c.pitch_r = std::asin(s_pitch);
  if (c.thrust > thrust_ceiling) throw InfeasibleInput("extract_inputs: thrust above ceiling");
  return c;
}

}  // namespace uam

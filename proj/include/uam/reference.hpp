#pragma once

// Reference smoothing for the force-direction position, the normal force and
// the motion-plane position. Every generator is linear with setpoints and
// environment estimates held over a step, so steps use the exact
// zero-order-hold discretization (the contact generator is stiff: k/b can
// reach 5000 1/s).

#include <uam/common.hpp>
#include <uam/estimator.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <cassert>

namespace uam {

enum class Mode { Free, Contact };

inline const char* to_string(Mode m) { return m == Mode::Free ? "free" : "contact"; }

struct ReferenceState {
  double x_fr = 0.0, x_fr_dot = 0.0, x_fr_ddot = 0.0;
  double f_fr = 0.0, f_fr_dot = 0.0;
  Vec2 x_mr = Vec2::Zero(), x_mr_dot = Vec2::Zero(), x_mr_ddot = Vec2::Zero();
  Mode mode = Mode::Free;
};

namespace detail {

// Critically damped second-order smoother toward `target`, exact over dt.
inline void smooth2(double& x, double& v, double target, double omega, double dt) {
  Eigen::Matrix3d A;
  A << 0, 1, 0, -omega * omega, -2 * omega, omega * omega, 0, 0, 0;
  const Eigen::Matrix3d E = (A * dt).exp();
  const Eigen::Vector3d s = E * Eigen::Vector3d{x, v, target};
  x = s[0];
  v = s[1];
}

inline double smooth2_accel(double x, double v, double target, double omega) {
  return -2.0 * omega * v - omega * omega * (x - target);
}

inline void motion_step(ReferenceState& r, const Vec2& x_md, double omega, double dt) {
  for (int i = 0; i < 2; ++i) {
    smooth2(r.x_mr[i], r.x_mr_dot[i], x_md[i], omega, dt);
    r.x_mr_ddot[i] = smooth2_accel(r.x_mr[i], r.x_mr_dot[i], x_md[i], omega);
  }
}

}  // namespace detail

inline ReferenceState free_step(const ReferenceState& ref, double x_fd,
                                const Vec2& x_md, double omega_n, double dt) {
  assert(ref.mode == Mode::Free);
  if (!(omega_n > 0.0)) throw std::invalid_argument("free_step: omega_n <= 0");
  ReferenceState r = ref;
  detail::smooth2(r.x_fr, r.x_fr_dot, x_fd, omega_n, dt);
  r.x_fr_ddot = detail::smooth2_accel(r.x_fr, r.x_fr_dot, x_fd, omega_n);
  r.f_fr = 0.0;
  r.f_fr_dot = 0.0;
  detail::motion_step(r, x_md, omega_n, dt);
  return r;
}

// Force reference smoothed toward f_fd; the position reference follows the
// estimated Kelvin-Voigt model so that it stays consistent with f_fr.
inline ReferenceState contact_step(const ReferenceState& ref, double f_fd,
                                   const Vec2& x_md, const EnvEstimate& est,
                                   double omega_n, double dt) {
  assert(ref.mode == Mode::Contact);
  if (!(est.b_hat > 0.0)) throw std::invalid_argument("contact_step: b_hat <= 0");
  ReferenceState r = ref;
  const double a = est.k_hat / est.b_hat;
  const double ib = 1.0 / est.b_hat;
  const double w = omega_n;
  // state: x_fr, x_fr_dot, f_fr, f_fr_dot, f_fd
  Eigen::Matrix<double, 5, 5> A = Eigen::Matrix<double, 5, 5>::Zero();
  A(0, 1) = 1.0;
  A(1, 1) = -a;
  A(1, 3) = -ib;
  A(2, 3) = 1.0;
  A(3, 2) = -w * w;
  A(3, 3) = -2.0 * w;
  A(3, 4) = w * w;
  const Eigen::Matrix<double, 5, 5> E = (A * dt).exp();
  Eigen::Matrix<double, 5, 1> s;
  s << r.x_fr, r.x_fr_dot, r.f_fr, r.f_fr_dot, f_fd;
  s = E * s;
  r.x_fr = s[0];
  r.x_fr_dot = s[1];
  r.f_fr = s[2];
  r.f_fr_dot = s[3];
  r.x_fr_ddot = -a * r.x_fr_dot - ib * r.f_fr_dot;
  detail::motion_step(r, x_md, omega_n, dt);
  return r;
}

// Hand-off between generators. Position references carry over; entering
// contact starts the force reference at the measured force.
inline ReferenceState switch_mode(const ReferenceState& ref, Mode new_mode,
                                  double measured_force) {
  assert(new_mode != ref.mode);
  ReferenceState r = ref;
  r.mode = new_mode;
  r.f_fr = new_mode == Mode::Contact ? measured_force : 0.0;
  r.f_fr_dot = 0.0;
  return r;
}

}  // namespace uam

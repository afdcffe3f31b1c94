#pragma once

// Reference computations used only by tests. None of these call into the
// library code they check.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace oracle {

// The three no-switching conditions written directly on (k_f, b_f).
inline bool no_switch(int which, double kp, double kd, double kf, double bf, double ke,
                      double be, double m) {
  const double K1 = kp / m, B1 = kd / m;
  const double K2 = (1.0 + kf) * ke / m, B2 = ((1.0 + kf) * be + bf) / m;
  const double dK = K1 - K2, dB = B1 - B2;
  if (which == 3) return dB >= 0.0 && B2 * B2 - 4.0 * K2 >= 0.0;
  if (!(dB < 0.0)) return false;
  const double ratio = dK / dB;
  if (which == 1) {
    const double D = B1 * B1 - 4.0 * K1;
    if (D < 0.0) return false;
    return ratio < 2.0 * K1 / (B1 - std::sqrt(D));
  }
  const double D = B2 * B2 - 4.0 * K2;
  if (D < 0.0) return false;
  return 2.0 * K2 / (B2 + std::sqrt(D)) < ratio;
}

using M2 = Eigen::Matrix2d;
using V2 = Eigen::Vector2d;

inline M2 companion(double K, double B) {
  M2 A;
  A << 0.0, 1.0, -K, -B;
  return A;
}

// First time the trajectory exp(sign*A t) z0 crosses c^T z = 0; returns the
// state there. Exact propagation, bracketing on a fine grid then bisection.
inline std::optional<V2> first_crossing(const M2& A, double sign, const V2& z0, const V2& c,
                                        double t_max, int grid = 20000) {
  const double h = t_max / grid;
  const M2 step = (sign * h * A).exp();
  V2 z = z0;
  const double s0 = c.dot(z0);
  double t = 0.0;
  for (int i = 0; i < grid; ++i) {
    const V2 zn = step * z;
    // Diverged or decayed to nothing: the line is not reached.
    if (!zn.allFinite() || zn.norm() > 1e12 || zn.norm() < 1e-12) return std::nullopt;
    if ((c.dot(zn) > 0.0) != (s0 > 0.0)) {
      double lo = 0.0, hi = h;
      V2 zl = z;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const V2 zm = (sign * mid * A).exp() * zl;
        if ((c.dot(zm) > 0.0) == (s0 > 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return (sign * hi * A).exp() * zl;
    }
    z = zn;
    t += h;
  }
  return std::nullopt;
}

// One switching cycle of the two-mode system: from the line
// dK z1 + dB z2 = 0, mode 1 carries the state to the z1 axis, then mode 2
// carries it back to the line. Returns |z_end| / |z_start|, or nothing when
// the cycle does not close within the horizon.
inline std::optional<double> cycle_contraction(double K1, double B1, double K2, double B2) {
  const V2 c{K1 - K2, B1 - B2};
  const V2 e1{1.0, 0.0};
  auto horizon = [](double K, double B) {
    const double D = B * B - 4.0 * K;
    double slow = D >= 0.0 ? 0.5 * (B - std::sqrt(D)) : 0.5 * B;
    const double osc = D < 0.0 ? 2.0 * 3.14159265358979 / (0.5 * std::sqrt(-D)) : 0.0;
    return std::max(40.0 / std::max(slow, 1e-3), 2.0 * osc);
  };
  // Mode 1 run backwards from the axis locates the start on the line.
  const auto start = first_crossing(companion(K1, B1), -1.0, e1, c, horizon(K1, B1));
  const auto end = first_crossing(companion(K2, B2), 1.0, e1, c, horizon(K2, B2));
  if (!start || !end) return std::nullopt;
  return end->norm() / start->norm();
}

enum class Spectrum { Real, Repeated, Complex };

inline const char* name(Spectrum s) {
  return s == Spectrum::Real ? "real" : s == Spectrum::Repeated ? "repeated" : "complex";
}

// Mode parameters with the requested eigenvalue structure.
template <typename Rng>
std::pair<double, double> draw_mode(Spectrum s, Rng& rng) {
  std::uniform_real_distribution<double> uK(0.5, 60.0);
  const double K = uK(rng);
  const double crit = 2.0 * std::sqrt(K);
  switch (s) {
    case Spectrum::Real:
      return {K, crit * std::uniform_real_distribution<double>(1.05, 2.5)(rng)};
    case Spectrum::Repeated:
      return {K, crit};
    case Spectrum::Complex:
      return {K, crit * std::uniform_real_distribution<double>(0.1, 0.95)(rng)};
  }
  return {K, crit};
}

// Closed-form disturbance-observer error for a constant disturbance,
// e(t) = e(0) exp(-L t).
inline double dob_constant_error(double e0, double L, double t) { return e0 * std::exp(-L * t); }

}  // namespace oracle

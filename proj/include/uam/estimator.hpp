#pragma once

// Continuous-time recursive least squares for the Kelvin-Voigt stiffness and
// damping, discretized by explicit Euler at the controller rate.

#include <uam/common.hpp>

#include <algorithm>

namespace uam {

struct EnvBounds {
  double k_min = 50.0, k_max = 500.0;
  double b_min = 0.1, b_max = 1.0;
};

struct RlseParams {
  double mu1 = 0.9996;
  double mu2 = 0.9996;
  double rho_max = 5000.0;
  EnvBounds bounds;
};

struct EnvEstimate {
  double k_hat = 275.0;
  double b_hat = 0.55;
  Mat2 P = 100.0 * Mat2::Identity();

  // Midpoint of the admissible box with P = p0 * I.
  static EnvEstimate initial(const EnvBounds& b, double p0 = 100.0) {
    return {0.5 * (b.k_min + b.k_max), 0.5 * (b.b_min + b.b_max),
            p0 * Mat2::Identity()};
  }
};

inline double max_eigenvalue(const Mat2& P) {
  return Eigen::SelfAdjointEigenSolver<Mat2>(P, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

// One estimator step; call only while in contact. x_fs is the (latched)
// surface coordinate along B_f.
inline EnvEstimate rlse_update(const EnvEstimate& est, double x_f, double x_dot_f,
                               double f_f, double x_fs, const RlseParams& prm,
                               double dt) {
  require_finite("rlse_update", x_f, x_dot_f, f_f, x_fs, dt, est.k_hat, est.b_hat, est.P);
  if (!(dt > 0.0)) throw std::invalid_argument("rlse_update: dt <= 0");

  const Eigen::RowVector2d Y{-(x_f - x_fs), -x_dot_f};
  const Vec2 theta{est.k_hat, est.b_hat};
  const double eps = f_f - Y.dot(theta);

  const Vec2 theta_next = theta + dt * (est.P * Y.transpose() * eps);

  Mat2 P = est.P;
  if (max_eigenvalue(P) <= prm.rho_max) {
    const Mat2 Pdot = prm.mu1 * P - prm.mu2 * P * Y.transpose() * Y * P;
    P += dt * Pdot;
    P = 0.5 * (P + P.transpose());
    // An Euler step can overshoot the freeze threshold or lose definiteness;
    // project the eigenvalues back into (0, rho_max].
    const double floor = 1e-9;
    P = sym_matrix_function<2>(P, [&](double l) {
      return std::clamp(l, floor, prm.rho_max);
    });
    P = 0.5 * (P + P.transpose());
  }

  EnvEstimate out;
  out.k_hat = std::clamp(theta_next[0], prm.bounds.k_min, prm.bounds.k_max);
  out.b_hat = std::clamp(theta_next[1], prm.bounds.b_min, prm.bounds.b_max);
  out.P = P;
  return out;
}

// Debounced contact detection on the measured normal force, latching the
// surface coordinate at the first sample of the detecting run.
class ContactDetector {
 public:
  explicit ContactDetector(double threshold = 0.1, int samples = 3)
      : threshold_(threshold), samples_(samples) {}

  // Returns the debounced contact flag after consuming one sample.
  bool update(double f_f, double x_f) {
    const bool raw = std::abs(f_f) > threshold_;
    if (raw != contact_) {
      if (run_ == 0) candidate_x_ = x_f;
      if (++run_ >= samples_) {
        contact_ = raw;
        run_ = 0;
        if (contact_) x_fs_ = candidate_x_;
      }
    } else {
      run_ = 0;
    }
    return contact_;
  }

  bool in_contact() const { return contact_; }
  double latched_surface() const { return x_fs_; }

 private:
  double threshold_;
  int samples_;
  bool contact_ = false;
  int run_ = 0;
  double candidate_x_ = 0.0;
  double x_fs_ = 0.0;
};

}  // namespace uam

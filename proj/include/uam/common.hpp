#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace uam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

inline constexpr double kPi = 3.14159265358979323846;

inline const Vec3 kE3{0.0, 0.0, 1.0};

struct NonFiniteInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrust/attitude extraction cannot realize the requested input.
struct InfeasibleInput : std::domain_error {
  using std::domain_error::domain_error;
};

inline bool all_finite(double v) { return std::isfinite(v); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename... Ts>
void require_finite(const char* where, const Ts&... values) {
  if (!(all_finite(values) && ...)) {
    throw NonFiniteInput(std::string(where) + ": non-finite input");
  }
}

// Applies a scalar function to the eigenvalues of a symmetric matrix.
template <int N, typename F>
Eigen::Matrix<double, N, N> sym_matrix_function(
    const Eigen::Matrix<double, N, N>& m, F&& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
  Eigen::Matrix<double, N, 1> d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) d[i] = f(d[i]);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace uam

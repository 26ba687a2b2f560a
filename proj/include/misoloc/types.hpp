#ifndef MISOLOC_TYPES_HPP
#define MISOLOC_TYPES_HPP

#include <Eigen/Dense>
#include <complex>

namespace misoloc {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using VecXT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using CVecXT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using CMatXT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

using Vec2 = Vec2T<double>;
using VecX = VecXT<double>;
using MatX = Eigen::MatrixXd;
using CVecX = CVecXT<double>;
using CMatX = CMatXT<double>;
using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, SI exact
inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle difference into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

}  // namespace misoloc

#endif

#pragma once

#include <Eigen/Dense>

#include <numbers>

namespace ptpb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Generalized coordinates of an n-DOF mechanical system.
struct JointState {
  Vec q;   ///< joint positions [rad]
  Vec dq;  ///< joint velocities [rad/s]
};

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline Vec deg2rad(const Vec& deg) { return deg * (kPi / 180.0); }
inline Vec rad2deg(const Vec& rad) { return rad * (180.0 / kPi); }

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace ptpb

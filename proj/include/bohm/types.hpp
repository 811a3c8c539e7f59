#pragma once

#include <complex>

#include <Eigen/Dense>

namespace bohm {

using complex = std::complex<double>;

// Configuration-space quantities live in 2 or 3 dimensions; the fixed
// capacity keeps them off the heap.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using CVec = Eigen::Matrix<complex, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CMat = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

// ODE state: a position plus, optionally, a deviation vector.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace bohm

#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <vector>

namespace cleave {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Positions = std::vector<Vec2>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt3 = std::numbers::sqrt3;

}  // namespace cleave

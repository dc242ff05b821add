#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <optional>

namespace mass_lab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Which side of an interface an evaluation belongs to. Only glued models
// distinguish the two.
enum class Side { exterior, interior };

// Value and first two derivatives of a function of one variable.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

using JetFn = std::function<Jet(double)>;

// Third-order tensor T[k](i, j); used for both dg and Christoffel symbols.
using Tensor3 = std::array<Mat3, 3>;
// Fourth-order tensor T[k][l](i, j) for second derivatives of the metric.
using Tensor4 = std::array<std::array<Mat3, 3>, 3>;

inline Tensor3 zero_tensor3() {
    Tensor3 t;
    for (auto& m : t) m.setZero();
    return t;
}

inline Tensor4 zero_tensor4() {
    Tensor4 t;
    for (auto& row : t)
        for (auto& m : row) m.setZero();
    return t;
}

inline constexpr double pi = 3.141592653589793238462643383279502884;

}  // namespace mass_lab

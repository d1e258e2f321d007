#pragma once

#include <Eigen/Core>

namespace geoplan {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// Tangent vector expressed in the chart basis at an explicit base
/// configuration. Vectors from different base points must not be mixed.
template <typename Scalar>
struct TangentVector {
  Vector<Scalar> base;
  Vector<Scalar> components;
};

}  // namespace geoplan

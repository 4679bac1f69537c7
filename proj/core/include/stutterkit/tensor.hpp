#pragma once

#include <Eigen/Core>

namespace stutterkit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

}  // namespace stutterkit

namespace stutterkit {

using MatRef = Eigen::Ref<const Matrix>;
using RowRef = Eigen::Ref<const RowVector>;

}  // namespace stutterkit

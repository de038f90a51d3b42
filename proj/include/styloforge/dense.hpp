#pragma once

#include <Eigen/Core>

namespace styloforge {

// Parameters and gradients are held in double precision; row-major storage
// matches the on-disk checkpoint layout byte for byte (after f32 narrowing).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

}  // namespace styloforge

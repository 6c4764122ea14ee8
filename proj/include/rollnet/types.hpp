#ifndef ROLLNET_TYPES_HPP
#define ROLLNET_TYPES_HPP

#include <Eigen/Core>

namespace rollnet {

using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A sequence of frames, one row per time step.
using Frames = RowMatrix;

}  // namespace rollnet

#endif  // ROLLNET_TYPES_HPP

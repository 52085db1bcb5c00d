#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

namespace pd {

// n x 3 row-per-vertex position/velocity blocks, double precision throughout.
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

using Index = Eigen::Index;

}  // namespace pd

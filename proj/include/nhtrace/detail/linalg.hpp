#pragma once

#include <Eigen/Dense>

namespace nhtrace::detail {

// Singular values (descending) via LAPACK zgesdd, values-only.
Eigen::VectorXd singular_values_lapack(Eigen::MatrixXcd m);

}  // namespace nhtrace::detail

#include "nhtrace/detail/linalg.hpp"

#include <stdexcept>

#include <lapacke.h>

namespace nhtrace::detail {

Eigen::VectorXd singular_values_lapack(Eigen::MatrixXcd m) {
    const lapack_int rows = lapack_int(m.rows());
    const lapack_int cols = lapack_int(m.cols());
    Eigen::VectorXd s(std::min(rows, cols));
    const lapack_int info = LAPACKE_zgesdd(
        LAPACK_COL_MAJOR, 'N', rows, cols,
        reinterpret_cast<lapack_complex_double*>(m.data()), rows,
        s.data(), nullptr, 1, nullptr, 1);
    if (info != 0)
        throw std::runtime_error("singular_values_lapack: zgesdd failed, info = " +
                                 std::to_string(info));
    return s;
}

}  // namespace nhtrace::detail

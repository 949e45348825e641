#pragma once

#include <string>

#include <Eigen/Dense>

#include "nhtrace/fourier.hpp"
#include "nhtrace/symbol.hpp"

namespace nhtrace {

inline constexpr double kWzFloor = 1e-10;

// Dense matrix of a quantized operator in eigen-coordinates:
//   M(eta, xi) = sum_i w_i sigma(x_i, xi) u_xi(x_i) conj(v_eta(x_i)),
// so that (A f)^(eta) = sum_xi M(eta, xi) fhat(xi). Multipliers stay in
// diagonal form (entries sigma(xi)) and never materialize the matrix.
struct QuantizedOperator {
    const SpectralSystem* sys{nullptr};
    std::string symbol_name;
    double order_m{0.0};
    double rho{1.0};
    double delta{0.0};

    bool is_diagonal{false};
    Eigen::VectorXcd diag;    // K, when diagonal
    Eigen::MatrixXcd matrix;  // K x K, otherwise

    Index size() const { return sys ? sys->size() : 0; }
    Complex entry(Index eta, Index xi) const {
        if (is_diagonal) return eta == xi ? diag[xi] : Complex(0.0);
        return matrix(eta, xi);
    }
    Eigen::VectorXcd diagonal_entries() const {
        return is_diagonal ? diag : Eigen::VectorXcd(matrix.diagonal());
    }
    Eigen::MatrixXcd dense() const {
        if (is_diagonal) return Eigen::MatrixXcd(diag.asDiagonal());
        return matrix;
    }
};

// Op_L(sigma). x-independent symbols produce the diagonal representation.
QuantizedOperator quantize(const Symbol& symbol);
// forces the full quadrature matrix (diagnostics for the diagonality law)
QuantizedOperator quantize_dense(const Symbol& symbol);

QuantizedOperator identity_operator(const SpectralSystem& sys);

// A f = sum_xi u_xi sigma(., xi) fhat(xi)
GridFunction apply(const QuantizedOperator& a, const GridFunction& f);

// matrix product in eigen-coordinates
QuantizedOperator compose(const QuantizedOperator& a, const QuantizedOperator& b);

// sigma_A(x, xi) = u_xi(x)^{-1} (A u_xi)(x). Requires the WZ models
// (circle, twisted); on the Dirichlet grid near-zeros of u_xi are
// regularized by clamping |u| to wz_floor.
Symbol extract_symbol(const QuantizedOperator& a, double wz_floor = kWzFloor);

// per-mode profile sup_x |sigma_{AB}(x, xi) - a(x, xi) b(x, xi)|
Eigen::VectorXd composition_defect(const Symbol& a, const Symbol& b);

// max column sum of quantize(sigma) * quantize(sigma^{-1}) - I, measured
// over the outer dyadic band of the truncation interior (brackets in
// [0.45, 0.9] * max bracket), where the first-order remainder dominates
double parametrix_residual(const Symbol& symbol);

// the operator matrix conjugated into L2-isometric coordinates,
// L^H M L^{-H} with G = L L^H the Cholesky factorization of the u-Gram
// matrix (identity on the self-adjoint models)
Eigen::MatrixXcd l2_isometric_matrix(const QuantizedOperator& a);

// largest singular value in L2-isometric coordinates (Gram-corrected on
// the twisted model, plain SVD on the self-adjoint ones)
double l2_operator_norm(const QuantizedOperator& a);

}  // namespace nhtrace

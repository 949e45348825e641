#include "nhtrace/quantize.hpp"

#include <cmath>
#include <stdexcept>

#include "nhtrace/detail/linalg.hpp"

namespace nhtrace {

namespace {

void require_valid_symbol(const Symbol& s, const char* who) {
    if (s.sys == nullptr) throw std::invalid_argument(std::string(who) + ": unbound symbol");
    if (!s.fully_valid())
        throw std::invalid_argument(std::string(who) +
                                    ": symbol support was reduced by differences");
}

QuantizedOperator operator_shell(const Symbol& s) {
    QuantizedOperator op;
    op.sys = s.sys;
    op.symbol_name = s.name;
    op.order_m = s.order_m;
    op.rho = s.rho;
    op.delta = s.delta;
    return op;
}

Eigen::MatrixXcd dense_quantize_matrix(const Symbol& s) {
    const SpectralSystem& sys = *s.sys;
    const Eigen::MatrixXcd& u = sys.u_table();  // K x N
    const Eigen::MatrixXcd& v = sys.v_table();
    // P(i, xi) = w_i sigma(x_i, xi) u_xi(x_i);  M = conj(V) P
    Eigen::MatrixXcd p(sys.grid_size(), sys.size());
    for (Index j = 0; j < sys.size(); ++j)
        p.col(j) = sys.weights().array() * s.mode_column(j).array() *
                   u.row(j).transpose().array();
    return v.conjugate() * p;
}

}  // namespace

QuantizedOperator quantize(const Symbol& symbol) {
    require_valid_symbol(symbol, "quantize");
    QuantizedOperator op = operator_shell(symbol);
    if (symbol.x_independent) {
        op.is_diagonal = true;
        op.diag = symbol.mult;
        return op;
    }
    op.matrix = dense_quantize_matrix(symbol);
    return op;
}

QuantizedOperator quantize_dense(const Symbol& symbol) {
    require_valid_symbol(symbol, "quantize_dense");
    QuantizedOperator op = operator_shell(symbol);
    op.matrix = dense_quantize_matrix(symbol);
    return op;
}

QuantizedOperator identity_operator(const SpectralSystem& sys) {
    return quantize(make_multiplier(sys, [](std::int64_t) { return Complex(1.0); }, 0.0,
                                    1.0, "identity"));
}

GridFunction apply(const QuantizedOperator& a, const GridFunction& f) {
    if (a.sys == nullptr || f.sys == nullptr)
        throw std::invalid_argument("apply: unbound operator or function");
    if (!a.sys->same_system(*f.sys))
        throw std::invalid_argument("apply: mismatched systems");
    CoeffSequence c = l_fourier(f);
    CoeffSequence out{f.sys, CoeffFlavor::L, Eigen::VectorXcd()};
    if (a.is_diagonal)
        out.values = (a.diag.array() * c.values.array()).matrix();
    else
        out.values = a.matrix * c.values;
    return inverse_l_fourier(out);
}

QuantizedOperator compose(const QuantizedOperator& a, const QuantizedOperator& b) {
    if (!a.sys->same_system(*b.sys)) throw std::invalid_argument("compose: mismatched systems");
    QuantizedOperator op;
    op.sys = a.sys;
    op.symbol_name = a.symbol_name + "*" + b.symbol_name;
    op.order_m = a.order_m + b.order_m;
    op.rho = std::min(a.rho, b.rho);
    op.delta = std::max(a.delta, b.delta);
    if (a.is_diagonal && b.is_diagonal) {
        op.is_diagonal = true;
        op.diag = (a.diag.array() * b.diag.array()).matrix();
    } else if (a.is_diagonal) {
        op.matrix = a.diag.asDiagonal() * b.matrix;
    } else if (b.is_diagonal) {
        op.matrix = a.matrix * b.diag.asDiagonal();
    } else {
        op.matrix = a.matrix * b.matrix;
    }
    return op;
}

Symbol extract_symbol(const QuantizedOperator& a, double wz_floor) {
    const SpectralSystem& sys = *a.sys;
    if (a.is_diagonal) {
        Symbol s = make_multiplier(sys, a.diag, a.order_m, a.rho,
                                   "extracted(" + a.symbol_name + ")");
        s.delta = a.delta;
        return s;
    }
    const bool wz_model = sys.model() != ModelId::dirichlet_interval;
    const Eigen::MatrixXcd& u = sys.u_table();  // K x N
    // (A u_xi) sampled on the grid: column xi of U^T M
    Eigen::MatrixXcd au = u.transpose() * a.matrix;  // N x K
    Symbol s;
    s.sys = &sys;
    s.name = "extracted(" + a.symbol_name + ")";
    s.order_m = a.order_m;
    s.rho = a.rho;
    s.delta = a.delta;
    s.x_independent = false;
    s.valid.assign(sys.size(), 1);
    s.table.resize(sys.grid_size(), sys.size());
    for (Index j = 0; j < sys.size(); ++j) {
        for (Index i = 0; i < sys.grid_size(); ++i) {
            Complex denom = u(j, i);
            const double mag = std::abs(denom);
            if (mag < wz_floor) {
                if (wz_model)
                    throw std::runtime_error(
                        "extract_symbol: |u_xi(x_i)| below wz_floor on a WZ model");
                // Dirichlet near-zero: clamp the magnitude, keep the phase
                denom = (mag == 0.0) ? Complex(wz_floor)
                                     : denom * (wz_floor / mag);
            }
            s.table(i, j) = au(i, j) / denom;
        }
    }
    return s;
}

Eigen::VectorXd composition_defect(const Symbol& a, const Symbol& b) {
    if (!a.sys->same_system(*b.sys))
        throw std::invalid_argument("composition_defect: mismatched systems");
    if (!a.sys->supports_differences())
        throw unsupported_model_error(
            "composition_defect: symbol extraction needs a WZ model");
    if (a.rho < a.delta || b.rho < b.delta)
        throw std::invalid_argument("composition_defect: calculus checks need rho >= delta");
    require_valid_symbol(a, "composition_defect");
    require_valid_symbol(b, "composition_defect");
    const SpectralSystem& sys = *a.sys;
    Symbol sab = extract_symbol(compose(quantize(a), quantize(b)));
    Eigen::VectorXd defect(sys.size());
    for (Index j = 0; j < sys.size(); ++j) {
        const Eigen::VectorXcd product =
            (a.mode_column(j).array() * b.mode_column(j).array()).matrix();
        defect[j] = (sab.mode_column(j) - product).cwiseAbs().maxCoeff();
    }
    return defect;
}

double parametrix_residual(const Symbol& symbol) {
    require_valid_symbol(symbol, "parametrix_residual");
    if (symbol.rho < symbol.delta)
        throw std::invalid_argument("parametrix_residual: calculus checks need rho >= delta");
    if (!std::isfinite(ellipticity_margin(symbol)))
        throw std::invalid_argument("parametrix_residual: vanishing symbol");
    const SpectralSystem& sys = *symbol.sys;

    Symbol inverse = symbol;
    inverse.name = "inv(" + symbol.name + ")";
    inverse.order_m = -symbol.order_m;
    if (inverse.x_independent)
        inverse.mult = inverse.mult.cwiseInverse();
    else
        inverse.table = inverse.table.cwiseInverse();

    QuantizedOperator a = quantize(symbol);
    QuantizedOperator b = quantize(inverse);
    QuantizedOperator ab = compose(a, b);
    if (ab.is_diagonal) {
        Eigen::VectorXcd r = ab.diag;
        r.array() -= 1.0;
        return r.cwiseAbs().maxCoeff();
    }
    Eigen::MatrixXcd r = ab.matrix;
    r.diagonal().array() -= 1.0;

    // measure over the outer half of the interior: there the remainder's
    // <xi>-order is visible and aliasing from the truncation edge is not
    const double bmax = sys.max_bracket();
    double residual = 0.0;
    bool hit = false;
    for (Index j = 0; j < sys.size(); ++j) {
        const double bj = sys.brackets()[j];
        if (bj > 0.9 * bmax || bj < 0.45 * bmax) continue;
        residual = std::max(residual, r.col(j).cwiseAbs().sum());
        hit = true;
    }
    if (!hit) {
        for (Index j = 0; j < sys.size(); ++j) {
            if (sys.brackets()[j] > 0.9 * bmax) continue;
            residual = std::max(residual, r.col(j).cwiseAbs().sum());
        }
    }
    return residual;
}

Eigen::MatrixXcd l2_isometric_matrix(const QuantizedOperator& a) {
    const SpectralSystem& sys = *a.sys;
    if (sys.self_adjoint()) return a.dense();
    Eigen::LLT<Eigen::MatrixXcd> llt(sys.u_gram());
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("l2_isometric_matrix: Gram matrix not positive definite");
    // C = L^H M L^{-H}; for diagonal M the product is a column scaling
    Eigen::MatrixXcd x = llt.matrixL().adjoint();
    if (a.is_diagonal)
        x = x * a.diag.asDiagonal();
    else
        x = Eigen::MatrixXcd(x * a.matrix);
    llt.matrixL().adjoint().solveInPlace<Eigen::OnTheRight>(x);
    return x;
}

double l2_operator_norm(const QuantizedOperator& a) {
    const SpectralSystem& sys = *a.sys;
    if (a.is_diagonal && sys.self_adjoint()) return a.diag.cwiseAbs().maxCoeff();
    Eigen::VectorXd s = detail::singular_values_lapack(l2_isometric_matrix(a));
    return s[0];
}

}  // namespace nhtrace

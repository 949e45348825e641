#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhtrace/quadrature.hpp"

namespace nhtrace {

using Complex = std::complex<double>;
using Index = Eigen::Index;

// Default tolerance for quadrature-backed identities (discrete
// biorthogonality, diagonality of multiplier matrices, ...).
inline constexpr double kQuadTol = 1e-8;

enum class ModelId { dirichlet_interval, periodic_circle, twisted_h };

std::string to_string(ModelId id);
std::optional<ModelId> model_from_string(const std::string& name);

// A truncated model boundary-value problem: eigenvalues and biorthogonal
// eigenfunction pairs {u_xi, v_xi} sampled on a quadrature grid, together
// with the scaling metadata (order nu of the model operator, Weyl
// exponent Q) every downstream computation keys off.
//
// Mode storage order is ascending |lambda|, with the nonnegative label
// first when |lambda_j| == |lambda_{-j}|; brackets are therefore sorted
// nondecreasing. Instances are immutable after construction and safe to
// share read-only across threads.
class SpectralSystem {
  public:
    ModelId model() const { return model_; }
    double nu() const { return nu_; }
    double weyl_q() const { return weyl_q_; }
    double h_param() const { return h_; }  // meaningful for twisted_h only
    int modes_param() const { return modes_param_; }

    Index size() const { return brackets_.size(); }      // truncation size
    Index grid_size() const { return grid_.size(); }

    const Eigen::VectorXd& grid() const { return grid_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const std::vector<std::int64_t>& labels() const { return labels_; }
    const Eigen::VectorXcd& eigenvalues() const { return eigenvalues_; }
    // brackets[j] = (1 + |lambda_j|^2)^(1/(2 nu)), nondecreasing
    const Eigen::VectorXd& brackets() const { return brackets_; }
    double max_bracket() const { return brackets_[brackets_.size() - 1]; }

    double domain_lo() const { return domain_lo_; }
    double domain_hi() const { return domain_hi_; }
    double volume() const { return domain_hi_ - domain_lo_; }

    // true for models whose eigenbasis is L2-orthonormal (u == v)
    bool self_adjoint() const { return model_ != ModelId::twisted_h; }
    // models supporting exact forward differences in the mode label
    bool supports_differences() const { return model_ != ModelId::dirichlet_interval; }
    // fundamental frequency of the admissible difference family
    double fundamental_frequency() const;

    // Eigenfunction samples. Tables are materialized up to a memory
    // budget; above it rows are generated on demand from the closed
    // forms (identical values either way).
    bool samples_stored() const { return samples_stored_; }
    Eigen::VectorXcd u_row(Index j) const;
    Eigen::VectorXcd v_row(Index j) const;
    Complex u_value(Index j, Index i) const;
    Complex v_value(Index j, Index i) const;
    // Full K x N tables (mode-major). Only available when stored.
    const Eigen::MatrixXcd& u_table() const;
    const Eigen::MatrixXcd& v_table() const;

    // Discrete pairing sum_i w_i u_j(x_i) conj(v_k(x_i)).
    Complex pairing(Index j, Index k) const;

    // Storage index of a mode label, or nullopt if outside the truncation.
    std::optional<Index> index_of_label(std::int64_t label) const;

    // Gram matrix of {u_xi} in the quadrature inner product. Identity for
    // self-adjoint models; Toeplitz (computed from offset correlations)
    // for the twisted model.
    Eigen::MatrixXcd u_gram() const;

    // Signature for compatibility checks between derived objects.
    bool same_system(const SpectralSystem& other) const;

    friend SpectralSystem build_dirichlet_interval(int modes, int grid_size);
    friend SpectralSystem build_periodic_circle(int modes, int grid_size);
    friend SpectralSystem build_twisted_model(double h, int modes, int grid_size);
    friend SpectralSystem read_binary(std::istream& in);

  private:
    SpectralSystem() = default;
    Complex eval_u(std::int64_t label, double x) const;
    Complex eval_v(std::int64_t label, double x) const;
    void maybe_materialize();

    ModelId model_{ModelId::dirichlet_interval};
    double nu_{1.0};
    double weyl_q_{1.0};
    double h_{1.0};
    int modes_param_{0};
    double domain_lo_{0.0}, domain_hi_{1.0};
    double norm_u_{1.0}, norm_v_{1.0};  // normalization constants of the pairs

    std::vector<std::int64_t> labels_;
    Eigen::VectorXcd eigenvalues_;
    Eigen::VectorXd brackets_;
    Eigen::VectorXd grid_;
    Eigen::VectorXd weights_;

    bool samples_stored_{false};
    Eigen::MatrixXcd u_samples_;  // K x N, row per mode
    Eigen::MatrixXcd v_samples_;
};

// ---------------------------------------------------------------------------
// Builders (analytic eigendata, no numerical eigensolver)
// ---------------------------------------------------------------------------

// -d^2/dx^2 on [0,1] with Dirichlet conditions: lambda_k = (k pi)^2,
// u_k = v_k = sqrt(2) sin(k pi x), nu = 2, Q = 1. Composite
// Gauss-Legendre grid with `grid_size` nodes. Requires grid_size >= 4*modes.
SpectralSystem build_dirichlet_interval(int modes, int grid_size);

// -i d/dx on [0, 2pi) with periodic conditions: labels {-modes..modes},
// lambda_k = k, u_k = v_k = e^{ikx}/sqrt(2 pi), nu = 1, Q = 1.
// Uniform grid; requires grid_size >= 4*(2*modes+1).
SpectralSystem build_periodic_circle(int modes, int grid_size);

// -i d/dx on [0,1] with u(1) = h u(0), h > 0, h != 1 (non-self-adjoint):
// lambda_j = 2 pi j - i ln h, u_j ~ h^x e^{2 pi i j x}, v_j ~ h^{-x}
// e^{2 pi i j x}, normalized so that (u_j, v_j) = 1 and ||u_j|| = 1
// (then ||v_j|| >= 1). nu = 1, Q = 1. Uniform grid.
SpectralSystem build_twisted_model(double h, int modes, int grid_size);

// ---------------------------------------------------------------------------
// Weyl counting utilities
// ---------------------------------------------------------------------------

// N(lam) = #{ xi in truncation : <xi> <= lam }. Warns (does not fail) when
// lam exceeds 0.9 * max bracket, where the truncated count is biased.
Index weyl_counting(const SpectralSystem& system, double lam);

struct WeylFit {
    double exponent;   // least-squares slope of log N vs log lambda
    double prefactor;  // c in N(lambda) ~ c lambda^exponent
    double r_squared;
};

// Fit over the counting function's jump points inside [lam_lo, lam_hi]
// (at least min_samples of them). Throws if the window leaves the
// reliable counting range or N vanishes in it.
WeylFit fit_weyl_law(const SpectralSystem& system, double lam_lo, double lam_hi,
                     int min_samples = 8);
double fit_weyl_exponent(const SpectralSystem& system, double lam_lo, double lam_hi);

// max over (xi, eta) of |discrete pairing - delta_{xi eta}|
double biorthogonality_check(const SpectralSystem& system);

// ---------------------------------------------------------------------------
// Binary cache format: magic "NHTS", version u32, metadata, then all arrays
// as IEEE-754 binary64 little-endian; complex numbers as (re, im) pairs;
// u/v samples row-major [mode][grid point].
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kBinaryFormatVersion = 1;

void write_binary(const SpectralSystem& system, std::ostream& out);
SpectralSystem read_binary(std::istream& in);

}  // namespace nhtrace

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "nhtrace/quantize.hpp"

namespace nhtrace {

// ---------------------------------------------------------------------------
// Cutoff catalogue
// ---------------------------------------------------------------------------

// psi in the regularized traces Tr(A psi(tE)). The bump is the smooth
// compactly supported profile exp(1 - 1/(1 - ((s-c)/r)^2)) on (c-r, c+r),
// zero outside; the exponential e^{-s} reproduces the heat regularizer.
class CutoffFunction {
  public:
    static CutoffFunction bump(double c = 1.5, double r = 0.5);
    static CutoffFunction exponential();
    static CutoffFunction zero();

    double operator()(double s) const;
    // support reaches s = 0 (not integrable against ds/s)
    bool touches_zero() const;
    // int psi(s) ds/s, by quadrature over the support (bump only)
    double log_moment() const;
    const std::string& name() const { return name_; }

  private:
    enum class Kind { bump, exponential, zero };
    CutoffFunction(Kind kind, double c, double r, std::string name)
        : kind_(kind), c_(c), r_(r), name_(std::move(name)) {}
    Kind kind_;
    double c_, r_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Trace curves
// ---------------------------------------------------------------------------

enum class Regularizer { heat_mq, semigroup_a, cutoff_psi };

// Sampled map t -> trace value. Sums run in ascending bracket order with
// compensated accumulation, so curves are bit-reproducible.
struct TraceCurve {
    const SpectralSystem* sys{nullptr};
    Regularizer regularizer{Regularizer::heat_mq};
    Eigen::VectorXd t;            // strictly increasing
    Eigen::VectorXcd values;
    Eigen::VectorXd tail_fraction;  // largest-mode share of each sum
    double safe_t_floor{0.0};       // smallest grid t with tail below 1e-6
    std::map<std::string, std::string> params;
};

// log-spaced grid from t_lo to t_hi
Eigen::VectorXd make_log_grid(double t_lo, double t_hi, int points_per_decade = 40);

// Tr(A e^{-t M_q}) with M_q the multiplier <xi>^q: the diagonal-kernel
// sum  sum_xi (diag entry of A at xi) e^{-t <xi>^q}. Warns when the
// largest retained mode contributes more than 1e-6 at the smallest t.
TraceCurve heat_trace_curve(const QuantizedOperator& a, double q,
                            const Eigen::VectorXd& t_grid);

// Tr(e^{-tA}) = sum_xi e^{-t sigma(xi)} for a positive elliptic
// multiplier of order m > 0
TraceCurve semigroup_trace_curve(const Symbol& sigma, const Eigen::VectorXd& t_grid);

// Tr(A psi(tE)) = sum_xi psi(t Ehat(xi)) (diag entry of A at xi), for a
// positive elliptic multiplier E of order q > 0. With
// require_log_integrable (the m = -Q plateau check), psi whose support
// touches 0 is rejected.
TraceCurve cutoff_trace_curve(const QuantizedOperator& a, const Symbol& e,
                              const CutoffFunction& psi, const Eigen::VectorXd& t_grid,
                              bool require_log_integrable = false);

// ---------------------------------------------------------------------------
// Asymptotic fits
// ---------------------------------------------------------------------------

enum class FitKind { power_law, log_singularity, expansion };

struct AsymptoticFit {
    FitKind kind{FitKind::power_law};
    double value{0.0};      // exponent (power law) or log coefficient beta
    double intercept{0.0};
    double r_squared{0.0};
    std::pair<double, double> window{0.0, 0.0};
    Eigen::VectorXd coeffs;  // expansion only: a_0 .. a_K
    double condition{0.0};   // expansion basis conditioning
};

// least-squares slope of log|trace| against log t over [t_lo, t_hi]
// (window at least a decade wide with >= 10 points)
AsymptoticFit fit_power_law(const TraceCurve& curve, double t_lo, double t_hi);

// least-squares fit trace ~ -beta ln t + gamma; value = beta
AsymptoticFit fit_log_singularity(const TraceCurve& curve, double t_lo, double t_hi);

// least-squares fit of t^{(Q+m)/q} trace against {1, t^{1/q}, ..., t^{K/q}}
// over [t_lo, t_hi] (defaults to the whole curve); requires m > -Q and a
// self-adjoint model. Ill-conditioned bases are rejected with the
// condition estimate in the message.
AsymptoticFit expansion_coefficients(const TraceCurve& curve, double q, double m,
                                     double bigq, int order_k,
                                     double t_lo = 0.0, double t_hi = 0.0);

// CSV: t, trace_re, trace_im, tail_fraction
void write_csv(const TraceCurve& curve, std::ostream& out);
// JSON: {kind, exponent|coefficient, intercept, r_squared, window, coeffs[]}
void write_fit_json(const AsymptoticFit& fit, std::ostream& out);

}  // namespace nhtrace

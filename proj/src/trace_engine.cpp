#include "nhtrace/trace_engine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "nhtrace/detail/log.hpp"

namespace nhtrace {

// ---------------------------------------------------------------------------
// CutoffFunction
// ---------------------------------------------------------------------------

CutoffFunction CutoffFunction::bump(double c, double r) {
    if (!(r > 0.0) || !(c > 0.0))
        throw std::invalid_argument("CutoffFunction::bump: need c > 0 and r > 0");
    return CutoffFunction(Kind::bump, c, r,
                          "bump(c=" + std::to_string(c) + ",r=" + std::to_string(r) + ")");
}

CutoffFunction CutoffFunction::exponential() {
    return CutoffFunction(Kind::exponential, 0.0, 0.0, "exp(-s)");
}

CutoffFunction CutoffFunction::zero() {
    return CutoffFunction(Kind::zero, 0.0, 0.0, "zero");
}

double CutoffFunction::operator()(double s) const {
    switch (kind_) {
        case Kind::bump: {
            const double u = (s - c_) / r_;
            if (std::abs(u) >= 1.0) return 0.0;
            return std::exp(1.0 - 1.0 / (1.0 - u * u));
        }
        case Kind::exponential:
            return std::exp(-s);
        case Kind::zero:
            return 0.0;
    }
    return 0.0;
}

bool CutoffFunction::touches_zero() const {
    switch (kind_) {
        case Kind::bump: return c_ - r_ <= 0.0;
        case Kind::exponential: return true;
        case Kind::zero: return false;
    }
    return false;
}

double CutoffFunction::log_moment() const {
    if (kind_ == Kind::zero) return 0.0;
    if (touches_zero())
        throw std::domain_error("CutoffFunction::log_moment: support touches 0, "
                                "psi is not integrable against ds/s");
    QuadratureRule rule = gauss_legendre(400, c_ - r_, c_ + r_);
    double sum = 0.0;
    for (Index i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * (*this)(rule.nodes[i]) / rule.nodes[i];
    return sum;
}

// ---------------------------------------------------------------------------
// Trace curves
// ---------------------------------------------------------------------------

namespace {

// Kahan-compensated sum of terms(j), ascending j (= ascending bracket)
template <typename TermFn>
Complex compensated_sum(Index n, TermFn&& term) {
    Complex sum = 0.0, comp = 0.0;
    for (Index j = 0; j < n; ++j) {
        const Complex y = term(j) - comp;
        const Complex t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

void validate_grid(const Eigen::VectorXd& t_grid, const char* who) {
    if (t_grid.size() < 1) throw std::invalid_argument(std::string(who) + ": empty t grid");
    if (!(t_grid[0] > 0.0))
        throw std::invalid_argument(std::string(who) + ": t values must be positive");
    for (Index i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument(std::string(who) + ": t grid must be strictly increasing");
}

void finalize_tail_stats(TraceCurve& curve, const char* who) {
    curve.safe_t_floor = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < curve.t.size(); ++i) {
        if (curve.tail_fraction[i] < 1e-6) {
            curve.safe_t_floor = curve.t[i];
            break;
        }
    }
    if (curve.tail_fraction.size() > 0 && curve.tail_fraction[0] > 1e-6)
        detail::warn(std::string(who) + ": largest mode contributes " +
                     std::to_string(curve.tail_fraction[0]) +
                     " of the sum at the smallest t (truncation bias)");
    if (!curve.values.allFinite())
        throw std::runtime_error(std::string(who) + ": non-finite trace values");
}

}  // namespace

Eigen::VectorXd make_log_grid(double t_lo, double t_hi, int points_per_decade) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo))
        throw std::invalid_argument("make_log_grid: need 0 < t_lo < t_hi");
    const double decades = std::log10(t_hi / t_lo);
    const int n = std::max(2, int(std::ceil(decades * points_per_decade)) + 1);
    Eigen::VectorXd grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = t_lo * std::pow(t_hi / t_lo, double(i) / (n - 1));
    return grid;
}

TraceCurve heat_trace_curve(const QuantizedOperator& a, double q,
                            const Eigen::VectorXd& t_grid) {
    if (!(q > 0.0)) throw std::invalid_argument("heat_trace_curve: q must be positive");
    validate_grid(t_grid, "heat_trace_curve");
    const SpectralSystem& sys = *a.sys;
    const Eigen::VectorXcd d = a.diagonal_entries();
    const Eigen::ArrayXd bq = sys.brackets().array().pow(q);

    TraceCurve curve;
    curve.sys = a.sys;
    curve.regularizer = Regularizer::heat_mq;
    curve.t = t_grid;
    curve.values.resize(t_grid.size());
    curve.tail_fraction.resize(t_grid.size());
    curve.params = {{"q", std::to_string(q)},
                    {"model", to_string(sys.model())},
                    {"symbol", a.symbol_name}};
    const Index n = sys.size();
    for (Index i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        curve.values[i] = compensated_sum(n, [&](Index j) {
            return d[j] * std::exp(-t * bq[j]);
        });
        const double tail = std::abs(d[n - 1]) * std::exp(-t * bq[n - 1]);
        const double total = std::abs(curve.values[i]);
        curve.tail_fraction[i] = total > 0.0 ? tail / total : 0.0;
    }
    finalize_tail_stats(curve, "heat_trace_curve");
    return curve;
}

TraceCurve semigroup_trace_curve(const Symbol& sigma, const Eigen::VectorXd& t_grid) {
    validate_grid(t_grid, "semigroup_trace_curve");
    if (!sigma.x_independent)
        throw std::invalid_argument("semigroup_trace_curve: multiplier symbol required");
    if (!(sigma.order_m > 0.0))
        throw std::invalid_argument("semigroup_trace_curve: order m must be positive");
    if (!std::isfinite(ellipticity_margin(sigma)))
        throw std::invalid_argument("semigroup_trace_curve: symbol is not elliptic");
    for (Index j = 0; j < sigma.mult.size(); ++j)
        if (!(sigma.mult[j].real() > 0.0) || std::abs(sigma.mult[j].imag()) > 1e-12)
            throw std::invalid_argument("semigroup_trace_curve: symbol must be positive");

    const SpectralSystem& sys = *sigma.sys;
    TraceCurve curve;
    curve.sys = sigma.sys;
    curve.regularizer = Regularizer::semigroup_a;
    curve.t = t_grid;
    curve.values.resize(t_grid.size());
    curve.tail_fraction.resize(t_grid.size());
    curve.params = {{"m", std::to_string(sigma.order_m)},
                    {"model", to_string(sys.model())},
                    {"symbol", sigma.name}};
    const Index n = sys.size();
    for (Index i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        curve.values[i] = compensated_sum(n, [&](Index j) {
            return Complex(std::exp(-t * sigma.mult[j].real()), 0.0);
        });
        curve.tail_fraction[i] =
            std::exp(-t * sigma.mult[n - 1].real()) / std::abs(curve.values[i]);
    }
    finalize_tail_stats(curve, "semigroup_trace_curve");
    return curve;
}

TraceCurve cutoff_trace_curve(const QuantizedOperator& a, const Symbol& e,
                              const CutoffFunction& psi, const Eigen::VectorXd& t_grid,
                              bool require_log_integrable) {
    validate_grid(t_grid, "cutoff_trace_curve");
    if (!e.x_independent)
        throw std::invalid_argument("cutoff_trace_curve: E must be a multiplier symbol");
    if (!(e.order_m > 0.0))
        throw std::invalid_argument("cutoff_trace_curve: E must have positive order");
    if (!std::isfinite(ellipticity_margin(e)))
        throw std::invalid_argument("cutoff_trace_curve: E is not elliptic");
    for (Index j = 0; j < e.mult.size(); ++j)
        if (!(e.mult[j].real() > 0.0) || std::abs(e.mult[j].imag()) > 1e-12)
            throw std::invalid_argument("cutoff_trace_curve: E must be positive");
    if (require_log_integrable && psi.touches_zero())
        throw std::invalid_argument(
            "cutoff_trace_curve: psi support touches 0; the m = -Q check needs "
            "psi integrable against ds/s");
    if (!a.sys->same_system(*e.sys))
        throw std::invalid_argument("cutoff_trace_curve: mismatched systems");

    const SpectralSystem& sys = *a.sys;
    const Eigen::VectorXcd d = a.diagonal_entries();

    TraceCurve curve;
    curve.sys = a.sys;
    curve.regularizer = Regularizer::cutoff_psi;
    curve.t = t_grid;
    curve.values.resize(t_grid.size());
    curve.tail_fraction.resize(t_grid.size());
    curve.params = {{"q", std::to_string(e.order_m)},
                    {"model", to_string(sys.model())},
                    {"symbol", a.symbol_name},
                    {"psi", psi.name()}};
    const Index n = sys.size();
    for (Index i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        curve.values[i] = compensated_sum(n, [&](Index j) {
            return d[j] * psi(t * e.mult[j].real());
        });
        const double tail = std::abs(d[n - 1]) * psi(t * e.mult[n - 1].real());
        const double total = std::abs(curve.values[i]);
        curve.tail_fraction[i] = total > 0.0 ? tail / total : 0.0;
    }
    curve.safe_t_floor = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < curve.t.size(); ++i)
        if (curve.tail_fraction[i] < 1e-6) {
            curve.safe_t_floor = curve.t[i];
            break;
        }
    if (!curve.values.allFinite())
        throw std::runtime_error("cutoff_trace_curve: non-finite trace values");
    return curve;
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

namespace {

struct LineFit {
    double slope, intercept, r_squared;
};

LineFit least_squares_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    const double syy = (y.array() - my).square().sum();
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

std::vector<Index> window_indices(const TraceCurve& curve, double t_lo, double t_hi,
                                  const char* who, bool need_decade) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo))
        throw std::invalid_argument(std::string(who) + ": need 0 < t_lo < t_hi");
    if (need_decade && t_hi / t_lo < 10.0 * (1.0 - 1e-9))
        throw std::invalid_argument(std::string(who) + ": window must span at least a decade");
    std::vector<Index> idx;
    for (Index i = 0; i < curve.t.size(); ++i)
        if (curve.t[i] >= t_lo && curve.t[i] <= t_hi) idx.push_back(i);
    if (Index(idx.size()) < 10)
        throw std::invalid_argument(std::string(who) + ": need at least 10 points in the window");
    return idx;
}

}  // namespace

AsymptoticFit fit_power_law(const TraceCurve& curve, double t_lo, double t_hi) {
    std::vector<Index> idx = window_indices(curve, t_lo, t_hi, "fit_power_law", true);
    Eigen::VectorXd x(idx.size()), y(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double mag = std::abs(curve.values[idx[k]]);
        if (!(mag > 0.0))
            throw std::invalid_argument("fit_power_law: non-positive values in the window");
        x[k] = std::log(curve.t[idx[k]]);
        y[k] = std::log(mag);
    }
    LineFit line = least_squares_line(x, y);
    AsymptoticFit fit;
    fit.kind = FitKind::power_law;
    fit.value = line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;
    fit.window = {t_lo, t_hi};
    return fit;
}

AsymptoticFit fit_log_singularity(const TraceCurve& curve, double t_lo, double t_hi) {
    std::vector<Index> idx = window_indices(curve, t_lo, t_hi, "fit_log_singularity", true);
    Eigen::VectorXd x(idx.size()), y(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double re = curve.values[idx[k]].real();
        if (!(re > 0.0))
            throw std::invalid_argument("fit_log_singularity: non-positive values in the window");
        x[k] = std::log(curve.t[idx[k]]);
        y[k] = re;
    }
    LineFit line = least_squares_line(x, y);
    AsymptoticFit fit;
    fit.kind = FitKind::log_singularity;
    fit.value = -line.slope;  // trace ~ -beta ln t + gamma
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;
    fit.window = {t_lo, t_hi};
    return fit;
}

AsymptoticFit expansion_coefficients(const TraceCurve& curve, double q, double m,
                                     double bigq, int order_k, double t_lo, double t_hi) {
    if (!(m > -bigq))
        throw std::invalid_argument("expansion_coefficients: requires m > -Q");
    if (!curve.sys->self_adjoint())
        throw std::invalid_argument(
            "expansion_coefficients: expansion form needs a self-adjoint model");
    if (order_k < 0) throw std::invalid_argument("expansion_coefficients: K must be >= 0");
    if (t_lo == 0.0 && t_hi == 0.0) {
        t_lo = curve.t[0];
        t_hi = curve.t[curve.t.size() - 1];
    }
    std::vector<Index> idx = window_indices(curve, t_lo, t_hi, "expansion_coefficients", false);
    if (Index(idx.size()) < order_k + 2)
        throw std::invalid_argument("expansion_coefficients: not enough points for K");

    Eigen::VectorXd y(idx.size());
    Eigen::MatrixXd basis(idx.size(), order_k + 1);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double t = curve.t[idx[r]];
        y[r] = std::pow(t, (bigq + m) / q) * curve.values[idx[r]].real();
        for (int k = 0; k <= order_k; ++k) basis(r, k) = std::pow(t, double(k) / q);
    }

    // column-equilibrated conditioning guards against a basis the window
    // cannot resolve (K too large for the span)
    Eigen::MatrixXd scaled = basis;
    for (int k = 0; k <= order_k; ++k) scaled.col(k) /= scaled.col(k).norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const double cond = svd.singularValues()(0) /
                        svd.singularValues()(svd.singularValues().size() - 1);
    if (!(cond < 1e10))
        throw std::invalid_argument(
            "expansion_coefficients: ill-conditioned basis (K too large for the window), "
            "condition estimate " + std::to_string(cond));

    Eigen::VectorXd coeffs = basis.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd residual = y - basis * coeffs;
    const double ss_tot = (y.array() - y.mean()).square().sum();

    AsymptoticFit fit;
    fit.kind = FitKind::expansion;
    fit.coeffs = coeffs;
    fit.value = coeffs[0];
    fit.intercept = 0.0;
    fit.r_squared = ss_tot > 0.0 ? 1.0 - residual.squaredNorm() / ss_tot : 1.0;
    fit.window = {t_lo, t_hi};
    fit.condition = cond;
    return fit;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_csv(const TraceCurve& curve, std::ostream& out) {
    out << "t,trace_re,trace_im,tail_fraction\n";
    char buf[128];
    for (Index i = 0; i < curve.t.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", curve.t[i],
                      curve.values[i].real(), curve.values[i].imag(),
                      curve.tail_fraction[i]);
        out << buf;
    }
}

void write_fit_json(const AsymptoticFit& fit, std::ostream& out) {
    nlohmann::json j;
    switch (fit.kind) {
        case FitKind::power_law:
            j["kind"] = "power_law";
            j["exponent"] = fit.value;
            break;
        case FitKind::log_singularity:
            j["kind"] = "log_singularity";
            j["coefficient"] = fit.value;
            break;
        case FitKind::expansion:
            j["kind"] = "expansion";
            j["coefficient"] = fit.value;
            break;
    }
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["window"] = {fit.window.first, fit.window.second};
    j["coeffs"] = std::vector<double>(fit.coeffs.data(), fit.coeffs.data() + fit.coeffs.size());
    if (fit.kind == FitKind::expansion) j["condition"] = fit.condition;
    out << j.dump(2) << "\n";
}

}  // namespace nhtrace

#include "nhtrace/symbol.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace nhtrace {

Eigen::VectorXcd Symbol::mode_column(Index mode_j) const {
    if (x_independent)
        return Eigen::VectorXcd::Constant(sys->grid_size(), mult[mode_j]);
    return table.col(mode_j);
}

bool Symbol::fully_valid() const {
    for (auto v : valid)
        if (!v) return false;
    return true;
}

Symbol Symbol::scaled(Complex c) const {
    Symbol out = *this;
    if (x_independent)
        out.mult *= c;
    else
        out.table *= c;
    return out;
}

Symbol make_multiplier(const SpectralSystem& sys, Eigen::VectorXcd values_per_mode,
                       double m, double rho, const std::string& name) {
    if (values_per_mode.size() != sys.size())
        throw std::invalid_argument("make_multiplier: one value per retained mode required");
    if (!values_per_mode.allFinite())
        throw std::invalid_argument("make_multiplier: non-finite values");
    Symbol s;
    s.sys = &sys;
    s.name = name;
    s.order_m = m;
    s.rho = rho;
    s.x_independent = true;
    s.mult = std::move(values_per_mode);
    s.valid.assign(sys.size(), 1);
    return s;
}

Symbol make_multiplier(const SpectralSystem& sys,
                       const std::function<Complex(std::int64_t)>& g,
                       double m, double rho, const std::string& name) {
    Eigen::VectorXcd values(sys.size());
    for (Index j = 0; j < sys.size(); ++j) values[j] = g(sys.labels()[j]);
    return make_multiplier(sys, std::move(values), m, rho, name);
}

Symbol bracket_power(const SpectralSystem& sys, double s) {
    Eigen::VectorXcd values = sys.brackets().array().pow(s).cast<Complex>();
    return make_multiplier(sys, std::move(values), s, 1.0,
                           "bracket^" + std::to_string(s));
}

Symbol make_symbol(const SpectralSystem& sys,
                   const std::function<Complex(double, std::int64_t)>& sigma,
                   double m, double rho, double delta, const std::string& name) {
    Symbol s;
    s.sys = &sys;
    s.name = name;
    s.order_m = m;
    s.rho = rho;
    s.delta = delta;
    s.x_independent = false;
    s.table.resize(sys.grid_size(), sys.size());
    for (Index j = 0; j < sys.size(); ++j)
        for (Index i = 0; i < sys.grid_size(); ++i)
            s.table(i, j) = sigma(sys.grid()[i], sys.labels()[j]);
    if (!s.table.allFinite()) throw std::invalid_argument("make_symbol: non-finite values");
    s.valid.assign(sys.size(), 1);
    return s;
}

Symbol make_random_order_zero_symbol(const SpectralSystem& sys, int x_band,
                                     std::uint64_t seed) {
    if (sys.fundamental_frequency() == 0.0)
        throw unsupported_model_error(
            "make_random_order_zero_symbol: needs a periodic-type model");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double omega = sys.fundamental_frequency();
    const int n_harm = 2 * x_band + 1;
    std::vector<std::array<Complex, 3>> coeff(n_harm);
    for (auto& c : coeff)
        for (auto& z : c) z = Complex(unit(rng), unit(rng)) / double(n_harm);
    return make_symbol(
        sys,
        [&, coeff, omega, x_band](double x, std::int64_t label) {
            const double b =
                std::pow(1.0 + std::norm(Complex(double(label), 0.0)), 0.5);
            const double ratio = double(label) / b;
            Complex sum = 0.0;
            for (int j = -x_band; j <= x_band; ++j) {
                const auto& c = coeff[j + x_band];
                const Complex amp = c[0] + c[1] * ratio + c[2] / b;
                sum += amp * std::polar(1.0, omega * double(j) * x);
            }
            return sum;
        },
        0.0, 1.0, 0.0, "random_order0_" + std::to_string(seed));
}

Symbol difference(const Symbol& symbol, int alpha) {
    if (alpha < 0) throw std::invalid_argument("difference: alpha must be nonnegative");
    const SpectralSystem& sys = *symbol.sys;
    if (!sys.supports_differences())
        throw unsupported_model_error(
            "difference: unsupported model " + to_string(sys.model()) +
            " (no admissible family reduces to exact forward differences)");
    Symbol out = symbol;
    for (int step = 0; step < alpha; ++step) {
        Symbol next = out;
        for (Index j = 0; j < sys.size(); ++j) {
            const std::int64_t label = sys.labels()[j];
            auto up = sys.index_of_label(label + 1);
            if (!up || !out.valid[j] || !out.valid[*up]) {
                next.valid[j] = 0;
                if (next.x_independent)
                    next.mult[j] = 0.0;
                else
                    next.table.col(j).setZero();
                continue;
            }
            if (next.x_independent)
                next.mult[j] = out.mult[*up] - out.mult[j];
            else
                next.table.col(j) = out.table.col(*up) - out.table.col(j);
        }
        out = std::move(next);
    }
    return out;
}

namespace {

// Periodic trigonometric differentiation matrix on the uniform grid of a
// period-P domain (classical cot/csc stencils, exact for band-limited input).
Eigen::MatrixXd periodic_derivative_matrix(Index n, double period) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    const double scale = 2.0 * M_PI / period;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const Index k = i - j;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            const double arg = M_PI * double(k) / double(n);
            if (n % 2 == 0)
                d(i, j) = scale * 0.5 * sign / std::tan(arg);
            else
                d(i, j) = scale * 0.5 * sign / std::sin(arg);
        }
    }
    return d;
}

// Fornberg finite-difference weights for derivative `order` at point x0
// on the given stencil nodes.
Eigen::VectorXd fornberg_weights(double x0, const Eigen::VectorXd& nodes, int order) {
    const Index n = nodes.size();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, order + 1);
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c(0, 0) = 1.0;
    for (Index i = 1; i < n; ++i) {
        const Index mn = std::min<Index>(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (Index j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (Index k = mn; k >= 1; --k)
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (Index k = mn; k >= 1; --k)
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c.col(order);
}

// Order-4 centered first-derivative matrix on an arbitrary node set
// (5-point stencils, one-sided near the ends).
Eigen::MatrixXd fd4_derivative_matrix(const Eigen::VectorXd& nodes) {
    const Index n = nodes.size();
    const Index width = std::min<Index>(5, n);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        Index lo = std::clamp<Index>(i - width / 2, 0, n - width);
        Eigen::VectorXd stencil = nodes.segment(lo, width);
        d.row(i).segment(lo, width) = fornberg_weights(nodes[i], stencil, 1);
    }
    return d;
}

Eigen::MatrixXd derivative_matrix(const SpectralSystem& sys) {
    if (sys.model() == ModelId::dirichlet_interval) return fd4_derivative_matrix(sys.grid());
    return periodic_derivative_matrix(sys.grid_size(), sys.volume());
}

}  // namespace

Symbol x_derivative(const Symbol& symbol, int beta) {
    if (beta < 0) throw std::invalid_argument("x_derivative: beta must be nonnegative");
    if (beta == 0) return symbol;
    if (symbol.x_independent) {
        Symbol out = symbol;
        out.mult.setZero();
        out.name = "d" + std::to_string(beta) + "_dx(" + symbol.name + ")";
        return out;
    }
    Eigen::MatrixXd d = derivative_matrix(*symbol.sys);
    Symbol out = symbol;
    for (int step = 0; step < beta; ++step) out.table = d * out.table;
    out.name = "d" + std::to_string(beta) + "_dx(" + symbol.name + ")";
    return out;
}

double seminorm(const Symbol& symbol, int alpha, int beta, double l) {
    Symbol work = symbol;
    if (alpha > 0) work = difference(work, alpha);
    if (beta > 0) work = x_derivative(work, beta);
    const double exponent = l - symbol.rho * alpha + symbol.delta * beta;
    double sup = 0.0;
    for (Index j = 0; j < work.sys->size(); ++j) {
        if (!work.valid[j]) continue;
        const double scale = std::pow(work.sys->brackets()[j], exponent);
        if (work.x_independent) {
            sup = std::max(sup, std::abs(work.mult[j]) / scale);
        } else {
            sup = std::max(sup, work.table.col(j).cwiseAbs().maxCoeff() / scale);
        }
    }
    return sup;
}

double ellipticity_margin(const Symbol& symbol) {
    double sup = 0.0;
    for (Index j = 0; j < symbol.sys->size(); ++j) {
        if (!symbol.valid[j]) continue;
        const double bm = std::pow(symbol.sys->brackets()[j], symbol.order_m);
        if (symbol.x_independent) {
            const double a = std::abs(symbol.mult[j]);
            if (a == 0.0) return std::numeric_limits<double>::infinity();
            sup = std::max(sup, bm / a);
        } else {
            const double a = symbol.table.col(j).cwiseAbs().minCoeff();
            if (a == 0.0) return std::numeric_limits<double>::infinity();
            sup = std::max(sup, bm / a);
        }
    }
    return sup;
}

void write_csv(const Symbol& symbol, std::ostream& out) {
    out << "x_index,mode_label,re,im\n";
    char buf[112];
    for (Index i = 0; i < symbol.sys->grid_size(); ++i)
        for (Index j = 0; j < symbol.sys->size(); ++j) {
            const Complex v = symbol.value(i, j);
            std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g\n",
                          static_cast<long long>(i),
                          static_cast<long long>(symbol.sys->labels()[j]),
                          v.real(), v.imag());
            out << buf;
        }
}

void write_sidecar(const Symbol& symbol, std::ostream& out) {
    nlohmann::json j;
    j["name"] = symbol.name;
    j["m"] = symbol.order_m;
    j["rho"] = symbol.rho;
    j["delta"] = symbol.delta;
    out << j.dump(2) << "\n";
}

}  // namespace nhtrace

#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhtrace/spectral_system.hpp"

namespace nhtrace {

// Raised by operations whose discrete realization exists only on the
// periodic-type models (mode-label differences, symbol extraction).
struct unsupported_model_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A global symbol sigma(x, xi) tabulated on grid x index set, with the
// order/class metadata (m, rho, delta) the calculus checks read.
// x-independent symbols (multipliers) are kept as a per-mode vector and
// never expanded to a full table.
struct Symbol {
    const SpectralSystem* sys{nullptr};
    std::string name;
    double order_m{0.0};
    double rho{1.0};
    double delta{0.0};

    bool x_independent{false};
    Eigen::VectorXcd mult;    // size K when x_independent
    Eigen::MatrixXcd table;   // N x K otherwise (column per mode)

    // mode-label differences shrink the usable support at the top label;
    // invalid modes are skipped by seminorms and suprema
    std::vector<std::uint8_t> valid;

    Complex value(Index grid_i, Index mode_j) const {
        return x_independent ? mult[mode_j] : table(grid_i, mode_j);
    }
    Eigen::VectorXcd mode_column(Index mode_j) const;
    bool fully_valid() const;
    Symbol scaled(Complex c) const;
};

// sigma(x, xi) = g(xi), constant in x
Symbol make_multiplier(const SpectralSystem& sys,
                       const std::function<Complex(std::int64_t)>& g,
                       double m, double rho = 1.0, const std::string& name = "multiplier");
Symbol make_multiplier(const SpectralSystem& sys, Eigen::VectorXcd values_per_mode,
                       double m, double rho = 1.0, const std::string& name = "multiplier");

// the workhorse multiplier <xi>^s
Symbol bracket_power(const SpectralSystem& sys, double s);

// tabulate sigma(x, label) on grid x index set
Symbol make_symbol(const SpectralSystem& sys,
                   const std::function<Complex(double, std::int64_t)>& sigma,
                   double m, double rho = 1.0, double delta = 0.0,
                   const std::string& name = "symbol");

// Random order-0 symbol, band-limited in x to |j| <= x_band harmonics of
// the model's fundamental frequency, with mild mode dependence. Intended
// for roundtrip and boundedness exercises on the periodic-type models;
// deterministic per seed.
Symbol make_random_order_zero_symbol(const SpectralSystem& sys, int x_band,
                                     std::uint64_t seed);

// alpha-th forward difference in the mode label, sigma(x, k+1) - sigma(x, k),
// iterated; modes at the top of the label range drop out of the support.
// Only the periodic-type models carry an admissible family reducing to
// exact forward differences; the Dirichlet model is rejected.
Symbol difference(const Symbol& symbol, int alpha);

// spectral x-derivative (periodic models) / order-4 finite differences
// (Dirichlet grid), iterated beta times
Symbol x_derivative(const Symbol& symbol, int beta);

// sup over valid (x, xi) of |Delta^alpha D^beta sigma| / <xi>^(l - rho*alpha + delta*beta)
double seminorm(const Symbol& symbol, int alpha, int beta, double l);

// sup over (x, xi) of |<xi>^m sigma(x,xi)^{-1}|; +infinity if sigma vanishes
double ellipticity_margin(const Symbol& symbol);

// CSV: x_index, mode_label, re, im  (multipliers expand across the grid)
void write_csv(const Symbol& symbol, std::ostream& out);
// JSON sidecar carrying (m, rho, delta, name)
void write_sidecar(const Symbol& symbol, std::ostream& out);

}  // namespace nhtrace

#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "nhtrace/spectral_system.hpp"

namespace nhtrace {

// Function sampled on a system's quadrature grid.
struct GridFunction {
    const SpectralSystem* sys{nullptr};
    Eigen::VectorXcd values;
};

enum class CoeffFlavor { L, LStar };

// Coefficient sequence over a system's truncated index set; the flavor
// records which transform produced it.
struct CoeffSequence {
    const SpectralSystem* sys{nullptr};
    CoeffFlavor flavor{CoeffFlavor::L};
    Eigen::VectorXcd values;
};

// fhat(xi) = sum_i w_i f(x_i) conj(v_xi(x_i))
CoeffSequence l_fourier(const GridFunction& f);
// fhat_*(xi) = sum_i w_i f(x_i) conj(u_xi(x_i))
CoeffSequence l_star_fourier(const GridFunction& f);
// f(x_i) = sum_xi c(xi) u_xi(x_i); inverse of l_fourier on the truncation
GridFunction inverse_l_fourier(const CoeffSequence& c);
// sum over modes of c(xi) v_xi(x_i); inverse of l_star_fourier
GridFunction inverse_l_star_fourier(const CoeffSequence& c);

// sum_xi fhat(xi) conj(ghat_*(xi)); equals the quadrature L2 inner
// product (f, g) for band-limited inputs
Complex parseval_pairing(const GridFunction& f, const GridFunction& g);

// quadrature L2 inner product and norm
Complex l2_inner_product(const GridFunction& f, const GridFunction& g);
double l2_norm(const GridFunction& f);

// coefficients multiply: hat(f *_L g) = fhat * ghat
GridFunction l_convolution(const GridFunction& f, const GridFunction& g);

// sqrt of Re sum <xi>^{2s} fhat(xi) conj(fhat_*(xi)); throws if the sum's
// real part drops below -1e-8 (quadrature breakdown)
double sobolev_norm(const GridFunction& f, double s);

// Aliasing aid: fraction of coefficient energy carried by modes with
// <xi> above 0.8 * max bracket. Band-limitation is the caller's
// responsibility; this only reports.
double high_mode_energy_fraction(const GridFunction& f);

// CSV serialization of a coefficient sequence: mode_label, re, im
void write_csv(const CoeffSequence& c, std::ostream& out);

}  // namespace nhtrace

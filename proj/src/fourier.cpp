#include "nhtrace/fourier.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace nhtrace {

namespace {

void require_on_grid(const GridFunction& f, const char* who) {
    if (f.sys == nullptr) throw std::invalid_argument(std::string(who) + ": unbound grid function");
    if (f.values.size() != f.sys->grid_size())
        throw std::invalid_argument(std::string(who) + ": length does not match the system grid");
    if (!f.values.allFinite())
        throw std::invalid_argument(std::string(who) + ": non-finite samples");
}

void require_same_system(const GridFunction& f, const GridFunction& g, const char* who) {
    if (!f.sys->same_system(*g.sys))
        throw std::invalid_argument(std::string(who) + ": mismatched systems");
}

void require_coeffs(const CoeffSequence& c, const char* who) {
    if (c.sys == nullptr) throw std::invalid_argument(std::string(who) + ": unbound coefficients");
    if (c.values.size() != c.sys->size())
        throw std::invalid_argument(std::string(who) + ": length does not match the truncation");
    if (!c.values.allFinite())
        throw std::invalid_argument(std::string(who) + ": non-finite coefficients");
}

}  // namespace

CoeffSequence l_fourier(const GridFunction& f) {
    require_on_grid(f, "l_fourier");
    const SpectralSystem& s = *f.sys;
    Eigen::VectorXcd wf = (s.weights().array() * f.values.array()).matrix();
    Eigen::VectorXcd out(s.size());
    if (s.samples_stored()) {
        out = s.v_table().conjugate() * wf;
    } else {
        for (Index j = 0; j < s.size(); ++j) out[j] = s.v_row(j).dot(wf);
    }
    return CoeffSequence{f.sys, CoeffFlavor::L, std::move(out)};
}

CoeffSequence l_star_fourier(const GridFunction& f) {
    require_on_grid(f, "l_star_fourier");
    const SpectralSystem& s = *f.sys;
    Eigen::VectorXcd wf = (s.weights().array() * f.values.array()).matrix();
    Eigen::VectorXcd out(s.size());
    if (s.samples_stored()) {
        out = s.u_table().conjugate() * wf;
    } else {
        for (Index j = 0; j < s.size(); ++j) out[j] = s.u_row(j).dot(wf);
    }
    return CoeffSequence{f.sys, CoeffFlavor::LStar, std::move(out)};
}

GridFunction inverse_l_fourier(const CoeffSequence& c) {
    require_coeffs(c, "inverse_l_fourier");
    const SpectralSystem& s = *c.sys;
    Eigen::VectorXcd values;
    if (s.samples_stored()) {
        values = s.u_table().transpose() * c.values;
    } else {
        values = Eigen::VectorXcd::Zero(s.grid_size());
        for (Index j = 0; j < s.size(); ++j) values += c.values[j] * s.u_row(j);
    }
    return GridFunction{c.sys, std::move(values)};
}

GridFunction inverse_l_star_fourier(const CoeffSequence& c) {
    require_coeffs(c, "inverse_l_star_fourier");
    const SpectralSystem& s = *c.sys;
    Eigen::VectorXcd values;
    if (s.samples_stored()) {
        values = s.v_table().transpose() * c.values;
    } else {
        values = Eigen::VectorXcd::Zero(s.grid_size());
        for (Index j = 0; j < s.size(); ++j) values += c.values[j] * s.v_row(j);
    }
    return GridFunction{c.sys, std::move(values)};
}

Complex parseval_pairing(const GridFunction& f, const GridFunction& g) {
    require_on_grid(f, "parseval_pairing");
    require_on_grid(g, "parseval_pairing");
    require_same_system(f, g, "parseval_pairing");
    CoeffSequence fh = l_fourier(f);
    CoeffSequence gh = l_star_fourier(g);
    return (fh.values.array() * gh.values.array().conjugate()).sum();
}

Complex l2_inner_product(const GridFunction& f, const GridFunction& g) {
    require_on_grid(f, "l2_inner_product");
    require_on_grid(g, "l2_inner_product");
    require_same_system(f, g, "l2_inner_product");
    return (f.sys->weights().array() * f.values.array() * g.values.array().conjugate()).sum();
}

double l2_norm(const GridFunction& f) {
    require_on_grid(f, "l2_norm");
    return std::sqrt((f.sys->weights().array() * f.values.array().abs2()).sum());
}

GridFunction l_convolution(const GridFunction& f, const GridFunction& g) {
    require_on_grid(f, "l_convolution");
    require_on_grid(g, "l_convolution");
    require_same_system(f, g, "l_convolution");
    CoeffSequence fh = l_fourier(f);
    CoeffSequence gh = l_fourier(g);
    CoeffSequence prod{f.sys, CoeffFlavor::L,
                       (fh.values.array() * gh.values.array()).matrix()};
    return inverse_l_fourier(prod);
}

double sobolev_norm(const GridFunction& f, double s) {
    require_on_grid(f, "sobolev_norm");
    CoeffSequence fh = l_fourier(f);
    CoeffSequence fhs = l_star_fourier(f);
    const Eigen::ArrayXd scale = f.sys->brackets().array().pow(2.0 * s);
    const Complex sum = (scale * fh.values.array() * fhs.values.array().conjugate()).sum();
    if (sum.real() < -1e-8)
        throw std::runtime_error("sobolev_norm: pairing sum has negative real part "
                                 "(quadrature breakdown)");
    return std::sqrt(std::max(0.0, sum.real()));
}

double high_mode_energy_fraction(const GridFunction& f) {
    require_on_grid(f, "high_mode_energy_fraction");
    CoeffSequence fh = l_fourier(f);
    const double edge = 0.8 * f.sys->max_bracket();
    double total = 0.0, high = 0.0;
    for (Index j = 0; j < fh.values.size(); ++j) {
        const double e = std::norm(fh.values[j]);
        total += e;
        if (f.sys->brackets()[j] > edge) high += e;
    }
    return total > 0.0 ? high / total : 0.0;
}

void write_csv(const CoeffSequence& c, std::ostream& out) {
    out << "mode_label,re,im\n";
    char buf[96];
    for (Index j = 0; j < c.values.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g\n",
                      static_cast<long long>(c.sys->labels()[j]),
                      c.values[j].real(), c.values[j].imag());
        out << buf;
    }
}

}  // namespace nhtrace

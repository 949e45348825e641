#include "nhtrace/spectral_system.hpp"

#include <cmath>
#include <limits>
#include <cstring>
#include <iostream>
#include <stdexcept>

#include "nhtrace/detail/log.hpp"

namespace nhtrace {

namespace {

// Materialization budget for the eigenfunction tables. Above this the
// rows are generated on demand; multiplier-path work (heat traces,
// Dixmier sums at large truncations) never touches the tables.
constexpr Index kDenseSampleLimit = 8'000'000;  // entries per table

double bracket_of(Complex lambda, double nu) {
    return std::pow(1.0 + std::norm(lambda), 1.0 / (2.0 * nu));
}

}  // namespace

std::string to_string(ModelId id) {
    switch (id) {
        case ModelId::dirichlet_interval: return "dirichlet_interval";
        case ModelId::periodic_circle: return "periodic_circle";
        case ModelId::twisted_h: return "twisted_h";
    }
    return "unknown";
}

std::optional<ModelId> model_from_string(const std::string& name) {
    if (name == "dirichlet_interval") return ModelId::dirichlet_interval;
    if (name == "periodic_circle") return ModelId::periodic_circle;
    if (name == "twisted_h") return ModelId::twisted_h;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Closed-form eigenfunction evaluation
// ---------------------------------------------------------------------------

Complex SpectralSystem::eval_u(std::int64_t label, double x) const {
    switch (model_) {
        case ModelId::dirichlet_interval:
            return Complex(std::sqrt(2.0) * std::sin(double(label) * M_PI * x), 0.0);
        case ModelId::periodic_circle:
            return std::polar(1.0 / std::sqrt(2.0 * M_PI), double(label) * x);
        case ModelId::twisted_h:
            return norm_u_ * std::pow(h_, x) * std::polar(1.0, 2.0 * M_PI * double(label) * x);
    }
    return {};
}

Complex SpectralSystem::eval_v(std::int64_t label, double x) const {
    if (model_ != ModelId::twisted_h) return eval_u(label, x);
    return norm_v_ * std::pow(h_, -x) * std::polar(1.0, 2.0 * M_PI * double(label) * x);
}

void SpectralSystem::maybe_materialize() {
    const Index entries = size() * grid_size();
    if (entries > kDenseSampleLimit) {
        samples_stored_ = false;
        return;
    }
    u_samples_.resize(size(), grid_size());
    v_samples_.resize(size(), grid_size());
    for (Index j = 0; j < size(); ++j) {
        for (Index i = 0; i < grid_size(); ++i) {
            u_samples_(j, i) = eval_u(labels_[j], grid_[i]);
            v_samples_(j, i) = eval_v(labels_[j], grid_[i]);
        }
    }
    samples_stored_ = true;
}

Eigen::VectorXcd SpectralSystem::u_row(Index j) const {
    if (samples_stored_) return u_samples_.row(j);
    Eigen::VectorXcd row(grid_size());
    for (Index i = 0; i < grid_size(); ++i) row[i] = eval_u(labels_[j], grid_[i]);
    return row;
}

Eigen::VectorXcd SpectralSystem::v_row(Index j) const {
    if (samples_stored_) return v_samples_.row(j);
    Eigen::VectorXcd row(grid_size());
    for (Index i = 0; i < grid_size(); ++i) row[i] = eval_v(labels_[j], grid_[i]);
    return row;
}

Complex SpectralSystem::u_value(Index j, Index i) const {
    if (samples_stored_) return u_samples_(j, i);
    return eval_u(labels_[j], grid_[i]);
}

Complex SpectralSystem::v_value(Index j, Index i) const {
    if (samples_stored_) return v_samples_(j, i);
    return eval_v(labels_[j], grid_[i]);
}

const Eigen::MatrixXcd& SpectralSystem::u_table() const {
    if (!samples_stored_)
        throw std::runtime_error("SpectralSystem: eigenfunction table not materialized at this size");
    return u_samples_;
}

const Eigen::MatrixXcd& SpectralSystem::v_table() const {
    if (!samples_stored_)
        throw std::runtime_error("SpectralSystem: eigenfunction table not materialized at this size");
    return v_samples_;
}

Complex SpectralSystem::pairing(Index j, Index k) const {
    Eigen::VectorXcd uj = u_row(j);
    Eigen::VectorXcd vk = v_row(k);
    return (weights_.array() * uj.array() * vk.array().conjugate()).sum();
}

std::optional<Index> SpectralSystem::index_of_label(std::int64_t label) const {
    if (model_ == ModelId::dirichlet_interval) {
        if (label < 1 || label > modes_param_) return std::nullopt;
        return Index(label - 1);
    }
    // circle/twisted ordering: 0, 1, -1, 2, -2, ...
    if (std::llabs(label) > modes_param_) return std::nullopt;
    if (label == 0) return Index(0);
    return label > 0 ? Index(2 * label - 1) : Index(-2 * label);
}

double SpectralSystem::fundamental_frequency() const {
    switch (model_) {
        case ModelId::periodic_circle: return 1.0;
        case ModelId::twisted_h: return 2.0 * M_PI;
        case ModelId::dirichlet_interval: return 0.0;
    }
    return 0.0;
}

Eigen::MatrixXcd SpectralSystem::u_gram() const {
    const Index n = size();
    if (self_adjoint()) return Eigen::MatrixXcd::Identity(n, n);
    // (u_xi, u_eta) depends only on the label offset: compute the offset
    // correlations once, then fill the Toeplitz-in-label matrix.
    const std::int64_t kmax = modes_param_;
    Eigen::VectorXcd corr(4 * kmax + 1);  // offset m in [-2 kmax, 2 kmax]
    Eigen::ArrayXd envelope = norm_u_ * norm_u_ *
        (grid_.array() * (2.0 * std::log(h_))).exp() * weights_.array();
    for (std::int64_t m = -2 * kmax; m <= 2 * kmax; ++m) {
        Complex sum = 0.0;
        for (Index i = 0; i < grid_size(); ++i)
            sum += envelope[i] * std::polar(1.0, 2.0 * M_PI * double(m) * grid_[i]);
        corr[m + 2 * kmax] = sum;
    }
    Eigen::MatrixXcd gram(n, n);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b)
            gram(a, b) = corr[(labels_[b] - labels_[a]) + 2 * kmax];
    return gram;
}

bool SpectralSystem::same_system(const SpectralSystem& other) const {
    return model_ == other.model_ && modes_param_ == other.modes_param_ &&
           grid_size() == other.grid_size() && h_ == other.h_;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

SpectralSystem build_dirichlet_interval(int modes, int grid_size) {
    if (modes < 1) throw std::invalid_argument("build_dirichlet_interval: modes must be >= 1");
    if (grid_size < 1) throw std::invalid_argument("build_dirichlet_interval: grid_size must be >= 1");
    if (grid_size < 4 * modes)
        throw std::invalid_argument("build_dirichlet_interval: grid_size < 4*modes (anti-aliasing)");

    SpectralSystem s;
    s.model_ = ModelId::dirichlet_interval;
    s.nu_ = 2.0;
    s.weyl_q_ = 1.0;
    s.modes_param_ = modes;
    s.domain_lo_ = 0.0;
    s.domain_hi_ = 1.0;

    QuadratureRule rule = composite_gauss_legendre(grid_size, 0.0, 1.0);
    s.grid_ = rule.nodes;
    s.weights_ = rule.weights;

    s.labels_.resize(modes);
    s.eigenvalues_.resize(modes);
    s.brackets_.resize(modes);
    for (int k = 1; k <= modes; ++k) {
        s.labels_[k - 1] = k;
        s.eigenvalues_[k - 1] = Complex(double(k) * double(k) * M_PI * M_PI, 0.0);
        s.brackets_[k - 1] = bracket_of(s.eigenvalues_[k - 1], s.nu_);
    }
    s.maybe_materialize();
    return s;
}

namespace {

// shared label layout for the circle and twisted models:
// 0, 1, -1, 2, -2, ... (ties |lambda_j| = |lambda_{-j}| broken by the
// nonnegative label, for reproducible orderings downstream)
std::vector<std::int64_t> signed_labels(int modes) {
    std::vector<std::int64_t> labels;
    labels.reserve(2 * modes + 1);
    labels.push_back(0);
    for (int k = 1; k <= modes; ++k) {
        labels.push_back(k);
        labels.push_back(-k);
    }
    return labels;
}

}  // namespace

SpectralSystem build_periodic_circle(int modes, int grid_size) {
    if (modes < 1) throw std::invalid_argument("build_periodic_circle: modes must be >= 1");
    if (grid_size < 1) throw std::invalid_argument("build_periodic_circle: grid_size must be >= 1");
    if (grid_size < 4 * (2 * modes + 1))
        throw std::invalid_argument("build_periodic_circle: grid_size < 4*(2*modes+1)");

    SpectralSystem s;
    s.model_ = ModelId::periodic_circle;
    s.nu_ = 1.0;
    s.weyl_q_ = 1.0;
    s.modes_param_ = modes;
    s.domain_lo_ = 0.0;
    s.domain_hi_ = 2.0 * M_PI;

    QuadratureRule rule = periodic_trapezoid(grid_size, 0.0, 2.0 * M_PI);
    s.grid_ = rule.nodes;
    s.weights_ = rule.weights;

    s.labels_ = signed_labels(modes);
    const Index n = Index(s.labels_.size());
    s.eigenvalues_.resize(n);
    s.brackets_.resize(n);
    for (Index j = 0; j < n; ++j) {
        s.eigenvalues_[j] = Complex(double(s.labels_[j]), 0.0);
        s.brackets_[j] = bracket_of(s.eigenvalues_[j], s.nu_);
    }
    s.maybe_materialize();
    return s;
}

SpectralSystem build_twisted_model(double h, int modes, int grid_size) {
    if (!(h > 0.0)) throw std::invalid_argument("build_twisted_model: h must be positive");
    if (h == 1.0)
        throw std::invalid_argument("build_twisted_model: h = 1 is the periodic model");
    if (modes < 1) throw std::invalid_argument("build_twisted_model: modes must be >= 1");
    if (grid_size < 1) throw std::invalid_argument("build_twisted_model: grid_size must be >= 1");
    if (grid_size < 4 * (2 * modes + 1))
        throw std::invalid_argument("build_twisted_model: grid_size < 4*(2*modes+1)");

    SpectralSystem s;
    s.model_ = ModelId::twisted_h;
    s.nu_ = 1.0;
    s.weyl_q_ = 1.0;
    s.h_ = h;
    s.modes_param_ = modes;
    s.domain_lo_ = 0.0;
    s.domain_hi_ = 1.0;

    QuadratureRule rule = periodic_trapezoid(grid_size, 0.0, 1.0);
    s.grid_ = rule.nodes;
    s.weights_ = rule.weights;

    // Enforce ||u|| = 1 and (u, v) = 1 in the quadrature inner product
    // (the one every downstream identity uses), which leaves ||v|| >= 1.
    // The h^{2x} envelope is not periodic, so its trapezoid sum differs
    // from the exact integral (h^2-1)/(2 ln h) at O(1/N); normalizing
    // against the discrete sum keeps the convention exact on the grid.
    const double norm_hx_sq =
        (s.weights_.array() * (s.grid_.array() * (2.0 * std::log(h))).exp()).sum();
    s.norm_u_ = 1.0 / std::sqrt(norm_hx_sq);
    s.norm_v_ = std::sqrt(norm_hx_sq);

    s.labels_ = signed_labels(modes);
    const Index n = Index(s.labels_.size());
    s.eigenvalues_.resize(n);
    s.brackets_.resize(n);
    const double lnh = std::log(h);
    for (Index j = 0; j < n; ++j) {
        s.eigenvalues_[j] = Complex(2.0 * M_PI * double(s.labels_[j]), -lnh);
        s.brackets_[j] = bracket_of(s.eigenvalues_[j], s.nu_);
    }
    s.maybe_materialize();
    return s;
}

// ---------------------------------------------------------------------------
// Weyl counting
// ---------------------------------------------------------------------------

Index weyl_counting(const SpectralSystem& system, double lam) {
    if (lam > 0.9 * system.max_bracket()) {
        detail::warn("weyl_counting: lambda = " + std::to_string(lam) +
                     " exceeds 0.9 * max bracket; truncation bias likely");
    }
    const Eigen::VectorXd& b = system.brackets();
    const double* begin = b.data();
    const double* end = b.data() + b.size();
    return Index(std::upper_bound(begin, end, lam) - begin);
}

WeylFit fit_weyl_law(const SpectralSystem& system, double lam_lo, double lam_hi,
                     int min_samples) {
    if (!(lam_lo > 0.0) || !(lam_hi > lam_lo))
        throw std::invalid_argument("fit_weyl_law: need 0 < lam_lo < lam_hi");
    if (lam_hi > system.max_bracket())
        throw std::invalid_argument("fit_weyl_law: window exceeds the truncated spectrum");
    if (weyl_counting(system, lam_lo) == 0)
        throw std::invalid_argument("fit_weyl_law: counting function vanishes in the window");

    // Sample the staircase once per step, at the step interval's
    // geometric midpoint: N is exact on the whole step, and the midpoint
    // convention avoids folding the jump quantization into the slope.
    const Eigen::VectorXd& b = system.brackets();
    std::vector<double> lx_v, ly_v;
    for (Index j = 0; j + 1 < b.size(); ++j) {
        if (b[j + 1] == b[j]) continue;  // same step (multiplicity)
        const double mid = std::sqrt(b[j] * b[j + 1]);
        if (mid < lam_lo || mid > lam_hi) continue;
        lx_v.push_back(std::log(mid));
        ly_v.push_back(double(j + 1));  // N on the whole step
    }
    if (int(lx_v.size()) < min_samples)
        throw std::invalid_argument("fit_weyl_law: fewer than " +
                                    std::to_string(min_samples) +
                                    " spectrum points in the window");
    Eigen::Map<Eigen::VectorXd> lx(lx_v.data(), Index(lx_v.size()));
    Eigen::Map<Eigen::VectorXd> counts(ly_v.data(), Index(ly_v.size()));

    // The counting functions carry an O(1) offset (boundary conditions,
    // a central mode) that a finite window folds into the slope; profile
    // it out: minimize the residual of ln(N - d) against ln(lambda) over
    // the offset d by golden-section search.
    const double mx = lx.mean();
    const double sxx = (lx.array() - mx).square().sum();
    auto fit_for = [&](double d, WeylFit& out) {
        Eigen::ArrayXd y = (counts.array() - d).log();
        const double my = y.mean();
        const double sxy = ((lx.array() - mx) * (y - my)).sum();
        const double syy = (y - my).square().sum();
        out.exponent = sxy / sxx;
        out.prefactor = std::exp(my - out.exponent * mx);
        out.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
        return 1.0 - out.r_squared;  // scale-invariant misfit
    };
    const double d_hi = std::min(1.5, counts.minCoeff() - 1.0);
    const double d_lo = -1.5;
    WeylFit fit, trial;
    double best = std::numeric_limits<double>::infinity();
    const int steps = 240;
    for (int i = 0; i <= steps; ++i) {
        const double d = d_lo + (d_hi - d_lo) * double(i) / steps;
        const double misfit = fit_for(d, trial);
        if (misfit < best) {
            best = misfit;
            fit = trial;
        }
    }
    return fit;
}

double fit_weyl_exponent(const SpectralSystem& system, double lam_lo, double lam_hi) {
    return fit_weyl_law(system, lam_lo, lam_hi).exponent;
}

double biorthogonality_check(const SpectralSystem& system) {
    const Index n = system.size();
    double worst = 0.0;
    for (Index j = 0; j < n; ++j) {
        Eigen::VectorXcd uj = system.u_row(j);
        Eigen::ArrayXcd wu = system.weights().array() * uj.array();
        for (Index k = 0; k < n; ++k) {
            Eigen::VectorXcd vk = system.v_row(k);
            const Complex p = (wu * vk.array().conjugate()).sum();
            const double dev = std::abs(p - (j == k ? 1.0 : 0.0));
            worst = std::max(worst, dev);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    put_u64(out, v);
}

void put_i64(std::ostream& out, std::int64_t x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    put_u64(out, v);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    const std::uint64_t v = get_u64(in);
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

std::int64_t get_i64(std::istream& in) {
    const std::uint64_t v = get_u64(in);
    std::int64_t x;
    std::memcpy(&x, &v, 8);
    return x;
}

}  // namespace

void write_binary(const SpectralSystem& s, std::ostream& out) {
    out.write("NHTS", 4);
    put_u32(out, kBinaryFormatVersion);
    put_u32(out, std::uint32_t(s.model()));
    put_f64(out, s.h_param());
    put_f64(out, s.nu());
    put_f64(out, s.weyl_q());
    put_u64(out, std::uint64_t(s.modes_param()));
    put_u64(out, std::uint64_t(s.size()));
    put_u64(out, std::uint64_t(s.grid_size()));
    for (Index j = 0; j < s.size(); ++j) put_i64(out, s.labels()[j]);
    for (Index j = 0; j < s.size(); ++j) {
        put_f64(out, s.eigenvalues()[j].real());
        put_f64(out, s.eigenvalues()[j].imag());
    }
    for (Index j = 0; j < s.size(); ++j) put_f64(out, s.brackets()[j]);
    for (Index i = 0; i < s.grid_size(); ++i) put_f64(out, s.grid()[i]);
    for (Index i = 0; i < s.grid_size(); ++i) put_f64(out, s.weights()[i]);
    for (Index j = 0; j < s.size(); ++j) {
        Eigen::VectorXcd row = s.u_row(j);
        for (Index i = 0; i < s.grid_size(); ++i) {
            put_f64(out, row[i].real());
            put_f64(out, row[i].imag());
        }
    }
    for (Index j = 0; j < s.size(); ++j) {
        Eigen::VectorXcd row = s.v_row(j);
        for (Index i = 0; i < s.grid_size(); ++i) {
            put_f64(out, row[i].real());
            put_f64(out, row[i].imag());
        }
    }
}

SpectralSystem read_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NHTS", 4) != 0)
        throw std::runtime_error("read_binary: bad magic");
    const std::uint32_t version = get_u32(in);
    if (version != kBinaryFormatVersion)
        throw std::runtime_error("read_binary: unsupported format version " +
                                 std::to_string(version));
    SpectralSystem s;
    s.model_ = ModelId(get_u32(in));
    s.h_ = get_f64(in);
    s.nu_ = get_f64(in);
    s.weyl_q_ = get_f64(in);
    s.modes_param_ = int(get_u64(in));
    const Index n_modes = Index(get_u64(in));
    const Index n_grid = Index(get_u64(in));
    if (!in || n_modes <= 0 || n_grid <= 0)
        throw std::runtime_error("read_binary: corrupt header");

    switch (s.model_) {
        case ModelId::dirichlet_interval:
            s.domain_lo_ = 0.0; s.domain_hi_ = 1.0; break;
        case ModelId::periodic_circle:
            s.domain_lo_ = 0.0; s.domain_hi_ = 2.0 * M_PI; break;
        case ModelId::twisted_h:
            s.domain_lo_ = 0.0; s.domain_hi_ = 1.0;
            // norm constants recomputed from the grid after arrays are read
            break;
        default:
            throw std::runtime_error("read_binary: unknown model id");
    }

    s.labels_.resize(n_modes);
    for (Index j = 0; j < n_modes; ++j) s.labels_[j] = get_i64(in);
    s.eigenvalues_.resize(n_modes);
    for (Index j = 0; j < n_modes; ++j) {
        const double re = get_f64(in), im = get_f64(in);
        s.eigenvalues_[j] = Complex(re, im);
    }
    s.brackets_.resize(n_modes);
    for (Index j = 0; j < n_modes; ++j) s.brackets_[j] = get_f64(in);
    s.grid_.resize(n_grid);
    for (Index i = 0; i < n_grid; ++i) s.grid_[i] = get_f64(in);
    s.weights_.resize(n_grid);
    for (Index i = 0; i < n_grid; ++i) s.weights_[i] = get_f64(in);
    if (s.model_ == ModelId::twisted_h) {
        const double nsq =
            (s.weights_.array() * (s.grid_.array() * (2.0 * std::log(s.h_))).exp()).sum();
        s.norm_u_ = 1.0 / std::sqrt(nsq);
        s.norm_v_ = std::sqrt(nsq);
    }

    s.u_samples_.resize(n_modes, n_grid);
    for (Index j = 0; j < n_modes; ++j)
        for (Index i = 0; i < n_grid; ++i) {
            const double re = get_f64(in), im = get_f64(in);
            s.u_samples_(j, i) = Complex(re, im);
        }
    s.v_samples_.resize(n_modes, n_grid);
    for (Index j = 0; j < n_modes; ++j)
        for (Index i = 0; i < n_grid; ++i) {
            const double re = get_f64(in), im = get_f64(in);
            s.v_samples_(j, i) = Complex(re, im);
        }
    if (!in) throw std::runtime_error("read_binary: truncated file");
    s.samples_stored_ = true;
    return s;
}

}  // namespace nhtrace

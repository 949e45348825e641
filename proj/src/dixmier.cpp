#include "nhtrace/dixmier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "nhtrace/detail/linalg.hpp"

namespace nhtrace {

namespace {

constexpr double kGrowthRatio = 1.15;
constexpr double kDecayRatio = 0.85;

struct LineFit {
    double slope, intercept;
};

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    if (sxx == 0.0) return {0.0, my};
    const double slope = ((x.array() - mx) * (y.array() - my)).sum() / sxx;
    return {slope, my - slope * mx};
}

// intercept of the least-squares line through the last `count` points
double extrapolate_tail(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int count) {
    const Index n = x.size();
    const Index k = std::min<Index>(count, n);
    return fit_line(x.tail(k), y.tail(k)).intercept;
}

// Weyl prefactor c in N(lambda) ~ c lambda^Q, fitted over the reliable
// interior with the model's declared exponent Q held fixed. The tail
// integral divides by (Q + m p), which vanishes as p -> 1 at order -Q, so
// even a 1e-4 error in a fitted exponent would blow up there; the
// prefactor is the only robustly fittable quantity.
double fitted_weyl_prefactor(const SpectralSystem& sys) {
    const double bmax = sys.max_bracket();
    const double lo = std::max(sys.brackets()[0] * 1.05, 0.1 * bmax);
    const double hi = 0.9 * bmax;
    const int n = 24;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lam = lo * std::pow(hi / lo, double(i) / (n - 1));
        const Index count = weyl_counting(sys, lam);
        if (count == 0)
            throw std::invalid_argument("fitted_weyl_prefactor: counting function vanishes");
        acc += std::log(double(count)) - sys.weyl_q() * std::log(lam);
    }
    return std::exp(acc / n);
}

void require_positive_multiplier(const Symbol& g, const char* who) {
    if (!g.x_independent)
        throw std::invalid_argument(std::string(who) + ": multiplier symbol required");
    for (Index j = 0; j < g.mult.size(); ++j)
        if (!(g.mult[j].real() > 0.0) || std::abs(g.mult[j].imag()) > 1e-12)
            throw std::invalid_argument(std::string(who) + ": symbol must be positive");
}

void validate_p_grid(const std::vector<double>& p_grid, const char* who) {
    if (p_grid.size() < 3)
        throw std::invalid_argument(std::string(who) + ": need at least 3 p values");
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        if (!(p_grid[i] > 1.0) || !(p_grid[i] <= 2.0))
            throw std::invalid_argument(std::string(who) + ": p values must lie in (1, 2]");
        if (i > 0 && !(p_grid[i] < p_grid[i - 1]))
            throw std::invalid_argument(std::string(who) + ": p grid must descend toward 1");
    }
}

// shared tail-corrected Tauberian accumulation; head(p, j) yields the
// nonnegative per-mode summand
template <typename HeadFn>
TauberianEstimate tauberian_core(const SpectralSystem& sys, double order_m,
                                 const std::vector<double>& p_grid, HeadFn&& head) {
    const double weyl_c = fitted_weyl_prefactor(sys);
    const double weyl_q = sys.weyl_q();
    const double lambda_edge = sys.max_bracket();

    TauberianEstimate est;
    est.p_grid = Eigen::Map<const Eigen::VectorXd>(p_grid.data(), Index(p_grid.size()));
    est.values.resize(est.p_grid.size());
    est.tail_dominated.assign(p_grid.size(), 0);

    // reference band near the edge calibrates the summand amplitude
    // against <xi>^{m p} (the outermost sliver is left out)
    std::vector<Index> band;
    for (Index j = 0; j < sys.size(); ++j)
        if (sys.brackets()[j] >= 0.80 * lambda_edge && sys.brackets()[j] <= 0.95 * lambda_edge)
            band.push_back(j);
    if (band.empty()) band.push_back(sys.size() - 1);

    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        const double p = p_grid[i];
        double sum = 0.0, comp = 0.0;
        for (Index j = 0; j < sys.size(); ++j) {
            const double y = head(p, j) - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        const double decay = weyl_q + order_m * p;  // Q + m p
        if (decay >= -1e-9)
            throw std::invalid_argument(
                "tauberian_estimate: tail integral diverges (Q + m p >= 0); "
                "the operator is outside the trace ideal at this order");
        double amp = 0.0;
        for (Index j : band)
            amp += head(p, j) / std::pow(sys.brackets()[j], order_m * p);
        amp /= double(band.size());
        const double tail =
            amp * weyl_c * weyl_q * std::pow(lambda_edge, decay) / (-decay);
        const double corrected = sum + tail;
        est.values[Index(i)] = (p - 1.0) * corrected;
        if (tail > 0.10 * corrected) est.tail_dominated[i] = 1;
    }

    Eigen::VectorXd x(est.p_grid.size());
    for (Index i = 0; i < x.size(); ++i) x[i] = est.p_grid[i] - 1.0;
    est.limit = extrapolate_tail(x, est.values, 3);
    return est;
}

}  // namespace

std::string to_string(DixmierClass c) {
    switch (c) {
        case DixmierClass::finite_positive: return "finite_positive";
        case DixmierClass::zero: return "zero";
        case DixmierClass::not_in_ideal: return "not_in_ideal";
    }
    return "unknown";
}

Eigen::VectorXd singular_values(const QuantizedOperator& a) {
    const SpectralSystem& sys = *a.sys;
    if (a.is_diagonal && sys.self_adjoint()) {
        Eigen::VectorXd s = a.diag.cwiseAbs();
        std::sort(s.data(), s.data() + s.size(), std::greater<double>());
        return s;
    }
    return detail::singular_values_lapack(l2_isometric_matrix(a));
}

std::vector<Index> default_n_grid(Index truncation, Index lo, int points_per_decade) {
    const Index hi = std::max<Index>(2, Index(0.8 * double(truncation)));
    lo = std::clamp<Index>(lo, 2, hi);
    std::vector<Index> grid;
    const double decades = std::log10(double(hi) / double(lo));
    const int n = std::max(2, int(std::ceil(decades * points_per_decade)) + 1);
    for (int i = 0; i < n; ++i) {
        const Index v = Index(std::llround(
            double(lo) * std::pow(double(hi) / double(lo), double(i) / (n - 1))));
        if (grid.empty() || v > grid.back()) grid.push_back(v);
    }
    return grid;
}

std::vector<double> default_p_grid() { return {1.5, 1.25, 1.1, 1.05, 1.02, 1.01}; }

PartialSumEstimate partial_sum_functional(const Eigen::VectorXd& svals,
                                          const std::vector<Index>& n_grid) {
    if (n_grid.empty()) throw std::invalid_argument("partial_sum_functional: empty N grid");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 2 || double(n_grid[i]) > 0.8 * double(svals.size()) + 1e-9)
            throw std::invalid_argument(
                "partial_sum_functional: N outside the safe range [2, 0.8 * truncation]");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("partial_sum_functional: N grid must increase");
    }
    for (Index n = 1; n < svals.size(); ++n)
        if (svals[n] > svals[n - 1] + 1e-12)
            throw std::invalid_argument("partial_sum_functional: values must be nonincreasing");

    PartialSumEstimate est;
    est.n_grid = n_grid;
    est.values.resize(Index(n_grid.size()));
    double running = 0.0, comp = 0.0;
    Index next = 0;
    std::size_t gi = 0;
    for (Index n = 0; n < svals.size() && gi < n_grid.size(); ++n) {
        const double y = svals[n] - comp;
        const double t = running + y;
        comp = (t - running) - y;
        running = t;
        next = n + 1;
        while (gi < n_grid.size() && n_grid[gi] == next) {
            est.values[Index(gi)] = running / std::log(double(next));
            ++gi;
        }
    }
    Eigen::VectorXd x(Index(n_grid.size()));
    for (Index i = 0; i < x.size(); ++i) x[i] = 1.0 / std::log(double(n_grid[i]));
    est.limit = extrapolate_tail(x, est.values, 3);
    return est;
}

TauberianEstimate tauberian_estimate(const Symbol& g, const std::vector<double>& p_grid) {
    require_positive_multiplier(g, "tauberian_estimate");
    validate_p_grid(p_grid, "tauberian_estimate");
    return tauberian_core(*g.sys, g.order_m, p_grid, [&](double p, Index j) {
        return std::pow(g.mult[j].real(), p);
    });
}

TauberianEstimate tauberian_estimate_xdep(const Symbol& sigma,
                                          const std::vector<double>& p_grid) {
    validate_p_grid(p_grid, "tauberian_estimate_xdep");
    if (sigma.x_independent) return tauberian_estimate(sigma, p_grid);
    const SpectralSystem& sys = *sigma.sys;
    for (Index j = 0; j < sys.size(); ++j) {
        const Eigen::VectorXcd col = sigma.table.col(j);
        for (Index i = 0; i < col.size(); ++i)
            if (col[i].real() < -1e-12 || std::abs(col[i].imag()) > 1e-12)
                throw std::invalid_argument(
                    "tauberian_estimate_xdep: sigma(x, xi) >= 0 required");
    }
    // diagonal kernel weights sum_i w_i sigma(x_i, xi)^p u_xi(x_i) conj(v_xi(x_i));
    // cached per (p, xi) through the closure
    return tauberian_core(sys, sigma.order_m, p_grid, [&](double p, Index j) {
        const Eigen::VectorXcd u = sys.u_row(j);
        const Eigen::VectorXcd v = sys.v_row(j);
        double sum = 0.0;
        for (Index i = 0; i < sys.grid_size(); ++i) {
            const double sp = std::pow(std::max(0.0, sigma.table(i, j).real()), p);
            sum += sys.weights()[i] * sp * (u[i] * std::conj(v[i])).real();
        }
        return sum;
    });
}

DixmierClass classify_partial_sums(const PartialSumEstimate& partial) {
    const Index n = partial.values.size();
    if (n < 2) throw std::invalid_argument("classify_partial_sums: need at least 2 points");
    const Index last = n - 1;
    // compare against the grid point closest to a decade below the end
    const double target = double(partial.n_grid[last]) / 10.0;
    Index ref = 0;
    for (Index i = 0; i < last; ++i)
        if (std::abs(std::log(double(partial.n_grid[i]) / target)) <
            std::abs(std::log(double(partial.n_grid[ref]) / target)))
            ref = i;
    const double f_ref = partial.values[ref];
    const double f_end = partial.values[last];
    if (f_ref <= 0.0) return DixmierClass::zero;
    const double ratio = f_end / f_ref;
    if (ratio >= kGrowthRatio) return DixmierClass::not_in_ideal;
    if (ratio <= kDecayRatio) return DixmierClass::zero;
    return DixmierClass::finite_positive;
}

DixmierClass dixmier_classify(const Symbol& symbol) {
    const SpectralSystem& sys = *symbol.sys;
    if (!symbol.x_independent) {
        for (Index j = 0; j < sys.size(); ++j)
            for (Index i = 0; i < sys.grid_size(); ++i)
                if (symbol.table(i, j).real() < -1e-12 ||
                    std::abs(symbol.table(i, j).imag()) > 1e-12)
                    throw std::invalid_argument(
                        "dixmier_classify: x-dependent symbols must satisfy sigma >= 0");
    }
    Eigen::VectorXd svals = singular_values(quantize(symbol));
    if (svals[0] == 0.0) return DixmierClass::zero;  // identically zero operator
    PartialSumEstimate partial = partial_sum_functional(svals, default_n_grid(svals.size()));
    const DixmierClass measured = classify_partial_sums(partial);

    DixmierClass declared;
    const double gap = symbol.order_m + sys.weyl_q();
    if (std::abs(gap) < 1e-9)
        declared = DixmierClass::finite_positive;
    else
        declared = gap < 0.0 ? DixmierClass::zero : DixmierClass::not_in_ideal;
    if (measured != declared)
        throw std::runtime_error(
            "dixmier_classify: measured partial-sum behavior says " + to_string(measured) +
            " but the declared order m = " + std::to_string(symbol.order_m) +
            " against Q = " + std::to_string(sys.weyl_q()) + " says " + to_string(declared));
    return measured;
}

DixmierEstimate dixmier_estimate(const Symbol& symbol, const std::vector<Index>& n_grid,
                                 const std::vector<double>& p_grid) {
    DixmierEstimate est;
    est.partial = partial_sum_functional(singular_values(quantize(symbol)), n_grid);
    est.tauberian = symbol.x_independent ? tauberian_estimate(symbol, p_grid)
                                         : tauberian_estimate_xdep(symbol, p_grid);
    est.classification = classify_partial_sums(est.partial);
    const double lp = est.partial.limit, lt = est.tauberian.limit;
    const double scale = std::max(std::abs(lp), std::abs(lt));
    est.agreement = scale > 0.0 ? std::abs(lp - lt) / scale : 0.0;
    return est;
}

void write_partial_csv(const PartialSumEstimate& e, std::ostream& out) {
    out << "N,partial_sum\n";
    char buf[64];
    for (std::size_t i = 0; i < e.n_grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g\n",
                      static_cast<long long>(e.n_grid[i]), e.values[Index(i)]);
        out << buf;
    }
}

void write_tauberian_csv(const TauberianEstimate& e, std::ostream& out) {
    out << "p,tauberian_value,tail_dominated\n";
    char buf[80];
    for (Index i = 0; i < e.p_grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6g,%.17g,%d\n", e.p_grid[i], e.values[i],
                      int(e.tail_dominated[std::size_t(i)]));
        out << buf;
    }
}

void write_verdict_json(const DixmierEstimate& e, std::ostream& out) {
    nlohmann::json j;
    j["classification"] = to_string(e.classification);
    j["limit_partial"] = e.partial.limit;
    j["limit_tauberian"] = e.tauberian.limit;
    j["agreement"] = e.agreement;
    out << j.dump(2) << "\n";
}

}  // namespace nhtrace

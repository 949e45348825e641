#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "nhtrace/quantize.hpp"

namespace nhtrace {

enum class DixmierClass { finite_positive, zero, not_in_ideal };
std::string to_string(DixmierClass c);

// log-averaged partial sums (1/ln N) sum_{n<=N} s_n over an N grid, with
// the N -> infinity limit extrapolated linearly in 1/ln N over the last
// three grid points
struct PartialSumEstimate {
    std::vector<Index> n_grid;
    Eigen::VectorXd values;
    double limit{0.0};
};

// (p-1) Tr(A^p) over a p grid descending to 1, truncation tails restored
// by an integral comparison against the fitted counting law; the limit is
// extrapolated linearly in (p-1) over the last three grid points
struct TauberianEstimate {
    Eigen::VectorXd p_grid;
    Eigen::VectorXd values;
    // set where the restored tail carries more than 10% of the sum (the
    // value then leans on the counting-law extrapolation, not on computed
    // spectrum; expected as p -> 1 at order -Q)
    std::vector<std::uint8_t> tail_dominated;
    double limit{0.0};
};

struct DixmierEstimate {
    PartialSumEstimate partial;
    TauberianEstimate tauberian;
    double agreement{0.0};  // |limit_p - limit_t| / max when both finite
    DixmierClass classification{DixmierClass::zero};
};

// singular values of the L2-metric-corrected matrix, nonincreasing
// (same Gram conjugation as l2_operator_norm)
Eigen::VectorXd singular_values(const QuantizedOperator& a);

// log-spaced N grid in [lo, 0.8 * truncation]
std::vector<Index> default_n_grid(Index truncation, Index lo = 16,
                                  int points_per_decade = 8);
// default p grid {1.5, 1.25, 1.1, 1.05, 1.02, 1.01}
std::vector<double> default_p_grid();

PartialSumEstimate partial_sum_functional(const Eigen::VectorXd& svals,
                                          const std::vector<Index>& n_grid);

// multiplier path: Tr(A^p) = sum_xi g(xi)^p
TauberianEstimate tauberian_estimate(const Symbol& g,
                                     const std::vector<double>& p_grid);

// x-dependent path: diagonal-kernel sums of sigma(x, xi)^p (requires
// sigma >= 0 pointwise)
TauberianEstimate tauberian_estimate_xdep(const Symbol& sigma,
                                          const std::vector<double>& p_grid);

// behavior of the log-averaged partial sums over the last decade of N:
// growth -> not_in_ideal, plateau -> finite_positive, decay -> zero
DixmierClass classify_partial_sums(const PartialSumEstimate& partial);

// measurement-based classification with the declared order used as a
// cross-check; a contradiction raises a diagnostic error listing both
DixmierClass dixmier_classify(const Symbol& symbol);

// both estimators plus their relative agreement
DixmierEstimate dixmier_estimate(const Symbol& symbol,
                                 const std::vector<Index>& n_grid,
                                 const std::vector<double>& p_grid);

// CSV tables: (N, partial_sum) and (p, tauberian_value)
void write_partial_csv(const PartialSumEstimate& e, std::ostream& out);
void write_tauberian_csv(const TauberianEstimate& e, std::ostream& out);
// JSON verdict {classification, limit_partial, limit_tauberian, agreement}
void write_verdict_json(const DixmierEstimate& e, std::ostream& out);

}  // namespace nhtrace

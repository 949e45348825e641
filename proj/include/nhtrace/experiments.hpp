#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nhtrace/spectral_system.hpp"

namespace nhtrace {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct ModelSpec {
    ModelId id{ModelId::dirichlet_interval};
    double h{2.0};  // twisted only
    int modes{512};
    int grid{0};  // 0: smallest legal grid for the model
};

// One experiment run: a named recipe plus the model/symbol/regularizer
// parameters it reads. Defaults reproduce the verification suite; a JSON
// config file overrides field by field.
struct ExperimentConfig {
    std::string recipe;
    ModelSpec model;

    std::string symbol_kind{"bracket_power"};
    double symbol_m{0.0};

    double q{1.0};
    std::string psi{"bump"};
    double psi_c{1.5};
    double psi_r{0.5};

    double window_lo{0.0};  // 0: recipe default for the model size
    double window_hi{0.0};
    int points_per_decade{40};

    std::string out_dir{"out"};
    std::string cache_dir{".nhtrace-cache"};
    bool use_cache{true};
    std::uint64_t seed{12345};
    int threads{1};
};

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class CheckMode { absolute, relative, upper_bound, lower_bound };

struct CriterionResult {
    std::string name;
    double measured{0.0};
    double expected{0.0};
    double tolerance{0.0};
    CheckMode mode{CheckMode::absolute};
    // where the expected value comes from: "closed_form",
    // "quadrature_oracle", "direct_sum_oracle", "exact", ...
    std::string provenance;
    bool pass{false};
};

CriterionResult check_absolute(std::string name, double measured, double expected,
                               double tol, std::string provenance);
CriterionResult check_relative(std::string name, double measured, double expected,
                               double rel_tol, std::string provenance);
CriterionResult check_upper(std::string name, double measured, double bound,
                            std::string provenance);
CriterionResult check_lower(std::string name, double measured, double bound,
                            std::string provenance);

struct ExperimentReport {
    std::string recipe;
    std::vector<CriterionResult> criteria;
    double runtime_seconds{0.0};
    bool pass() const;
};

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

const std::vector<std::string>& recipe_names();
std::string recipe_description(const std::string& recipe);

// defaults for a recipe (the verification-suite parameters)
ExperimentConfig default_config(const std::string& recipe);

// parse a JSON config file; unknown fields and invalid values raise
// config_error naming the offending field
ExperimentConfig load_config(const std::string& path);

// execute the recipe end to end, emitting CSV artifacts and report.json
// under config.out_dir
ExperimentReport run(const ExperimentConfig& config);

void write_report_json(const ExperimentReport& report, std::ostream& out);

// ---------------------------------------------------------------------------
// SpectralSystem cache (binary format of the spectral module)
// ---------------------------------------------------------------------------

SpectralSystem build_system(const ModelSpec& spec);
std::string cache_key(const ModelSpec& spec);
// returns false when the system is too large to materialize (nothing is
// written) or on I/O failure
bool cache_put(const std::string& dir, const ModelSpec& spec, const SpectralSystem& sys);
// nullopt on miss, version mismatch, or corruption (corruption warns)
std::optional<SpectralSystem> cache_get(const std::string& dir, const ModelSpec& spec);
// cache-aware build
SpectralSystem obtain_system(const ModelSpec& spec, const ExperimentConfig& config);

}  // namespace nhtrace

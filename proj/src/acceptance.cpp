#include "nhtrace/acceptance.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

namespace nhtrace {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

ExperimentConfig base_config(const std::string& recipe, const AcceptanceOptions& options,
                             int criterion) {
    ExperimentConfig config = default_config(recipe);
    config.out_dir = options.out_dir + "/criterion_" + std::to_string(criterion);
    config.cache_dir = options.cache_dir;
    config.use_cache = options.use_cache;
    config.seed = options.seed;
    return config;
}

void append(AcceptanceCase& c, const ExperimentReport& report) {
    c.checks.insert(c.checks.end(), report.criteria.begin(), report.criteria.end());
}

}  // namespace

std::vector<AcceptanceCase> run_acceptance_suite(const AcceptanceOptions& options) {
    std::vector<AcceptanceCase> cases;
    const ModelSpec dirichlet{ModelId::dirichlet_interval, 2.0, 0, 0};
    const ModelSpec circle{ModelId::periodic_circle, 2.0, 0, 0};
    const ModelSpec twisted{ModelId::twisted_h, 2.0, 0, 0};

    // 1. norm identity on random band-limited functions, all models
    {
        AcceptanceCase c{1, "plancherel identity (3 models, 256 modes, 100 functions)", {}, 0};
        const double t0 = now_seconds();
        for (ModelSpec spec : {dirichlet, circle, twisted}) {
            ExperimentConfig config = base_config("plancherel_suite", options, 1);
            spec.modes = 256;
            config.model = spec;
            append(c, run(config));
        }
        c.runtime_seconds = now_seconds() - t0;
        c.checks.push_back(
            check_upper("runtime (seconds)", c.runtime_seconds, 10.0, "stopwatch"));
        cases.push_back(std::move(c));
    }
    // 2. counting exponent on all models at 512 modes
    {
        AcceptanceCase c{2, "weyl exponent fit (3 models, 512 modes)", {}, 0};
        const double t0 = now_seconds();
        for (ModelSpec spec : {dirichlet, circle, twisted}) {
            ExperimentConfig config = base_config("weyl_fit", options, 2);
            spec.modes = 512;
            config.model = spec;
            append(c, run(config));
        }
        c.runtime_seconds = now_seconds() - t0;
        cases.push_back(std::move(c));
    }
    // 3 and 10 share one calculus run; split by check name
    ExperimentReport calculus;
    {
        ExperimentConfig config = base_config("calculus_checks", options, 10);
        calculus = run(config);
    }
    {
        AcceptanceCase c{3, "quantization roundtrip (circle + twisted, 20 random symbols)",
                         {}, 0};
        for (const auto& check : calculus.criteria)
            if (check.name.rfind("quantization roundtrip", 0) == 0) c.checks.push_back(check);
        cases.push_back(std::move(c));
    }
    // 4. heat-trace exponents over (m, q) on both self-adjoint models
    {
        AcceptanceCase c{4, "heat-trace exponents (m in {0,1}, q in {1,2}, 4096 modes)", {}, 0};
        const double t0 = now_seconds();
        for (ModelSpec spec : {dirichlet, circle}) {
            for (double q : {1.0, 2.0}) {
                for (double m : {0.0, 1.0}) {
                    ExperimentConfig config = base_config("heat_exponent", options, 4);
                    spec.modes = 4096;
                    config.model = spec;
                    config.symbol_m = m;
                    config.q = q;
                    append(c, run(config));
                }
            }
        }
        c.runtime_seconds = now_seconds() - t0;
        c.checks.push_back(
            check_upper("runtime (seconds)", c.runtime_seconds, 30.0, "stopwatch"));
        cases.push_back(std::move(c));
    }
    // 5. log singularity at m = -Q with model selection, both models
    {
        AcceptanceCase c{5, "log singularity at m=-Q (dirichlet 1/pi, circle 2)", {}, 0};
        const double t0 = now_seconds();
        for (ModelSpec spec : {dirichlet, circle}) {
            ExperimentConfig config = base_config("log_singularity", options, 5);
            spec.modes = 4096;
            config.model = spec;
            append(c, run(config));
        }
        c.runtime_seconds = now_seconds() - t0;
        cases.push_back(std::move(c));
    }
    // 6. expansion coefficients of the dirichlet identity trace
    {
        AcceptanceCase c{6, "heat-trace expansion coefficients (dirichlet identity)", {}, 0};
        const double t0 = now_seconds();
        append(c, run(base_config("expansion_coeffs", options, 6)));
        c.runtime_seconds = now_seconds() - t0;
        cases.push_back(std::move(c));
    }
    // 7. cutoff traces: plateau at m=-Q and exponent at m=0
    {
        AcceptanceCase c{7, "cutoff trace plateau and exponent (both models)", {}, 0};
        const double t0 = now_seconds();
        for (ModelSpec spec : {dirichlet, circle}) {
            ExperimentConfig config = base_config("cutoff_trace", options, 7);
            spec.modes = 4096;
            config.model = spec;
            append(c, run(config));
        }
        c.runtime_seconds = now_seconds() - t0;
        cases.push_back(std::move(c));
    }
    // 8. Dixmier two-estimator agreement at 4096 modes
    {
        AcceptanceCase c{8, "dixmier limits agree (dirichlet 1/pi, circle 2, 4096 modes)",
                         {}, 0};
        const double t0 = now_seconds();
        for (ModelSpec spec : {dirichlet, circle}) {
            ExperimentConfig config = base_config("dixmier_multiplier", options, 8);
            spec.modes = 4096;
            config.model = spec;
            append(c, run(config));
        }
        c.runtime_seconds = now_seconds() - t0;
        c.checks.push_back(
            check_upper("runtime (seconds)", c.runtime_seconds, 60.0, "stopwatch"));
        cases.push_back(std::move(c));
    }
    // 9. classification triple and the x-dependent scaling law
    {
        AcceptanceCase c{9, "dixmier classification and x-dependent scaling (circle)", {}, 0};
        const double t0 = now_seconds();
        append(c, run(base_config("dixmier_xdependent", options, 9)));
        c.runtime_seconds = now_seconds() - t0;
        cases.push_back(std::move(c));
    }
    // 10. remaining calculus checks
    {
        AcceptanceCase c{10, "calculus: composition defect, parametrix, operator norms",
                         {}, 0};
        for (const auto& check : calculus.criteria)
            if (check.name.rfind("quantization roundtrip", 0) != 0) c.checks.push_back(check);
        c.runtime_seconds = calculus.runtime_seconds;
        cases.push_back(std::move(c));
    }
    return cases;
}

void print_acceptance(const std::vector<AcceptanceCase>& cases, std::ostream& out) {
    char buf[256];
    for (const auto& c : cases) {
        std::snprintf(buf, sizeof(buf), "[%s] %2d. %s  (%.1fs)\n",
                      c.pass() ? "PASS" : "FAIL", c.id, c.title.c_str(), c.runtime_seconds);
        out << buf;
        for (const auto& check : c.checks) {
            const char* rel;
            switch (check.mode) {
                case CheckMode::absolute: rel = "=="; break;
                case CheckMode::relative: rel = "~="; break;
                case CheckMode::upper_bound: rel = "<="; break;
                case CheckMode::lower_bound: rel = ">="; break;
                default: rel = "?"; break;
            }
            std::snprintf(buf, sizeof(buf), "    %s %-58s %.6g %s %.6g", check.pass ? "ok  " : "FAIL",
                          check.name.c_str(), check.measured, rel, check.expected);
            out << buf;
            if (check.mode == CheckMode::absolute || check.mode == CheckMode::relative) {
                std::snprintf(buf, sizeof(buf), " (tol %.3g%s)", check.tolerance,
                              check.mode == CheckMode::relative ? " rel" : "");
                out << buf;
            }
            out << "  [" << check.provenance << "]\n";
        }
    }
    int passed = 0;
    for (const auto& c : cases) passed += c.pass() ? 1 : 0;
    std::snprintf(buf, sizeof(buf), "%d/%d criteria passed\n", passed, int(cases.size()));
    out << buf;
}

bool all_passed(const std::vector<AcceptanceCase>& cases) {
    for (const auto& c : cases)
        if (!c.pass()) return false;
    return true;
}

}  // namespace nhtrace

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nhtrace/experiments.hpp"

namespace nhtrace {

// One verification case of the end-to-end suite: a titled group of
// criterion checks with its wall-clock budget folded in where one applies.
struct AcceptanceCase {
    int id{0};
    std::string title;
    std::vector<CriterionResult> checks;
    double runtime_seconds{0.0};
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct AcceptanceOptions {
    std::string out_dir{"acceptance-out"};
    std::string cache_dir{".nhtrace-cache"};
    bool use_cache{true};
    std::uint64_t seed{12345};
};

// Runs the whole verification suite (same machinery as the CLI recipes)
// and returns one case per criterion.
std::vector<AcceptanceCase> run_acceptance_suite(const AcceptanceOptions& options = {});

// One pass/fail line per case, detail lines for every check beneath it.
void print_acceptance(const std::vector<AcceptanceCase>& cases, std::ostream& out);
bool all_passed(const std::vector<AcceptanceCase>& cases);

}  // namespace nhtrace

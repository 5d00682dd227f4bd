#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "v2x/optimizer.hpp"
#include "v2x/routing.hpp"
#include "v2x/scenario.hpp"

namespace v2x::cli {

/// One route selector evaluated at its own optimal window.
struct ComparisonRow {
    std::string selector;  // "proposed", "spr" or "gpsr"
    Route route;
    opt::OptimizationOutcome outcome;
};

/// Proposed global routing against the SPR and GPSR routes, all scored under
/// one normalization over the candidate routes plus both baselines.
std::vector<ComparisonRow> compare_selectors(const Scenario& scenario, double alpha,
                                             opt::RateModel model = opt::RateModel::MinOfMeans);

/// 12 significant digits, shortest general notation.
std::string format_number(double value);

/// Node sequence joined with '-'.
std::string format_nodes(const Route& route);

/// Command entry point. `args` excludes the program name. Returns the exit
/// status; results go to `out` (or the --out file), diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace v2x::cli
